#include "dynrisk/encode.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>

namespace dynrisk {

std::size_t EncodedCohort::column_index(std::string_view name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) {
        throw ConfigError("unknown feature '" + std::string{name} + "'");
    }
    return static_cast<std::size_t>(it - feature_names.begin());
}

std::size_t EncodedCohort::n_positive() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

namespace {

struct ColumnPlan {
    std::string name;
    ColumnKind kind = ColumnKind::binary;
    std::size_t entry = 0;
    std::size_t window = 0;    // code features
    std::string level;         // one-hot features
};

std::vector<ColumnPlan> plan_columns(const std::vector<SubjectRecord> &subjects, const FeatureCatalog &catalog,
                                     std::vector<std::string> &warnings) {
    std::vector<ColumnPlan> plan;
    for (std::size_t e = 0; e < catalog.size(); ++e) {
        const auto &entry = catalog.entries()[e];
        switch (entry.matcher.kind) {
        case MatcherKind::code_prefix: {
            const auto &rule = window_rule(entry.feature_class);
            for (std::size_t w = 0; w < rule.windows.size(); ++w) {
                if (entry.matcher.keeps_window(w)) {
                    plan.push_back({windowed_column_name(entry, w), ColumnKind::binary, e, w, {}});
                }
            }
            break;
        }
        case MatcherKind::vital:
        case MatcherKind::baseline:
        case MatcherKind::age:
            plan.push_back({entry.feature_name, ColumnKind::continuous, e, 0, {}});
            break;
        case MatcherKind::sex:
            plan.push_back({entry.feature_name, ColumnKind::binary, e, 0, {}});
            break;
        case MatcherKind::category: {
            std::set<std::string> levels;
            for (const auto &s : subjects) {
                const auto it = s.categorical_baseline.find(entry.matcher.key);
                if (it != s.categorical_baseline.end() && it->second) {
                    levels.insert(*it->second);
                }
            }
            if (entry.matcher.unknown_level) {
                levels.insert(*entry.matcher.unknown_level);
            }
            if (levels.empty()) {
                warnings.push_back("categorical feature '" + entry.feature_name + "' has no observed levels");
            }
            for (const auto &level : levels) {
                plan.push_back({entry.feature_name + "=" + level, ColumnKind::one_hot, e, 0, level});
            }
            break;
        }
        }
    }
    return plan;
}

std::optional<double> baseline_value(const SubjectRecord &s, const std::string &key) {
    const auto it = s.continuous_baseline.find(key);
    if (it == s.continuous_baseline.end() || !it->second || !std::isfinite(*it->second)) {
        return std::nullopt;
    }
    return *it->second;
}

ColumnStats observed_stats(const std::vector<double> &matrix, const std::vector<std::uint8_t> &observed,
                           std::size_t n_rows, std::size_t n_cols, std::size_t col) {
    ColumnStats stats;
    double sum = 0.0;
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (observed[r * n_cols + col]) {
            sum += matrix[r * n_cols + col];
            ++stats.observed_count;
        }
    }
    if (stats.observed_count == 0) {
        return stats;
    }
    stats.mean = sum / static_cast<double>(stats.observed_count);
    if (stats.observed_count > 1) {
        double ss = 0.0;
        for (std::size_t r = 0; r < n_rows; ++r) {
            if (observed[r * n_cols + col]) {
                const double d = matrix[r * n_cols + col] - stats.mean;
                ss += d * d;
            }
        }
        stats.std_dev = std::sqrt(ss / static_cast<double>(stats.observed_count - 1));
    }
    stats.zero_variance = !(stats.std_dev > 0.0);
    return stats;
}

EncodedCohort subset_columns(const EncodedCohort &cohort, const std::vector<std::size_t> &keep) {
    EncodedCohort out;
    out.subject_ids = cohort.subject_ids;
    out.labels = cohort.labels;
    out.survival_days = cohort.survival_days;
    out.normalization = cohort.normalization;
    out.warnings = cohort.warnings;
    for (auto c : keep) {
        out.feature_names.push_back(cohort.feature_names[c]);
        out.column_kinds.push_back(cohort.column_kinds[c]);
        out.column_stats.push_back(cohort.column_stats[c]);
    }
    const auto n = cohort.n_rows();
    const auto p = cohort.n_features();
    out.matrix.reserve(n * keep.size());
    out.observed.reserve(n * keep.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (auto c : keep) {
            out.matrix.push_back(cohort.matrix[r * p + c]);
            out.observed.push_back(cohort.observed[r * p + c]);
        }
    }
    return out;
}

} // namespace

EncodedCohort encode_cohort(const std::vector<SubjectRecord> &subjects, const FeatureCatalog &catalog,
                            const EncodeOptions &options) {
    if (subjects.size() < 2) {
        throw DomainError("encoding needs at least two subjects");
    }
    bool any_died = false;
    bool any_survived = false;
    for (const auto &s : subjects) {
        if (s.outcome.died && s.outcome.death_date && *s.outcome.death_date < s.index_test_date) {
            throw DomainError("subject '" + s.subject_id + "' died before the index test date");
        }
        (s.outcome.died ? any_died : any_survived) = true;
    }
    if (!any_died || !any_survived) {
        throw DomainError("encoding needs at least one subject per outcome class");
    }

    EncodedCohort cohort;
    cohort.normalization = options.normalization;
    const auto plan = plan_columns(subjects, catalog, cohort.warnings);
    const std::size_t n = subjects.size();
    const std::size_t p = plan.size();

    std::map<std::size_t, std::vector<std::size_t>> columns_of_entry;
    for (std::size_t c = 0; c < p; ++c) {
        columns_of_entry[plan[c].entry].push_back(c);
    }

    std::vector<double> matrix(n * p, 0.0);
    std::vector<std::uint8_t> observed(n * p, 1);
    for (std::size_t r = 0; r < n; ++r) {
        const auto &s = subjects[r];
        cohort.subject_ids.push_back(s.subject_id);
        cohort.labels.push_back(s.outcome.died ? 1 : 0);
        cohort.survival_days.push_back(s.survival_days());
        double *row = matrix.data() + r * p;
        std::uint8_t *seen = observed.data() + r * p;

        // Per entry: the qualifying item closest to the test.
        std::map<std::size_t, FilteredItem> chosen;
        for (auto &item : apply_time_filter(s, catalog, options.filter)) {
            if (!item.window_index) {
                continue;
            }
            const auto it = chosen.find(item.entry_index);
            if (it == chosen.end()) {
                chosen.emplace(item.entry_index, std::move(item));
                continue;
            }
            const int best = std::abs(it->second.days_before);
            const int cand = std::abs(item.days_before);
            if (cand < best || (cand == best && item.days_before > it->second.days_before)) {
                it->second = std::move(item);
            }
        }

        for (const auto &[e, cols] : columns_of_entry) {
            const auto &entry = catalog.entries()[e];
            const auto hit = chosen.find(e);
            switch (entry.matcher.kind) {
            case MatcherKind::code_prefix:
                if (hit != chosen.end()) {
                    for (auto c : cols) {
                        if (plan[c].window == *hit->second.window_index) {
                            row[c] = 1.0;
                        }
                    }
                }
                break;
            case MatcherKind::vital:
                if (hit != chosen.end()) {
                    row[cols[0]] = hit->second.value;
                } else {
                    seen[cols[0]] = 0;
                }
                break;
            case MatcherKind::baseline:
                if (const auto v = baseline_value(s, entry.matcher.key)) {
                    row[cols[0]] = *v;
                } else {
                    seen[cols[0]] = 0;
                }
                break;
            case MatcherKind::age:
                row[cols[0]] = s.age_years;
                break;
            case MatcherKind::sex:
                row[cols[0]] = s.sex == Sex::male ? 1.0 : 0.0;
                break;
            case MatcherKind::category: {
                const auto it = s.categorical_baseline.find(entry.matcher.key);
                std::optional<std::string> level;
                if (it != s.categorical_baseline.end() && it->second) {
                    level = *it->second;
                } else if (entry.matcher.unknown_level) {
                    level = *entry.matcher.unknown_level;
                }
                if (level) {
                    for (auto c : cols) {
                        if (plan[c].level == *level) {
                            row[c] = 1.0;
                        }
                    }
                }
                break;
            }
            }
        }
    }

    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < p; ++c) {
        cohort.feature_names.push_back(plan[c].name);
        cohort.column_kinds.push_back(plan[c].kind);
        auto stats = observed_stats(matrix, observed, n, p, c);
        if (plan[c].kind == ColumnKind::continuous && stats.observed_count == 0) {
            cohort.warnings.push_back("continuous feature '" + plan[c].name + "' has no observed values; dropped");
        } else {
            keep.push_back(c);
        }
        cohort.column_stats.push_back(stats);
    }

    for (std::size_t c = 0; c < p; ++c) {
        if (plan[c].kind != ColumnKind::continuous) {
            continue;
        }
        const auto &stats = cohort.column_stats[c];
        const bool scale = options.normalization == Normalization::zscore && !stats.zero_variance;
        for (std::size_t r = 0; r < n; ++r) {
            double &v = matrix[r * p + c];
            if (!observed[r * p + c]) {
                v = stats.mean;
            }
            if (scale) {
                v = (v - stats.mean) / stats.std_dev;
            }
        }
    }
    cohort.matrix = std::move(matrix);
    cohort.observed = std::move(observed);
    if (keep.size() == p) {
        return cohort;
    }
    return subset_columns(cohort, keep);
}

std::vector<double> impute_from_rows(const EncodedCohort &cohort, std::span<const std::size_t> rows) {
    std::vector<double> matrix = cohort.matrix;
    const auto n = cohort.n_rows();
    const auto p = cohort.n_features();
    for (std::size_t c = 0; c < p; ++c) {
        if (cohort.column_kinds[c] != ColumnKind::continuous) {
            continue;
        }
        const auto &stats = cohort.column_stats[c];
        const bool scaled = cohort.normalization == Normalization::zscore && !stats.zero_variance;
        double sum = 0.0;
        std::size_t count = 0;
        for (auto r : rows) {
            if (cohort.observed[r * p + c]) {
                const double v = cohort.matrix[r * p + c];
                sum += scaled ? v * stats.std_dev + stats.mean : v;
                ++count;
            }
        }
        if (count == 0) {
            continue;
        }
        double fill = sum / static_cast<double>(count);
        if (scaled) {
            fill = (fill - stats.mean) / stats.std_dev;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (!cohort.observed[r * p + c]) {
                matrix[r * p + c] = fill;
            }
        }
    }
    return matrix;
}

EncodedCohort drop_columns(const EncodedCohort &cohort, const std::vector<std::string> &names) {
    std::set<std::size_t> drop;
    for (const auto &name : names) {
        drop.insert(cohort.column_index(name));
    }
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < cohort.n_features(); ++c) {
        if (!drop.contains(c)) {
            keep.push_back(c);
        }
    }
    return subset_columns(cohort, keep);
}

EncodedCohort select_columns(const EncodedCohort &cohort, const std::vector<std::string> &names) {
    std::vector<std::size_t> keep;
    for (const auto &name : names) {
        keep.push_back(cohort.column_index(name));
    }
    return subset_columns(cohort, keep);
}

void write_cohort_csv(std::ostream &out, const EncodedCohort &cohort) {
    for (const auto &name : cohort.feature_names) {
        out << text::csv_field(name) << ',';
    }
    out << "__label,__survival_days,__subject_id\n";
    for (std::size_t r = 0; r < cohort.n_rows(); ++r) {
        for (double v : cohort.row(r)) {
            out << text::format_double(v) << ',';
        }
        out << static_cast<int>(cohort.labels[r]) << ',' << cohort.survival_days[r] << ','
            << text::csv_field(cohort.subject_ids[r]) << '\n';
    }
}

EncodedCohort read_cohort_csv(std::istream &in) {
    std::string line;
    std::size_t line_number = 0;
    EncodedCohort cohort;
    std::size_t p = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_number;
        if (text::trim(line).empty()) {
            continue;
        }
        auto fields = text::split_csv(line, line_number);
        if (!header) {
            if (fields.size() < 3 || fields[fields.size() - 3] != "__label" ||
                fields[fields.size() - 2] != "__survival_days" || fields.back() != "__subject_id") {
                throw ParseError("cohort header must end with __label,__survival_days,__subject_id", line_number);
            }
            p = fields.size() - 3;
            cohort.feature_names.assign(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(p));
            header = true;
            continue;
        }
        if (fields.size() != p + 3) {
            throw ParseError("expected " + std::to_string(p + 3) + " columns, found " + std::to_string(fields.size()),
                             line_number);
        }
        for (std::size_t c = 0; c < p; ++c) {
            cohort.matrix.push_back(text::parse_double(fields[c], line_number));
        }
        const auto label = text::parse_int(fields[p], line_number);
        if (label != 0 && label != 1) {
            throw ParseError("__label must be 0 or 1", line_number);
        }
        cohort.labels.push_back(static_cast<std::uint8_t>(label));
        cohort.survival_days.push_back(static_cast<int>(text::parse_int(fields[p + 1], line_number)));
        cohort.subject_ids.push_back(fields[p + 2]);
    }
    if (!header) {
        throw ParseError("empty cohort file");
    }
    const auto n = cohort.n_rows();
    cohort.observed.assign(n * p, 1);
    for (std::size_t c = 0; c < p; ++c) {
        bool binary = true;
        for (std::size_t r = 0; r < n && binary; ++r) {
            const double v = cohort.matrix[r * p + c];
            binary = v == 0.0 || v == 1.0;
        }
        const bool one_hot = binary && cohort.feature_names[c].find('=') != std::string::npos;
        cohort.column_kinds.push_back(one_hot ? ColumnKind::one_hot
                                              : (binary ? ColumnKind::binary : ColumnKind::continuous));
        cohort.column_stats.push_back(observed_stats(cohort.matrix, cohort.observed, n, p, c));
    }
    return cohort;
}

} // namespace dynrisk
