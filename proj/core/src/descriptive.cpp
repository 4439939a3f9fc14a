#include "dynrisk/descriptive.hpp"

#include "dynrisk/text.hpp"

#include <cmath>

namespace dynrisk {

std::string format_percent(double pct) {
    auto out = text::format_fixed(pct, 1);
    if (out.size() > 2 && out.ends_with(".0")) {
        out.resize(out.size() - 2);
    }
    return out;
}

namespace {

std::string count_with_percent(std::size_t k, std::size_t total) {
    if (total == 0) {
        return std::to_string(k);
    }
    return std::to_string(k) + " (" + format_percent(100.0 * static_cast<double>(k) / static_cast<double>(total)) +
           ")";
}

std::string mean_sd(const GroupSummary &g) {
    const auto mean = g.mean ? text::format_fixed(*g.mean, 1) : std::string{"NA"};
    const auto sd = g.std_dev ? text::format_fixed(*g.std_dev, 1) : std::string{"NA"};
    return mean + " (" + sd + ") [" + std::to_string(g.count) + "]";
}

GroupSummary summarize(const std::vector<double> &values) {
    GroupSummary g;
    g.count = values.size();
    if (values.empty()) {
        return g;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    g.mean = mean;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - mean) * (v - mean);
        }
        g.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return g;
}

} // namespace

std::string DescriptiveRow::all_cell() const { return continuous ? mean_sd(all) : std::to_string(all.count); }

std::string DescriptiveRow::survived_cell() const {
    return continuous ? mean_sd(survived) : count_with_percent(survived.count, all.count);
}

std::string DescriptiveRow::died_cell() const {
    return continuous ? mean_sd(died) : count_with_percent(died.count, all.count);
}

std::vector<DescriptiveRow> descriptive_stats(const EncodedCohort &cohort) {
    std::vector<DescriptiveRow> rows;
    const auto n = cohort.n_rows();
    const auto p = cohort.n_features();
    const auto deaths = cohort.n_positive();

    DescriptiveRow total;
    total.characteristic = "Total";
    total.all.count = n;
    total.survived.count = n - deaths;
    total.died.count = deaths;
    rows.push_back(total);

    for (std::size_t c = 0; c < p; ++c) {
        DescriptiveRow row;
        row.characteristic = cohort.feature_names[c];
        row.continuous = cohort.column_kinds[c] == ColumnKind::continuous;
        const auto &stats = cohort.column_stats[c];
        const bool scaled = cohort.normalization == Normalization::zscore && row.continuous && !stats.zero_variance;
        if (row.continuous) {
            std::vector<double> all;
            std::vector<double> survived;
            std::vector<double> died;
            for (std::size_t r = 0; r < n; ++r) {
                if (!cohort.observed[r * p + c]) {
                    continue;
                }
                double v = cohort.matrix[r * p + c];
                if (scaled) {
                    v = v * stats.std_dev + stats.mean;
                }
                all.push_back(v);
                (cohort.labels[r] ? died : survived).push_back(v);
            }
            row.all = summarize(all);
            row.survived = summarize(survived);
            row.died = summarize(died);
        } else {
            for (std::size_t r = 0; r < n; ++r) {
                if (cohort.matrix[r * p + c] == 1.0) {
                    ++row.all.count;
                    ++(cohort.labels[r] ? row.died : row.survived).count;
                }
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_descriptive_tsv(std::ostream &out, const std::vector<DescriptiveRow> &rows) {
    out << "characteristic\tall\tsurvived\tdied\n";
    for (const auto &row : rows) {
        out << row.characteristic << '\t' << row.all_cell() << '\t' << row.survived_cell() << '\t'
            << row.died_cell() << '\n';
    }
}

} // namespace dynrisk
