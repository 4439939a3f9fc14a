#include "dynrisk/external_model.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/parallel.hpp"
#include "dynrisk/text.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace dynrisk {

CoverageReport ExternalRiskEquation::coverage() const {
    std::set<std::string> vars;
    for (const auto &s : strata) {
        for (const auto &t : s.terms) {
            vars.insert(t.variable);
        }
    }
    CoverageReport report;
    report.declared = vars.size();
    for (const auto &v : vars) {
        const auto it = mapping.find(v);
        if (it != mapping.end() && it->second.feature) {
            ++report.mapped;
        } else {
            report.missing.push_back(v);
        }
    }
    return report;
}

namespace {

std::vector<std::string> tokens_of(const std::string &line) {
    std::istringstream in{line};
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) {
        out.push_back(tok);
    }
    return out;
}

} // namespace

ExternalRiskEquation load_equation(std::istream &in) {
    ExternalRiskEquation eq;
    std::optional<Stratum> open;
    std::size_t open_line = 0;
    std::vector<std::size_t> stratum_lines;
    std::vector<std::pair<std::string, std::size_t>> term_lines;
    std::string line;
    std::size_t n = 0;
    bool policy_seen = false;
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto tok = tokens_of(line);
        if (tok.empty()) {
            continue;
        }
        const auto &key = tok[0];
        const auto need = [&](std::size_t count) {
            if (tok.size() != count) {
                throw ParseError("'" + key + "' expects " + std::to_string(count - 1) + " argument(s)", n);
            }
        };
        if (key == "missing_policy") {
            need(2);
            if (policy_seen) {
                throw ParseError("missing_policy declared twice", n);
            }
            policy_seen = true;
            if (tok[1] == "drop_term") {
                eq.missing_policy = MissingPolicy::drop_term;
            } else if (tok[1] == "impute_mean") {
                eq.missing_policy = MissingPolicy::impute_mean;
            } else {
                throw ParseError("unknown missing_policy '" + tok[1] + "'", n);
            }
        } else if (key == "stratify_by") {
            need(2);
            if (eq.stratify_by) {
                throw ParseError("stratify_by declared twice", n);
            }
            eq.stratify_by = tok[1];
        } else if (key == "mapping") {
            if (tok.size() != 3 && tok.size() != 4) {
                throw ParseError("mapping expects <variable> <feature|MISSING> [mean]", n);
            }
            if (eq.mapping.contains(tok[1])) {
                throw ParseError("variable '" + tok[1] + "' mapped twice", n);
            }
            VariableMapping m;
            if (tok[2] != "MISSING") {
                m.feature = tok[2];
            }
            if (tok.size() == 4) {
                m.mean = text::parse_double(tok[3], n);
            }
            eq.mapping.emplace(tok[1], std::move(m));
        } else if (key == "stratum") {
            if (open) {
                throw ParseError("stratum '" + open->label + "' is not closed", n);
            }
            if (tok.size() != 2 && tok.size() != 3) {
                throw ParseError("stratum expects <label> [value]", n);
            }
            open = Stratum{};
            open->label = tok[1];
            if (tok.size() == 3) {
                open->value = text::parse_double(tok[2], n);
            }
            open_line = n;
        } else if (key == "end") {
            need(1);
            if (!open) {
                throw ParseError("'end' outside a stratum", n);
            }
            eq.strata.push_back(std::move(*open));
            stratum_lines.push_back(open_line);
            open.reset();
        } else if (key == "transform" || key == "intercept" || key == "term") {
            if (!open) {
                throw ParseError("'" + key + "' outside a stratum", n);
            }
            if (key == "transform") {
                need(2);
                if (tok[1] == "logistic") {
                    open->transform = Transform::logistic;
                } else if (tok[1] == "linear_predictor") {
                    open->transform = Transform::linear_predictor;
                } else {
                    throw ParseError("unknown transform '" + tok[1] + "'", n);
                }
            } else if (key == "intercept") {
                need(2);
                open->intercept = text::parse_double(tok[1], n);
            } else {
                need(3);
                open->terms.push_back({tok[1], text::parse_double(tok[2], n)});
                term_lines.emplace_back(tok[1], n);
            }
        } else {
            throw ParseError("unknown keyword '" + key + "'", n);
        }
    }
    if (open) {
        throw ParseError("stratum '" + open->label + "' is not closed", open_line);
    }
    if (eq.strata.empty()) {
        throw ParseError("equation declares no stratum", n);
    }
    for (const auto &[var, at] : term_lines) {
        const auto it = eq.mapping.find(var);
        if (it == eq.mapping.end()) {
            throw ParseError("term variable '" + var + "' has no mapping", at);
        }
        if (eq.missing_policy == MissingPolicy::impute_mean && !it->second.feature && !it->second.mean) {
            throw ParseError("MISSING variable '" + var + "' needs a mean under impute_mean", at);
        }
    }
    std::set<std::string> labels;
    std::set<double> values;
    for (std::size_t k = 0; k < eq.strata.size(); ++k) {
        const auto &s = eq.strata[k];
        const auto at = stratum_lines[k];
        if (!labels.insert(s.label).second) {
            throw ParseError("duplicate stratum '" + s.label + "'", at);
        }
        if (eq.stratify_by) {
            if (!s.value) {
                throw ParseError("stratum '" + s.label + "' needs a value when stratify_by is set", at);
            }
            if (!values.insert(*s.value).second) {
                throw ParseError("stratum '" + s.label + "' repeats a stratum value", at);
            }
        } else if (eq.strata.size() > 1 || s.value) {
            throw ParseError("several strata or stratum values require stratify_by", at);
        }
    }
    return eq;
}

void write_equation(std::ostream &out, const ExternalRiskEquation &eq) {
    out << "missing_policy " << (eq.missing_policy == MissingPolicy::drop_term ? "drop_term" : "impute_mean")
        << '\n';
    if (eq.stratify_by) {
        out << "stratify_by " << *eq.stratify_by << '\n';
    }
    for (const auto &[var, m] : eq.mapping) {
        out << "mapping " << var << ' ' << (m.feature ? *m.feature : "MISSING");
        if (m.mean) {
            out << ' ' << text::format_double(*m.mean);
        }
        out << '\n';
    }
    for (const auto &s : eq.strata) {
        out << "stratum " << s.label;
        if (s.value) {
            out << ' ' << text::format_double(*s.value);
        }
        out << "\n  transform " << (s.transform == Transform::logistic ? "logistic" : "linear_predictor") << '\n';
        out << "  intercept " << text::format_double(s.intercept) << '\n';
        for (const auto &t : s.terms) {
            out << "  term " << t.variable << ' ' << text::format_double(t.coefficient) << '\n';
        }
        out << "end\n";
    }
}

void validate_equation(const ExternalRiskEquation &eq, const EncodedCohort &cohort) {
    for (const auto &[var, m] : eq.mapping) {
        if (m.feature) {
            cohort.column_index(*m.feature);
        }
    }
    if (eq.stratify_by) {
        cohort.column_index(*eq.stratify_by);
    }
}

namespace {

double original_units(const EncodedCohort &cohort, std::size_t row, std::size_t col) {
    const double v = cohort.at(row, col);
    const auto &stats = cohort.column_stats[col];
    if (cohort.normalization == Normalization::zscore && cohort.column_kinds[col] == ColumnKind::continuous &&
        !stats.zero_variance) {
        return v * stats.std_dev + stats.mean;
    }
    return v;
}

struct CompiledTerm {
    std::optional<std::size_t> column;
    double fill = 0.0;
    double coefficient = 0.0;
};

} // namespace

ExternalScores evaluate_external(const ExternalRiskEquation &eq, const EncodedCohort &cohort,
                                 std::size_t threads) {
    validate_equation(eq, cohort);
    std::vector<std::vector<CompiledTerm>> compiled(eq.strata.size());
    for (std::size_t s = 0; s < eq.strata.size(); ++s) {
        for (const auto &t : eq.strata[s].terms) {
            const auto &m = eq.mapping.at(t.variable);
            CompiledTerm c;
            c.coefficient = t.coefficient;
            if (m.feature) {
                c.column = cohort.column_index(*m.feature);
            } else if (eq.missing_policy == MissingPolicy::impute_mean) {
                c.fill = m.mean.value_or(0.0);
            } else {
                continue;
            }
            compiled[s].push_back(c);
        }
    }
    const std::optional<std::size_t> strat_col =
        eq.stratify_by ? std::optional{cohort.column_index(*eq.stratify_by)} : std::nullopt;

    ExternalScores out;
    out.scores.assign(cohort.n_rows(), 0.0);
    out.stratum_of.assign(cohort.n_rows(), 0);
    parallel_for(cohort.n_rows(), threads, [&](std::size_t r) {
        std::size_t s = 0;
        if (strat_col) {
            const double v = original_units(cohort, r, *strat_col);
            s = eq.strata.size();
            for (std::size_t k = 0; k < eq.strata.size(); ++k) {
                if (*eq.strata[k].value == v) {
                    s = k;
                    break;
                }
            }
            if (s == eq.strata.size()) {
                throw EvaluationError("subject '" + cohort.subject_ids[r] + "' matches no stratum (" +
                                          *eq.stratify_by + " = " + text::format_double(v) + ")",
                                      cohort.subject_ids[r]);
            }
        }
        const auto &stratum = eq.strata[s];
        double eta = stratum.intercept;
        for (const auto &c : compiled[s]) {
            eta += c.coefficient * (c.column ? original_units(cohort, r, *c.column) : c.fill);
        }
        out.scores[r] = stratum.transform == Transform::logistic ? 1.0 / (1.0 + std::exp(-eta)) : eta;
        out.stratum_of[r] = s;
    });
    return out;
}

ExternalReport external_report(const ExternalRiskEquation &eq, const ExternalScores &scores,
                               const EncodedCohort &cohort) {
    ExternalReport report;
    report.pooled = roc_curve(scores.scores, cohort.labels);
    for (std::size_t s = 0; s < eq.strata.size(); ++s) {
        std::vector<double> sc;
        std::vector<std::uint8_t> lab;
        for (std::size_t r = 0; r < scores.scores.size(); ++r) {
            if (scores.stratum_of[r] == s) {
                sc.push_back(scores.scores[r]);
                lab.push_back(cohort.labels[r]);
            }
        }
        const auto pos = std::count(lab.begin(), lab.end(), std::uint8_t{1});
        std::optional<RocCurve> curve;
        if (pos > 0 && pos < static_cast<std::ptrdiff_t>(lab.size())) {
            curve = roc_curve(sc, lab);
        }
        report.per_stratum.emplace_back(eq.strata[s].label, std::move(curve));
    }
    return report;
}

} // namespace dynrisk
