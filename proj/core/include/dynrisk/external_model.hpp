#pragma once

#include "dynrisk/encode.hpp"
#include "dynrisk/metrics.hpp"

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dynrisk {

enum class Transform { linear_predictor, logistic };
enum class MissingPolicy { drop_term, impute_mean };

struct EquationTerm {
    std::string variable;
    double coefficient = 0.0;
};

struct Stratum {
    std::string label;
    std::optional<double> value; ///< empty matches every subject (unstratified)
    std::vector<EquationTerm> terms;
    double intercept = 0.0;
    Transform transform = Transform::linear_predictor;
};

struct VariableMapping {
    std::optional<std::string> feature; ///< empty = MISSING
    std::optional<double> mean;         ///< fill value under impute_mean
};

struct CoverageReport {
    std::size_t declared = 0; ///< distinct variables used by terms
    std::size_t mapped = 0;
    std::vector<std::string> missing;
};

/// Per-stratum risk equation supplied from outside the pipeline.
///
/// Line-based file; `#` starts a comment:
///
///     missing_policy drop_term
///     stratify_by sex=Male
///     mapping age age
///     mapping chemo MISSING 0.2
///     stratum male 1
///       transform logistic
///       intercept -4.1
///       term age 0.05
///     end
struct ExternalRiskEquation {
    MissingPolicy missing_policy = MissingPolicy::drop_term;
    std::optional<std::string> stratify_by;
    std::map<std::string, VariableMapping> mapping;
    std::vector<Stratum> strata;

    CoverageReport coverage() const;
};

/// Throws ParseError with the offending line.
ExternalRiskEquation load_equation(std::istream &in);
void write_equation(std::ostream &out, const ExternalRiskEquation &equation);

/// Throws ConfigError when a mapped or stratifying feature is absent.
void validate_equation(const ExternalRiskEquation &equation, const EncodedCohort &cohort);

struct ExternalScores {
    std::vector<double> scores;
    std::vector<std::size_t> stratum_of; ///< index into equation.strata
};

/// Scores every subject in original feature units. Throws EvaluationError
/// naming a subject that matches no stratum.
ExternalScores evaluate_external(const ExternalRiskEquation &equation, const EncodedCohort &cohort,
                                 std::size_t threads = 1);

struct ExternalReport {
    RocCurve pooled;
    std::vector<std::pair<std::string, std::optional<RocCurve>>> per_stratum; ///< empty when single-class
};

ExternalReport external_report(const ExternalRiskEquation &equation, const ExternalScores &scores,
                               const EncodedCohort &cohort);

} // namespace dynrisk
