#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dynrisk {

struct SurvivalSample {
    std::vector<double> x;
    int time_days = 1;
    bool event = false;
};

enum class Ties { efron, breslow };

std::string_view to_string(Ties ties);
Ties parse_ties(std::string_view text);

/// Negative log partial likelihood with its analytic derivatives.
/// `hessian` is p x p row-major.
struct PartialLikelihood {
    double value = 0.0;
    std::vector<double> gradient;
    std::vector<double> hessian;
};

/// Throws DomainError without events or with invalid times, and
/// OverflowError when exp(linear predictor) is not finite.
PartialLikelihood neg_log_partial_likelihood(std::span<const double> beta, std::span<const SurvivalSample> samples,
                                             Ties ties = Ties::efron);

struct CoxOptions {
    Ties ties = Ties::efron;
    double tol = 1e-8;       ///< gradient max-norm at convergence
    int max_iter = 50;
    int max_halvings = 10;
    double separation_bound = 20.0;
};

struct CoxModel {
    std::vector<std::string> feature_names;
    std::vector<double> beta;
    std::vector<double> covariance; ///< inverse observed information, p x p row-major
    int n_iterations = 0;
    bool converged = false;
    double log_partial_likelihood = 0.0;
    Ties ties = Ties::efron;
    std::size_t n_samples = 0;
    std::size_t n_events = 0;
    std::vector<std::string> warnings;

    double standard_error(std::size_t j) const;
    void write_json(std::ostream &out) const;
    static CoxModel read_json(std::istream &in);
};

/// Newton-Raphson from beta = 0 with step halving.
///
/// Throws DomainError with fewer than two events, SeparationError when a
/// coefficient leaves [-separation_bound, separation_bound], and
/// RankDeficiencyError when the information matrix is singular.
CoxModel fit_cox(std::span<const SurvivalSample> samples, const std::vector<std::string> &feature_names,
                 const CoxOptions &options = {});

struct HazardRatio {
    std::string feature;
    double log_hr = 0.0;
    double se = 0.0;
    double hr = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
};

inline constexpr double z_95 = 1.959964;

/// Two-sided normal quantile used for `level` (exactly z_95 at 0.95).
double normal_critical_value(double level);

/// exp(beta) with exp(beta +- z * SE) bounds, in feature order. Throws
/// DomainError for a non-converged model.
std::vector<HazardRatio> hazard_ratios(const CoxModel &model, double level = 0.95);

/// CSV feature,hr,ci_low,ci_high ordered by |log HR| descending.
void write_hazard_ratio_csv(std::ostream &out, std::vector<HazardRatio> ratios);

/// Linear predictor beta . x.
double cox_risk_score(const CoxModel &model, std::span<const double> x);

} // namespace dynrisk
