#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace dynrisk {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0; ///< +inf for the leading (0, 0) point
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// ROC over distinct score thresholds (descending; tied scores share one
/// point), with trapezoidal AUC. Throws DomainError for single-class labels,
/// mismatched sizes or non-finite scores.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Brute-force Mann-Whitney AUC: (concordant + 0.5 * tied) / (n_pos * n_neg).
double auc_pair_oracle(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// (1 + b^2) P R / (b^2 P + R); 0 when P and R are both 0.
double f_beta(double precision, double recall, double beta);

inline const std::vector<double> default_betas{0.5, 1.0, 2.0, 3.0, 5.0};

struct FBetaPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

struct FBetaCurve {
    std::vector<double> betas;
    std::vector<std::pair<double, std::vector<FBetaPoint>>> per_beta;
};

/// F-beta at every distinct score threshold; positive means score >= threshold.
FBetaCurve f_beta_curve(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        const std::vector<double> &betas = default_betas);

/// CSV fpr,tpr,threshold.
void write_roc_csv(std::ostream &out, const RocCurve &curve);
/// CSV beta,threshold,precision,recall,f_score.
void write_fbeta_csv(std::ostream &out, const FBetaCurve &curve);

} // namespace dynrisk
