#include "dynrisk/metrics.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dynrisk {

namespace {

struct Counts {
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

Counts validate(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw DomainError("scores and labels differ in length");
    }
    Counts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw DomainError("scores must be finite");
        }
        (labels[i] ? c.positives : c.negatives) += 1;
    }
    if (c.positives == 0 || c.negatives == 0) {
        throw DomainError("ROC analysis needs both classes");
    }
    return c;
}

/// Cumulative (threshold, tp, fp) at each distinct score, descending.
struct Step {
    double threshold;
    std::size_t tp;
    std::size_t fp;
};

std::vector<Step> threshold_steps(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<Step> steps;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == t; ++i) {
            (labels[order[i]] ? tp : fp) += 1;
        }
        steps.push_back({t, tp, fp});
    }
    return steps;
}

} // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const auto counts = validate(scores, labels);
    const double P = static_cast<double>(counts.positives);
    const double N = static_cast<double>(counts.negatives);
    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    // Accumulate twice the trapezoid area in integer units for exactness.
    double area = 0.0;
    std::size_t prev_tp = 0;
    std::size_t prev_fp = 0;
    for (const auto &s : threshold_steps(scores, labels)) {
        area += static_cast<double>(s.fp - prev_fp) * static_cast<double>(s.tp + prev_tp);
        curve.points.push_back({static_cast<double>(s.fp) / N, static_cast<double>(s.tp) / P, s.threshold});
        prev_tp = s.tp;
        prev_fp = s.fp;
    }
    curve.auc = area / (2.0 * P * N);
    return curve;
}

double auc_pair_oracle(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const auto counts = validate(scores, labels);
    double concordant = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) {
                continue;
            }
            if (scores[i] > scores[j]) {
                concordant += 1.0;
            } else if (scores[i] == scores[j]) {
                concordant += 0.5;
            }
        }
    }
    return concordant / (static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

double f_beta(double precision, double recall, double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw DomainError("beta must be positive");
    }
    if (!(precision >= 0.0 && precision <= 1.0) || !(recall >= 0.0 && recall <= 1.0)) {
        throw DomainError("precision and recall must be in [0, 1]");
    }
    if (precision == 0.0 && recall == 0.0) {
        return 0.0;
    }
    const double b2 = beta * beta;
    return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

FBetaCurve f_beta_curve(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        const std::vector<double> &betas) {
    const auto counts = validate(scores, labels);
    for (double b : betas) {
        if (!(b > 0.0)) {
            throw DomainError("beta must be positive");
        }
    }
    const auto steps = threshold_steps(scores, labels);
    FBetaCurve curve;
    curve.betas = betas;
    for (double beta : betas) {
        std::vector<FBetaPoint> points;
        points.reserve(steps.size());
        for (const auto &s : steps) {
            FBetaPoint pt;
            pt.threshold = s.threshold;
            pt.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
            pt.recall = static_cast<double>(s.tp) / static_cast<double>(counts.positives);
            pt.f_score = f_beta(pt.precision, pt.recall, beta);
            points.push_back(pt);
        }
        curve.per_beta.emplace_back(beta, std::move(points));
    }
    return curve;
}

void write_roc_csv(std::ostream &out, const RocCurve &curve) {
    out << "fpr,tpr,threshold\n";
    for (const auto &p : curve.points) {
        out << text::format_double(p.fpr) << ',' << text::format_double(p.tpr) << ','
            << text::format_double(p.threshold) << '\n';
    }
}

void write_fbeta_csv(std::ostream &out, const FBetaCurve &curve) {
    out << "beta,threshold,precision,recall,f_score\n";
    for (const auto &[beta, points] : curve.per_beta) {
        for (const auto &p : points) {
            out << text::format_double(beta) << ',' << text::format_double(p.threshold) << ','
                << text::format_double(p.precision) << ',' << text::format_double(p.recall) << ','
                << text::format_double(p.f_score) << '\n';
        }
    }
}

} // namespace dynrisk
