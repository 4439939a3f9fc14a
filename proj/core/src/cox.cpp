#include "dynrisk/cox.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/text.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynrisk {

std::string_view to_string(Ties ties) { return ties == Ties::efron ? "efron" : "breslow"; }

Ties parse_ties(std::string_view text) {
    if (text == "efron") {
        return Ties::efron;
    }
    if (text == "breslow") {
        return Ties::breslow;
    }
    throw ParseError("unknown ties method '" + std::string{text} + "'");
}

namespace {

struct Evaluation {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// Event and risk-set sums in time-descending order over centered covariates.
class PartialLikelihoodEvaluator {
public:
    PartialLikelihoodEvaluator(std::span<const SurvivalSample> samples, Ties ties) : ties_{ties} {
        if (samples.empty()) {
            throw DomainError("partial likelihood of an empty sample");
        }
        p_ = samples.front().x.size();
        const auto n = samples.size();
        x_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p_));
        time_.resize(n);
        event_.resize(n);
        std::size_t events = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto &s = samples[i];
            if (s.x.size() != p_) {
                throw DomainError("survival samples have inconsistent dimensions");
            }
            if (s.time_days < 0 || (s.time_days == 0 && !s.event)) {
                throw DomainError("survival time must be positive (zero only for an observed event)");
            }
            for (std::size_t j = 0; j < p_; ++j) {
                x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.x[j];
            }
            time_[i] = s.time_days;
            event_[i] = s.event;
            events += s.event ? 1 : 0;
        }
        if (events == 0) {
            throw DomainError("partial likelihood needs at least one event");
        }
        n_events_ = events;
        // The partial likelihood is translation invariant; centering keeps exp() tame.
        const Eigen::RowVectorXd means = x_.colwise().mean();
        x_.rowwise() -= means;
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](std::size_t a, std::size_t b) { return time_[a] > time_[b]; });
    }

    std::size_t dimension() const noexcept { return p_; }
    std::size_t n_events() const noexcept { return n_events_; }

    Evaluation evaluate(const Eigen::VectorXd &beta) const {
        const auto p = static_cast<Eigen::Index>(p_);
        const Eigen::VectorXd eta = x_ * beta;
        double loglik = 0.0;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);

        double s0 = 0.0;
        Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd d1(p);
        Eigen::MatrixXd d2(p, p);
        Eigen::VectorXd a1(p);
        Eigen::MatrixXd a2(p, p);

        const std::size_t n = order_.size();
        std::size_t i = 0;
        while (i < n) {
            const int t = time_[order_[i]];
            double d0 = 0.0;
            d1.setZero();
            d2.setZero();
            std::size_t deaths = 0;
            for (; i < n && time_[order_[i]] == t; ++i) {
                const auto k = static_cast<Eigen::Index>(order_[i]);
                const double w = std::exp(eta(k));
                if (!std::isfinite(w)) {
                    throw OverflowError("exp(linear predictor) overflowed; covariates may separate the events");
                }
                const auto xi = x_.row(k).transpose();
                s0 += w;
                s1.noalias() += w * xi;
                s2.noalias() += w * xi * xi.transpose();
                if (event_[order_[i]]) {
                    ++deaths;
                    d0 += w;
                    d1.noalias() += w * xi;
                    d2.noalias() += w * xi * xi.transpose();
                    loglik += eta(k);
                    grad.noalias() += xi;
                }
            }
            for (std::size_t l = 0; l < deaths; ++l) {
                const double frac = ties_ == Ties::efron ? static_cast<double>(l) / static_cast<double>(deaths) : 0.0;
                const double r0 = s0 - frac * d0;
                a1 = s1 - frac * d1;
                a2 = s2 - frac * d2;
                loglik -= std::log(r0);
                grad.noalias() -= a1 / r0;
                info.noalias() += a2 / r0 - (a1 * a1.transpose()) / (r0 * r0);
            }
        }
        if (!std::isfinite(loglik) || !grad.allFinite() || !info.allFinite()) {
            throw OverflowError("partial likelihood is not finite; covariates may separate the events");
        }
        return {-loglik, -grad, info};
    }

private:
    Ties ties_;
    std::size_t p_ = 0;
    std::size_t n_events_ = 0;
    Eigen::MatrixXd x_;
    std::vector<int> time_;
    std::vector<bool> event_;
    std::vector<std::size_t> order_;
};

std::vector<double> to_std(const Eigen::VectorXd &v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> to_row_major(const Eigen::MatrixXd &m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out.push_back(m(r, c));
        }
    }
    return out;
}

/// Inverse of a symmetric information matrix; throws on (near) singularity.
Eigen::MatrixXd invert_information(const Eigen::MatrixXd &info, const std::vector<std::string> &names) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{info};
    const auto &values = eig.eigenvalues();
    const double largest = std::max(values.cwiseAbs().maxCoeff(), 1.0);
    if (values.minCoeff() <= 1e-12 * largest) {
        // The eigenvector of the smallest eigenvalue names the collinear combination.
        Eigen::Index worst = 0;
        eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
        throw RankDeficiencyError("information matrix is singular (involving feature '" +
                                  names[static_cast<std::size_t>(worst)] + "')");
    }
    return eig.eigenvectors() * values.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

PartialLikelihood neg_log_partial_likelihood(std::span<const double> beta, std::span<const SurvivalSample> samples,
                                             Ties ties) {
    const PartialLikelihoodEvaluator evaluator{samples, ties};
    if (beta.size() != evaluator.dimension()) {
        throw DomainError("beta dimension does not match the samples");
    }
    for (double b : beta) {
        if (!std::isfinite(b)) {
            throw DomainError("beta must be finite");
        }
    }
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    const auto eval = evaluator.evaluate(b);
    return {eval.value, to_std(eval.gradient), to_row_major(eval.hessian)};
}

CoxModel fit_cox(std::span<const SurvivalSample> samples, const std::vector<std::string> &feature_names,
                 const CoxOptions &options) {
    const PartialLikelihoodEvaluator evaluator{samples, options.ties};
    const auto p = evaluator.dimension();
    if (feature_names.size() != p) {
        throw DomainError("feature_names size does not match the samples");
    }
    if (p == 0) {
        throw DomainError("Cox model needs at least one covariate");
    }
    if (evaluator.n_events() < 2) {
        throw DomainError("Cox model needs at least two events");
    }
    CoxModel model;
    model.feature_names = feature_names;
    model.ties = options.ties;
    model.n_samples = samples.size();
    model.n_events = evaluator.n_events();
    if (samples.size() <= p) {
        model.warnings.push_back("fewer samples than covariates");
    }

    const auto check_bound = [&](const Eigen::VectorXd &beta) {
        for (std::size_t j = 0; j < p; ++j) {
            if (std::abs(beta(static_cast<Eigen::Index>(j))) > options.separation_bound) {
                throw SeparationError("coefficient for '" + feature_names[j] + "' exceeded +-" +
                                          text::format_double(options.separation_bound) +
                                          " (monotone likelihood / separation)",
                                      feature_names[j]);
            }
        }
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    auto current = evaluator.evaluate(beta);
    int iter = 0;
    while (true) {
        if (current.gradient.cwiseAbs().maxCoeff() <= options.tol) {
            model.converged = true;
            break;
        }
        if (iter >= options.max_iter) {
            break;
        }
        ++iter;
        const Eigen::VectorXd step = invert_information(current.hessian, feature_names) * current.gradient;
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= options.max_halvings; ++halving, scale *= 0.5) {
            const Eigen::VectorXd candidate = beta - scale * step;
            try {
                auto next = evaluator.evaluate(candidate);
                if (next.value <= current.value + 1e-12 * std::max(1.0, std::abs(current.value))) {
                    beta = candidate;
                    current = std::move(next);
                    accepted = true;
                    break;
                }
            } catch (const OverflowError &) {
                // retry with a shorter step
            }
        }
        if (!accepted) {
            model.warnings.push_back("step halving failed to decrease the objective");
            break;
        }
        check_bound(beta);
    }
    model.n_iterations = iter;
    model.beta = to_std(beta);
    model.log_partial_likelihood = -current.value;
    model.covariance = to_row_major(invert_information(current.hessian, feature_names));
    if (!model.converged) {
        model.warnings.push_back("did not converge in " + std::to_string(options.max_iter) + " iterations");
    }
    return model;
}

double CoxModel::standard_error(std::size_t j) const {
    return std::sqrt(covariance[j * beta.size() + j]);
}

double normal_critical_value(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("confidence level must be in (0, 1)");
    }
    if (level == 0.95) {
        return z_95;
    }
    return boost::math::quantile(boost::math::normal{}, 0.5 + level / 2.0);
}

std::vector<HazardRatio> hazard_ratios(const CoxModel &model, double level) {
    if (!model.converged) {
        throw DomainError("hazard ratios need a converged Cox model");
    }
    const double z = normal_critical_value(level);
    std::vector<HazardRatio> out;
    for (std::size_t j = 0; j < model.beta.size(); ++j) {
        HazardRatio hr;
        hr.feature = model.feature_names[j];
        hr.log_hr = model.beta[j];
        hr.se = model.standard_error(j);
        hr.hr = std::exp(hr.log_hr);
        hr.ci_low = std::exp(hr.log_hr - z * hr.se);
        hr.ci_high = std::exp(hr.log_hr + z * hr.se);
        out.push_back(std::move(hr));
    }
    return out;
}

void write_hazard_ratio_csv(std::ostream &out, std::vector<HazardRatio> ratios) {
    std::stable_sort(ratios.begin(), ratios.end(), [](const HazardRatio &a, const HazardRatio &b) {
        if (std::abs(a.log_hr) != std::abs(b.log_hr)) {
            return std::abs(a.log_hr) > std::abs(b.log_hr);
        }
        return a.feature < b.feature;
    });
    out << "feature,hr,ci_low,ci_high\n";
    for (const auto &r : ratios) {
        out << text::csv_field(r.feature) << ',' << text::format_double(r.hr) << ','
            << text::format_double(r.ci_low) << ',' << text::format_double(r.ci_high) << '\n';
    }
}

double cox_risk_score(const CoxModel &model, std::span<const double> x) {
    if (x.size() != model.beta.size()) {
        throw DomainError("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                          std::to_string(model.beta.size()));
    }
    double score = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        score += model.beta[j] * x[j];
    }
    return score;
}

void CoxModel::write_json(std::ostream &out) const {
    using nlohmann::json;
    json doc;
    doc["format"] = "dynrisk-cox";
    doc["version"] = 1;
    doc["feature_names"] = feature_names;
    doc["beta"] = beta;
    doc["covariance"] = covariance;
    doc["ties"] = std::string{to_string(ties)};
    doc["n_iterations"] = n_iterations;
    doc["converged"] = converged;
    doc["log_partial_likelihood"] = log_partial_likelihood;
    doc["n_samples"] = n_samples;
    doc["n_events"] = n_events;
    doc["warnings"] = warnings;
    out << doc.dump(2) << '\n';
}

CoxModel CoxModel::read_json(std::istream &in) {
    using nlohmann::json;
    try {
        const auto doc = json::parse(in);
        if (doc.at("format") != "dynrisk-cox" || doc.at("version") != 1) {
            throw ParseError("not a dynrisk Cox model file");
        }
        CoxModel m;
        m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        m.beta = doc.at("beta").get<std::vector<double>>();
        m.covariance = doc.at("covariance").get<std::vector<double>>();
        m.ties = parse_ties(doc.at("ties").get<std::string>());
        m.n_iterations = doc.at("n_iterations").get<int>();
        m.converged = doc.at("converged").get<bool>();
        m.log_partial_likelihood = doc.at("log_partial_likelihood").get<double>();
        m.n_samples = doc.value("n_samples", std::size_t{0});
        m.n_events = doc.value("n_events", std::size_t{0});
        m.warnings = doc.value("warnings", std::vector<std::string>{});
        if (m.beta.size() != m.feature_names.size() || m.covariance.size() != m.beta.size() * m.beta.size()) {
            throw ParseError("Cox model file has inconsistent dimensions");
        }
        return m;
    } catch (const json::exception &e) {
        throw ParseError(std::string{"Cox model file: "} + e.what());
    }
}

} // namespace dynrisk
