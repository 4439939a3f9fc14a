#include "dynrisk/loo.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/metrics.hpp"
#include "dynrisk/parallel.hpp"
#include "dynrisk/seed.hpp"
#include "dynrisk/text.hpp"

#include <algorithm>
#include <random>

namespace dynrisk {

CohortView view_of(const EncodedCohort &cohort) {
    return {MatrixView{cohort.matrix, cohort.n_rows(), cohort.n_features()}, cohort.labels, cohort.survival_days,
            cohort.feature_names};
}

namespace {

class ForestModel : public TrainedModel {
public:
    explicit ForestModel(Forest forest) : forest_{std::move(forest)} {}
    double score(std::span<const double> x) const override { return predict_likelihood(forest_, x); }
    std::vector<double> importances() const override { return forest_.importances(); }

private:
    Forest forest_;
};

class CoxScorer : public TrainedModel {
public:
    explicit CoxScorer(CoxModel model) : model_{std::move(model)} {}
    double score(std::span<const double> x) const override { return cox_risk_score(model_, x); }

private:
    CoxModel model_;
};

} // namespace

std::unique_ptr<TrainedModel> RandomForestTrainer::train(const CohortView &data, std::span<const std::size_t> rows,
                                                         std::uint64_t seed) const {
    auto params = params_;
    params.seed = seed;
    const std::vector<std::string> names(data.feature_names.begin(), data.feature_names.end());
    return std::make_unique<ForestModel>(train_forest({data.x, data.labels, rows}, names, params, threads_));
}

std::vector<SurvivalSample> survival_samples(const CohortView &data, std::span<const std::size_t> rows) {
    std::vector<SurvivalSample> samples;
    samples.reserve(rows.size());
    for (auto r : rows) {
        const auto x = data.x.row(r);
        samples.push_back({std::vector<double>(x.begin(), x.end()), data.survival_days[r], data.labels[r] != 0});
    }
    return samples;
}

std::unique_ptr<TrainedModel> CoxTrainer::train(const CohortView &data, std::span<const std::size_t> rows,
                                                std::uint64_t) const {
    const std::vector<std::string> names(data.feature_names.begin(), data.feature_names.end());
    auto model = fit_cox(survival_samples(data, rows), names, options_);
    if (!model.converged) {
        throw TrainingError("Cox fit did not converge");
    }
    return std::make_unique<CoxScorer>(std::move(model));
}

std::optional<std::vector<std::size_t>> balance_classes(std::span<const std::uint8_t> labels,
                                                        std::optional<std::size_t> heldout, std::uint64_t seed) {
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (heldout && i == *heldout) {
            continue;
        }
        (labels[i] ? positives : negatives).push_back(i);
    }
    const std::size_t m = std::min(positives.size(), negatives.size());
    if (m == 0) {
        return std::nullopt;
    }
    std::mt19937_64 rng{seed};
    const auto draw = [&](std::vector<std::size_t> &pool) {
        for (std::size_t k = 0; k < m; ++k) {
            const auto j = std::uniform_int_distribution<std::size_t>{k, pool.size() - 1}(rng);
            std::swap(pool[k], pool[j]);
        }
        pool.resize(m);
    };
    draw(positives);
    draw(negatives);
    std::vector<std::size_t> out = std::move(positives);
    out.insert(out.end(), negatives.begin(), negatives.end());
    std::sort(out.begin(), out.end());
    return out;
}

LooResult run_loo(const EncodedCohort &cohort, const ModelTrainer &trainer, const LooOptions &options) {
    const auto n = cohort.n_rows();
    const auto positives = cohort.n_positive();
    if (positives == 0 || positives == n) {
        throw DomainError("leave-one-out needs both outcome classes");
    }
    LooResult result;
    result.n_iterations = n;
    result.per_sample.resize(n);
    result.iterations.resize(n);
    result.iteration_importances.resize(n);
    const auto base_view = view_of(cohort);

    parallel_for(n, options.threads, [&](std::size_t i) {
        auto &entry = result.per_sample[i];
        auto &iteration = result.iterations[i];
        entry.subject_index = i;
        entry.true_label = cohort.labels[i];
        const std::uint64_t seed = derive_seed(options.seed, i, salt::loo_iteration);
        const std::size_t held_pos = cohort.labels[i] ? 1 : 0;
        iteration.minority_count = std::min(positives - held_pos, n - positives - (1 - held_pos));

        const auto train = balance_classes(cohort.labels, i, seed);
        if (!train) {
            entry.failed = true;
            iteration.failure = "a class is empty after removing the held-out sample";
            return;
        }
        for (auto r : *train) {
            iteration.heldout_leaked = iteration.heldout_leaked || r == i;
            (cohort.labels[r] ? iteration.train_positives : iteration.train_negatives) += 1;
        }
        try {
            std::vector<double> fold_matrix;
            auto view = base_view;
            if (options.impute == ImputeMode::fold) {
                fold_matrix = impute_from_rows(cohort, *train);
                view.x.data = fold_matrix;
            }
            const auto model = trainer.train(view, *train, mix64(seed));
            entry.heldout_score = model->score(view.x.row(i));
            result.iteration_importances[i] = model->importances();
        } catch (const Error &e) {
            entry.failed = true;
            iteration.failure = e.what();
        }
    });

    for (const auto &it : result.iterations) {
        result.leak_count += it.heldout_leaked ? 1 : 0;
        result.n_failures += it.failure.empty() ? 0 : 1;
    }
    if (static_cast<double>(result.n_failures) > options.max_failure_fraction * static_cast<double>(n)) {
        std::string first;
        for (const auto &it : result.iterations) {
            if (!it.failure.empty()) {
                first = it.failure;
                break;
            }
        }
        throw TrainingError("leave-one-out aborted: " + std::to_string(result.n_failures) + " of " +
                            std::to_string(n) + " iterations failed (first: " + first + ")");
    }

    std::size_t contributing = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto &imp = result.iteration_importances[i];
        if (result.per_sample[i].failed || imp.empty()) {
            continue;
        }
        if (result.mean_importances.empty()) {
            result.mean_importances.assign(imp.size(), 0.0);
        }
        for (std::size_t j = 0; j < imp.size(); ++j) {
            result.mean_importances[j] += imp[j];
        }
        ++contributing;
    }
    for (auto &v : result.mean_importances) {
        v /= static_cast<double>(contributing);
    }
    return result;
}

std::vector<double> LooResult::scores() const {
    std::vector<double> out;
    for (const auto &e : per_sample) {
        if (!e.failed) {
            out.push_back(e.heldout_score);
        }
    }
    return out;
}

std::vector<std::uint8_t> LooResult::labels() const {
    std::vector<std::uint8_t> out;
    for (const auto &e : per_sample) {
        if (!e.failed) {
            out.push_back(e.true_label);
        }
    }
    return out;
}

HoldoutResult run_holdout(const EncodedCohort &cohort, const ModelTrainer &trainer, std::uint64_t seed,
                          double train_fraction) {
    const auto n = cohort.n_rows();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DomainError("train_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::mt19937_64 rng{derive_seed(seed, 0, salt::holdout)};
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(static_cast<double>(n) * train_fraction);
    std::vector<std::size_t> train_pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    HoldoutResult result;
    result.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train_pool.begin(), train_pool.end());
    std::sort(result.test_rows.begin(), result.test_rows.end());

    std::vector<std::uint8_t> pool_labels;
    for (auto r : train_pool) {
        pool_labels.push_back(cohort.labels[r]);
    }
    const auto picked = balance_classes(pool_labels, std::nullopt, derive_seed(seed, 1, salt::holdout));
    if (!picked) {
        throw TrainingError("holdout training half contains a single class");
    }
    std::vector<std::size_t> train;
    for (auto k : *picked) {
        train.push_back(train_pool[k]);
    }
    const auto view = view_of(cohort);
    const auto model = trainer.train(view, train, derive_seed(seed, 2, salt::holdout));
    for (auto r : result.test_rows) {
        result.scores.push_back(model->score(view.x.row(r)));
        result.labels.push_back(cohort.labels[r]);
    }
    result.auc = roc_curve(result.scores, result.labels).auc;
    return result;
}

void write_loo_csv(std::ostream &out, const EncodedCohort &cohort, const LooResult &result) {
    out << "subject_id,label,score\n";
    for (const auto &e : result.per_sample) {
        if (e.failed) {
            continue;
        }
        out << text::csv_field(cohort.subject_ids[e.subject_index]) << ',' << static_cast<int>(e.true_label) << ','
            << text::format_double(e.heldout_score) << '\n';
    }
}

} // namespace dynrisk
