#pragma once

#include "dynrisk/cox.hpp"
#include "dynrisk/encode.hpp"
#include "dynrisk/forest.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dynrisk {

/// Rows of one cohort as seen by a trainer.
struct CohortView {
    MatrixView x;
    std::span<const std::uint8_t> labels;
    std::span<const int> survival_days;
    std::span<const std::string> feature_names;
};

CohortView view_of(const EncodedCohort &cohort);

class TrainedModel {
public:
    virtual ~TrainedModel() = default;
    /// Higher = higher mortality risk.
    virtual double score(std::span<const double> x) const = 0;
    /// Per-feature importances; empty when the model has none.
    virtual std::vector<double> importances() const { return {}; }
};

/// Strategy used by run_loo and run_holdout to fit a fresh model.
class ModelTrainer {
public:
    virtual ~ModelTrainer() = default;
    virtual std::unique_ptr<TrainedModel> train(const CohortView &data, std::span<const std::size_t> rows,
                                                std::uint64_t seed) const = 0;
};

/// Forest likelihood scorer. The per-call seed replaces params.seed.
class RandomForestTrainer : public ModelTrainer {
public:
    explicit RandomForestTrainer(ForestParams params, std::size_t threads = 1)
        : params_{params}, threads_{threads} {}
    std::unique_ptr<TrainedModel> train(const CohortView &data, std::span<const std::size_t> rows,
                                        std::uint64_t seed) const override;

private:
    ForestParams params_;
    std::size_t threads_;
};

/// Cox linear-predictor scorer; survival_days are the times, labels the events.
class CoxTrainer : public ModelTrainer {
public:
    explicit CoxTrainer(CoxOptions options = {}) : options_{options} {}
    std::unique_ptr<TrainedModel> train(const CohortView &data, std::span<const std::size_t> rows,
                                        std::uint64_t seed) const override;

private:
    CoxOptions options_;
};

/// Survival samples for `rows` of a view.
std::vector<SurvivalSample> survival_samples(const CohortView &data, std::span<const std::size_t> rows);

/// Equal-size random training groups drawn without replacement.
///
/// Returns m indices per class, m = size of the smaller class once
/// `heldout` is removed, sorted ascending. Returns nullopt when removing
/// `heldout` empties a class.
std::optional<std::vector<std::size_t>> balance_classes(std::span<const std::uint8_t> labels,
                                                        std::optional<std::size_t> heldout, std::uint64_t seed);

enum class ImputeMode { cohort, fold };

struct LooOptions {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    ImputeMode impute = ImputeMode::cohort;
    double max_failure_fraction = 0.01;
};

struct LooEntry {
    std::size_t subject_index = 0;
    std::uint8_t true_label = 0;
    double heldout_score = 0.0;
    bool failed = false;
};

struct LooIteration {
    std::size_t train_positives = 0;
    std::size_t train_negatives = 0;
    std::size_t minority_count = 0; ///< smaller class size after removing the held-out sample
    bool heldout_leaked = false;
    std::string failure;            ///< empty on success
};

struct LooResult {
    std::vector<LooEntry> per_sample;
    std::vector<double> mean_importances; ///< empty for trainers without importances
    std::vector<std::vector<double>> iteration_importances;
    std::vector<LooIteration> iterations;
    std::size_t n_iterations = 0;
    std::size_t n_failures = 0;
    std::size_t leak_count = 0;

    /// Scores and labels of successful iterations, in sample order.
    std::vector<double> scores() const;
    std::vector<std::uint8_t> labels() const;
};

/// Leave-one-out evaluation: for every sample, balance the remaining
/// classes, train a fresh model, score the held-out sample. Deterministic
/// in options.seed regardless of options.threads. Throws TrainingError when
/// more than max_failure_fraction of iterations fail.
LooResult run_loo(const EncodedCohort &cohort, const ModelTrainer &trainer, const LooOptions &options = {});

struct HoldoutResult {
    std::vector<std::size_t> test_rows;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    double auc = 0.0;
};

/// Random split into train/test halves (train balanced as in run_loo),
/// scored on the test half. Used as the reference for LOO estimates.
HoldoutResult run_holdout(const EncodedCohort &cohort, const ModelTrainer &trainer, std::uint64_t seed,
                          double train_fraction = 0.5);

/// CSV subject_id,label,score (failed iterations omitted).
void write_loo_csv(std::ostream &out, const EncodedCohort &cohort, const LooResult &result);

} // namespace dynrisk
