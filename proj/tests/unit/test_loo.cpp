#include "fixtures.hpp"

#include <dynrisk/error.hpp>
#include <dynrisk/loo.hpp>
#include <dynrisk/synth.hpp>

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace dynrisk;

namespace {

EncodedCohort small_synthetic(std::uint64_t seed, std::size_t n = 120) {
    GeneratorConfig c;
    c.n_subjects = n;
    c.target_event_rate = 0.25;
    c.seed = seed;
    c.feature_specs = {{"signal", FeatureSpec::Kind::binary, 0.3, 0, 1},
                       {"bmi", FeatureSpec::Kind::continuous, 0.5, 28.0, 4.0}};
    c.planted_effects = {{"signal", 1.5}};
    c.noise_features = 3;
    const auto cohort = generate_cohort(c);
    return encode_cohort(cohort.subjects, cohort.catalog);
}

// records every training set it sees
class SpyTrainer : public ModelTrainer {
public:
    mutable std::vector<std::vector<std::size_t>> seen;
    std::unique_ptr<TrainedModel> train(const CohortView &, std::span<const std::size_t> rows,
                                        std::uint64_t) const override {
        seen.emplace_back(rows.begin(), rows.end());
        struct Zero : TrainedModel {
            double score(std::span<const double> x) const override { return x[0]; }
        };
        return std::make_unique<Zero>();
    }
};

class FailingTrainer : public ModelTrainer {
public:
    std::unique_ptr<TrainedModel> train(const CohortView &, std::span<const std::size_t>,
                                        std::uint64_t) const override {
        throw TrainingError("always fails");
    }
};

} // namespace

TEST_CASE("balancing undersamples the majority class") {
    std::vector<std::uint8_t> y(13, 0);
    y[2] = y[5] = y[11] = 1;
    const auto rows = balance_classes(y, std::size_t{0}, 4);
    REQUIRE(rows);
    CHECK(rows->size() == 6);
    CHECK(std::is_sorted(rows->begin(), rows->end()));
    CHECK(std::count(rows->begin(), rows->end(), 0u) == 0);
    std::size_t pos = 0;
    for (auto r : *rows) {
        pos += y[r];
    }
    CHECK(pos == 3);
    CHECK(*balance_classes(y, std::size_t{0}, 4) == *rows);

    const auto held_pos = balance_classes(y, std::size_t{2}, 4);
    CHECK(held_pos->size() == 4);

    std::vector<std::uint8_t> even{0, 1, 0, 1};
    CHECK(balance_classes(even, std::nullopt, 1)->size() == 4);
    std::vector<std::uint8_t> lone{0, 1, 0, 0};
    CHECK_FALSE(balance_classes(lone, std::size_t{1}, 1).has_value());
}

TEST_CASE("loo scores every sample without leakage") {
    const auto cohort = small_synthetic(3);
    SpyTrainer spy;
    const auto result = run_loo(cohort, spy, {});
    CHECK(result.per_sample.size() == cohort.n_rows());
    CHECK(result.n_iterations == cohort.n_rows());
    CHECK(result.leak_count == 0);
    REQUIRE(spy.seen.size() == cohort.n_rows());
    for (std::size_t i = 0; i < cohort.n_rows(); ++i) {
        const auto &it = result.iterations[i];
        CHECK(it.train_positives == it.minority_count);
        CHECK(it.train_negatives == it.minority_count);
        CHECK_FALSE(it.heldout_leaked);
        CHECK(result.per_sample[i].subject_index == i);
        CHECK(result.per_sample[i].true_label == cohort.labels[i]);
        CHECK(std::find(spy.seen[i].begin(), spy.seen[i].end(), i) == spy.seen[i].end());
    }
}

TEST_CASE("loo is deterministic across threads") {
    const auto cohort = small_synthetic(5, 80);
    ForestParams p;
    p.n_trees = 10;
    RandomForestTrainer rf{p};
    LooOptions one;
    one.seed = 17;
    auto many = one;
    many.threads = 4;
    const auto a = run_loo(cohort, rf, one);
    const auto b = run_loo(cohort, rf, many);
    CHECK(a.scores() == b.scores());
    CHECK(a.iteration_importances == b.iteration_importances);
    CHECK(a.mean_importances == b.mean_importances);
    many.seed = 18;
    CHECK(run_loo(cohort, rf, many).scores() != a.scores());
}

TEST_CASE("fold imputation mode runs and differs only where values were imputed") {
    const auto cohort = small_synthetic(8, 60);
    ForestParams p;
    p.n_trees = 5;
    RandomForestTrainer rf{p};
    LooOptions fold;
    fold.impute = ImputeMode::fold;
    const auto r = run_loo(cohort, rf, fold);
    CHECK(r.n_failures == 0);
    CHECK(r.scores().size() == cohort.n_rows());
}

TEST_CASE("too many failures abort") {
    const auto cohort = small_synthetic(2, 40);
    CHECK_THROWS_AS(run_loo(cohort, FailingTrainer{}, {}), TrainingError);
}

TEST_CASE("cox trainer and holdout") {
    const auto cohort = small_synthetic(11, 200);
    CoxTrainer cox;
    const auto hold = run_holdout(cohort, cox, 4);
    CHECK(hold.test_rows.size() == 100);
    CHECK(hold.auc > 0.5);
    std::ostringstream csv;
    LooOptions o;
    const auto loo = run_loo(cohort, cox, o);
    write_loo_csv(csv, cohort, loo);
    CHECK(csv.str().rfind("subject_id,label,score\n", 0) == 0);
    const auto text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(cohort.n_rows() + 1 - loo.n_failures));
}
