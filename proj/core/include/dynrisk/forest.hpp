#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dynrisk {

/// Read-only row-major matrix.
struct MatrixView {
    std::span<const double> data;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    std::span<const double> row(std::size_t r) const { return data.subspan(r * n_cols, n_cols); }
};

/// Gini impurity of a two-class node: 1 - p0^2 - p1^2. Throws DomainError
/// when both counts are zero.
double gini_impurity(std::size_t negatives, std::size_t positives);

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0; ///< rows with value <= threshold go left
    double impurity_decrease = 0.0;
};

/// Best Gini split of `rows` over `candidate_features`.
///
/// Thresholds are midpoints between consecutive distinct values. The
/// decrease is parent impurity minus the size-weighted child impurities.
/// Ties prefer the lowest feature index, then the lowest threshold. Returns
/// nullopt when no split with both children >= min_samples_leaf improves
/// impurity.
std::optional<Split> best_split(const MatrixView &x, std::span<const std::uint8_t> labels,
                                std::span<const std::size_t> rows, std::span<const std::size_t> candidate_features,
                                std::size_t min_samples_leaf = 1);

struct ForestParams {
    std::size_t n_trees = 500;
    std::optional<std::size_t> max_depth; ///< empty = grow until pure
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> mtry;      ///< empty = floor(sqrt(p))
    bool bootstrap = true;
    std::uint64_t seed = 0;

    std::size_t resolved_mtry(std::size_t n_features) const;
};

class DecisionTree {
public:
    struct Node {
        std::int32_t feature = -1; ///< -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t negatives = 0;
        std::uint32_t positives = 0;
        std::uint32_t depth = 0;

        bool is_leaf() const noexcept { return feature < 0; }
    };

    DecisionTree() = default;
    explicit DecisionTree(std::vector<Node> nodes) : nodes_{std::move(nodes)} {}

    const std::vector<Node> &nodes() const noexcept { return nodes_; }
    const Node &leaf_for(std::span<const double> x) const;
    /// Positive-class proportion of the leaf reached by x.
    double likelihood(std::span<const double> x) const;
    std::size_t depth() const;

private:
    std::vector<Node> nodes_;
};

class Forest {
public:
    Forest() = default;
    Forest(std::vector<DecisionTree> trees, ForestParams params, std::vector<std::string> feature_names,
           std::vector<double> importances)
        : trees_{std::move(trees)}, params_{params}, feature_names_{std::move(feature_names)},
          importances_{std::move(importances)} {}

    const std::vector<DecisionTree> &trees() const noexcept { return trees_; }
    const ForestParams &params() const noexcept { return params_; }
    const std::vector<std::string> &feature_names() const noexcept { return feature_names_; }
    /// Mean decrease in Gini impurity, normalized to sum 1 (all zero if no split).
    const std::vector<double> &importances() const noexcept { return importances_; }
    std::size_t n_features() const noexcept { return feature_names_.size(); }

    void write_json(std::ostream &out) const;
    static Forest read_json(std::istream &in);

private:
    std::vector<DecisionTree> trees_;
    ForestParams params_;
    std::vector<std::string> feature_names_;
    std::vector<double> importances_;
};

/// Labelled rows of a matrix. `rows` may select a subset; empty means all.
struct TrainingSet {
    MatrixView x;
    std::span<const std::uint8_t> labels;
    std::span<const std::size_t> rows;
};

/// Bagged Gini trees with per-tree seeds derive_seed(params.seed, tree).
/// Results do not depend on `threads`. Throws TrainingError on
/// single-class input and DomainError on invalid parameters.
Forest train_forest(const TrainingSet &data, const std::vector<std::string> &feature_names,
                    const ForestParams &params, std::size_t threads = 1);

/// Per-tree leaf proportions in tree order.
std::vector<double> tree_likelihoods(const Forest &forest, std::span<const double> x);

/// Mean over trees of the leaf positive proportion (soft vote).
double predict_likelihood(const Forest &forest, std::span<const double> x);

struct PredictionWithCI {
    double likelihood = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double level = 0.95;
    std::size_t n_resamples = 0;
    bool degenerate = false; ///< single-tree forest: zero-width interval
};

/// Percentile interval of the forest mean under resampling trees with
/// replacement. Throws DomainError for n_resamples < 100 or level outside (0, 1).
PredictionWithCI predict_with_ci(const Forest &forest, std::span<const double> x, double level,
                                 std::size_t n_resamples, std::uint64_t seed);

/// Linear-interpolation quantile of sorted values (q in [0, 1]).
double sorted_quantile(std::span<const double> sorted, double q);

} // namespace dynrisk
