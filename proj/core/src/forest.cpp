#include "dynrisk/forest.hpp"

#include "dynrisk/error.hpp"
#include "dynrisk/parallel.hpp"
#include "dynrisk/seed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

namespace dynrisk {

double gini_impurity(std::size_t negatives, std::size_t positives) {
    const auto total = negatives + positives;
    if (total == 0) {
        throw DomainError("gini impurity of an empty node");
    }
    const double p0 = static_cast<double>(negatives) / static_cast<double>(total);
    const double p1 = static_cast<double>(positives) / static_cast<double>(total);
    return 1.0 - (p0 * p0 + p1 * p1);
}

namespace {

constexpr double min_decrease = 1e-12;

double split_decrease(double parent_gini, std::size_t left_neg, std::size_t left_pos, std::size_t right_neg,
                      std::size_t right_pos) {
    const double n_left = static_cast<double>(left_neg + left_pos);
    const double n_right = static_cast<double>(right_neg + right_pos);
    const double n = n_left + n_right;
    return parent_gini - (n_left / n) * gini_impurity(left_neg, left_pos) -
           (n_right / n) * gini_impurity(right_neg, right_pos);
}

double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) * 0.5;
    return mid < hi ? mid : lo;
}

bool better(const Split &candidate, const std::optional<Split> &best) {
    if (!best) {
        return true;
    }
    if (candidate.impurity_decrease != best->impurity_decrease) {
        return candidate.impurity_decrease > best->impurity_decrease;
    }
    if (candidate.feature != best->feature) {
        return candidate.feature < best->feature;
    }
    return candidate.threshold < best->threshold;
}

/// Scans one feature; returns false when it is constant over `rows`.
bool scan_feature(const MatrixView &x, std::span<const std::uint8_t> labels, std::span<const std::size_t> rows,
                  std::size_t feature, std::size_t min_leaf, std::size_t parent_neg, std::size_t parent_pos,
                  std::vector<std::pair<double, std::uint8_t>> &scratch, std::optional<Split> &best) {
    scratch.clear();
    for (auto r : rows) {
        scratch.emplace_back(x.at(r, feature), labels[r]);
    }
    std::sort(scratch.begin(), scratch.end());
    if (scratch.front().first == scratch.back().first) {
        return false;
    }
    const double parent_gini = gini_impurity(parent_neg, parent_pos);
    std::size_t left_neg = 0;
    std::size_t left_pos = 0;
    const std::size_t m = scratch.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        (scratch[i].second ? left_pos : left_neg) += 1;
        if (scratch[i].first == scratch[i + 1].first) {
            continue;
        }
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf || m - n_left < min_leaf) {
            continue;
        }
        const double decrease =
            split_decrease(parent_gini, left_neg, left_pos, parent_neg - left_neg, parent_pos - left_pos);
        if (!(decrease > min_decrease)) {
            continue;
        }
        Split candidate{feature, midpoint(scratch[i].first, scratch[i + 1].first), decrease};
        if (better(candidate, best)) {
            best = candidate;
        }
    }
    return true;
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels,
                                                 std::span<const std::size_t> rows) {
    std::size_t pos = 0;
    for (auto r : rows) {
        pos += labels[r] ? 1 : 0;
    }
    return {rows.size() - pos, pos};
}

struct TreeBuild {
    DecisionTree tree;
    std::vector<double> importance; // sum of n_node * decrease per feature
};

TreeBuild grow_tree(const MatrixView &x, std::span<const std::uint8_t> labels, std::vector<std::size_t> rows,
                    const ForestParams &params, std::size_t mtry, std::mt19937_64 &rng) {
    const std::size_t p = x.n_cols;
    std::vector<DecisionTree::Node> nodes;
    std::vector<double> importance(p, 0.0);
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::vector<std::pair<double, std::uint8_t>> scratch;
    scratch.reserve(rows.size());

    struct Pending {
        std::size_t node;
        std::size_t begin;
        std::size_t end;
    };
    std::vector<Pending> stack;
    const auto make_node = [&](std::size_t begin, std::size_t end, std::uint32_t depth) {
        const auto [neg, pos] = class_counts(labels, std::span{rows}.subspan(begin, end - begin));
        DecisionTree::Node node;
        node.negatives = static_cast<std::uint32_t>(neg);
        node.positives = static_cast<std::uint32_t>(pos);
        node.depth = depth;
        nodes.push_back(node);
        return nodes.size() - 1;
    };
    stack.push_back({make_node(0, rows.size(), 0), 0, rows.size()});

    while (!stack.empty()) {
        const auto [index, begin, end] = stack.back();
        stack.pop_back();
        const auto node = nodes[index];
        const std::size_t n = end - begin;
        if (node.negatives == 0 || node.positives == 0) {
            continue;
        }
        if (params.max_depth && node.depth >= *params.max_depth) {
            continue;
        }
        if (n < 2 * params.min_samples_leaf) {
            continue;
        }
        const std::span<const std::size_t> node_rows{rows.data() + begin, n};

        // Visit features in random order until mtry non-constant ones were scanned.
        std::optional<Split> best;
        std::size_t informative = 0;
        for (std::size_t k = 0; k < p && informative < mtry; ++k) {
            const auto j = std::uniform_int_distribution<std::size_t>{k, p - 1}(rng);
            std::swap(features[k], features[j]);
            if (scan_feature(x, labels, node_rows, features[k], params.min_samples_leaf, node.negatives,
                             node.positives, scratch, best)) {
                ++informative;
            }
        }
        if (!best) {
            continue;
        }
        const auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                               rows.begin() + static_cast<std::ptrdiff_t>(end),
                                               [&](std::size_t r) { return x.at(r, best->feature) <= best->threshold; });
        const auto split_at = static_cast<std::size_t>(mid - rows.begin());
        importance[best->feature] += static_cast<double>(n) * best->impurity_decrease;
        const auto left = make_node(begin, split_at, node.depth + 1);
        const auto right = make_node(split_at, end, node.depth + 1);
        nodes[index].feature = static_cast<std::int32_t>(best->feature);
        nodes[index].threshold = best->threshold;
        nodes[index].left = static_cast<std::int32_t>(left);
        nodes[index].right = static_cast<std::int32_t>(right);
        stack.push_back({right, split_at, end});
        stack.push_back({left, begin, split_at});
    }
    return {DecisionTree{std::move(nodes)}, std::move(importance)};
}

void check_dimension(const Forest &forest, std::span<const double> x) {
    if (x.size() != forest.n_features()) {
        throw DomainError("feature vector has " + std::to_string(x.size()) + " values, forest expects " +
                          std::to_string(forest.n_features()));
    }
}

} // namespace

std::optional<Split> best_split(const MatrixView &x, std::span<const std::uint8_t> labels,
                                std::span<const std::size_t> rows, std::span<const std::size_t> candidate_features,
                                std::size_t min_samples_leaf) {
    if (rows.size() < 2 || candidate_features.empty()) {
        return std::nullopt;
    }
    const auto [neg, pos] = class_counts(labels, rows);
    if (neg == 0 || pos == 0) {
        return std::nullopt;
    }
    std::optional<Split> best;
    std::vector<std::pair<double, std::uint8_t>> scratch;
    scratch.reserve(rows.size());
    for (auto f : candidate_features) {
        scan_feature(x, labels, rows, f, std::max<std::size_t>(min_samples_leaf, 1), neg, pos, scratch, best);
    }
    return best;
}

std::size_t ForestParams::resolved_mtry(std::size_t n_features) const {
    if (mtry) {
        return *mtry;
    }
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

const DecisionTree::Node &DecisionTree::leaf_for(std::span<const double> x) const {
    const Node *node = &nodes_.front();
    while (!node->is_leaf()) {
        node = &nodes_[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold
                                                    ? node->left
                                                    : node->right)];
    }
    return *node;
}

double DecisionTree::likelihood(std::span<const double> x) const {
    const auto &leaf = leaf_for(x);
    return static_cast<double>(leaf.positives) / static_cast<double>(leaf.positives + leaf.negatives);
}

std::size_t DecisionTree::depth() const {
    std::uint32_t depth = 0;
    for (const auto &n : nodes_) {
        depth = std::max(depth, n.depth);
    }
    return depth;
}

Forest train_forest(const TrainingSet &data, const std::vector<std::string> &feature_names,
                    const ForestParams &params, std::size_t threads) {
    const std::size_t p = data.x.n_cols;
    if (feature_names.size() != p) {
        throw DomainError("feature_names size does not match the matrix width");
    }
    if (params.n_trees == 0) {
        throw DomainError("n_trees must be at least 1");
    }
    if (params.min_samples_leaf == 0) {
        throw DomainError("min_samples_leaf must be at least 1");
    }
    if (params.max_depth && *params.max_depth == 0) {
        throw DomainError("max_depth must be positive");
    }
    const std::size_t mtry = params.resolved_mtry(p);
    if (p == 0 || mtry < 1 || mtry > p) {
        throw DomainError("mtry must be in [1, " + std::to_string(p) + "]");
    }
    std::vector<std::size_t> rows;
    if (data.rows.empty()) {
        rows.resize(data.x.n_rows);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    } else {
        rows.assign(data.rows.begin(), data.rows.end());
    }
    if (rows.size() < 2) {
        throw TrainingError("training needs at least two rows");
    }
    const auto [neg, pos] = class_counts(data.labels, rows);
    if (neg == 0 || pos == 0) {
        throw TrainingError("training data contains a single class");
    }

    std::vector<TreeBuild> built(params.n_trees);
    parallel_for(params.n_trees, threads, [&](std::size_t t) {
        std::mt19937_64 rng{derive_seed(params.seed, t, salt::tree)};
        std::vector<std::size_t> sample;
        if (params.bootstrap) {
            sample.resize(rows.size());
            std::uniform_int_distribution<std::size_t> pick{0, rows.size() - 1};
            for (auto &r : sample) {
                r = rows[pick(rng)];
            }
        } else {
            sample = rows;
        }
        built[t] = grow_tree(data.x, data.labels, std::move(sample), params, mtry, rng);
    });

    std::vector<double> importances(p, 0.0);
    std::vector<DecisionTree> trees;
    trees.reserve(built.size());
    for (auto &b : built) {
        const double total = std::accumulate(b.importance.begin(), b.importance.end(), 0.0);
        if (total > 0.0) {
            for (std::size_t j = 0; j < p; ++j) {
                importances[j] += b.importance[j] / total;
            }
        }
        trees.push_back(std::move(b.tree));
    }
    const double total = std::accumulate(importances.begin(), importances.end(), 0.0);
    if (total > 0.0) {
        for (auto &v : importances) {
            v /= total;
        }
    }
    return Forest{std::move(trees), params, feature_names, std::move(importances)};
}

std::vector<double> tree_likelihoods(const Forest &forest, std::span<const double> x) {
    check_dimension(forest, x);
    std::vector<double> out;
    out.reserve(forest.trees().size());
    for (const auto &tree : forest.trees()) {
        out.push_back(tree.likelihood(x));
    }
    return out;
}

double predict_likelihood(const Forest &forest, std::span<const double> x) {
    check_dimension(forest, x);
    double sum = 0.0;
    for (const auto &tree : forest.trees()) {
        sum += tree.likelihood(x);
    }
    return sum / static_cast<double>(forest.trees().size());
}

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw DomainError("quantile of an empty sample");
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

PredictionWithCI predict_with_ci(const Forest &forest, std::span<const double> x, double level,
                                 std::size_t n_resamples, std::uint64_t seed) {
    if (n_resamples < 100) {
        throw DomainError("n_resamples must be at least 100");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("level must be in (0, 1)");
    }
    const auto per_tree = tree_likelihoods(forest, x);
    PredictionWithCI out;
    out.level = level;
    out.n_resamples = n_resamples;
    double sum = 0.0;
    for (double v : per_tree) {
        sum += v;
    }
    out.likelihood = sum / static_cast<double>(per_tree.size());
    if (per_tree.size() == 1) {
        out.ci_low = out.ci_high = out.likelihood;
        out.degenerate = true;
        return out;
    }
    std::mt19937_64 rng{derive_seed(seed, 0, salt::ci_resample)};
    std::uniform_int_distribution<std::size_t> pick{0, per_tree.size() - 1};
    std::vector<double> means(n_resamples);
    for (auto &m : means) {
        double s = 0.0;
        for (std::size_t t = 0; t < per_tree.size(); ++t) {
            s += per_tree[pick(rng)];
        }
        m = s / static_cast<double>(per_tree.size());
    }
    std::sort(means.begin(), means.end());
    out.ci_low = std::min(out.likelihood, sorted_quantile(means, (1.0 - level) / 2.0));
    out.ci_high = std::max(out.likelihood, sorted_quantile(means, (1.0 + level) / 2.0));
    return out;
}

void Forest::write_json(std::ostream &out) const {
    using nlohmann::json;
    json doc;
    doc["format"] = "dynrisk-forest";
    doc["version"] = 1;
    json params{{"n_trees", params_.n_trees},
                {"min_samples_leaf", params_.min_samples_leaf},
                {"bootstrap", params_.bootstrap},
                {"seed", params_.seed}};
    params["max_depth"] = params_.max_depth ? json(*params_.max_depth) : json(nullptr);
    params["mtry"] = params_.mtry ? json(*params_.mtry) : json(nullptr);
    doc["params"] = std::move(params);
    doc["feature_names"] = feature_names_;
    doc["importances"] = importances_;
    json trees = json::array();
    for (const auto &tree : trees_) {
        json t{{"feature", json::array()},   {"threshold", json::array()}, {"left", json::array()},
               {"right", json::array()},     {"negatives", json::array()}, {"positives", json::array()},
               {"depth", json::array()}};
        for (const auto &n : tree.nodes()) {
            t["feature"].push_back(n.feature);
            t["threshold"].push_back(n.threshold);
            t["left"].push_back(n.left);
            t["right"].push_back(n.right);
            t["negatives"].push_back(n.negatives);
            t["positives"].push_back(n.positives);
            t["depth"].push_back(n.depth);
        }
        trees.push_back(std::move(t));
    }
    doc["trees"] = std::move(trees);
    out << doc.dump() << '\n';
}

Forest Forest::read_json(std::istream &in) {
    using nlohmann::json;
    try {
        const auto doc = json::parse(in);
        if (doc.at("format") != "dynrisk-forest" || doc.at("version") != 1) {
            throw ParseError("not a dynrisk forest file");
        }
        ForestParams params;
        const auto &pj = doc.at("params");
        params.n_trees = pj.at("n_trees").get<std::size_t>();
        params.min_samples_leaf = pj.at("min_samples_leaf").get<std::size_t>();
        params.bootstrap = pj.at("bootstrap").get<bool>();
        params.seed = pj.at("seed").get<std::uint64_t>();
        if (!pj.at("max_depth").is_null()) {
            params.max_depth = pj.at("max_depth").get<std::size_t>();
        }
        if (!pj.at("mtry").is_null()) {
            params.mtry = pj.at("mtry").get<std::size_t>();
        }
        auto names = doc.at("feature_names").get<std::vector<std::string>>();
        auto importances = doc.at("importances").get<std::vector<double>>();
        std::vector<DecisionTree> trees;
        for (const auto &t : doc.at("trees")) {
            const auto feature = t.at("feature").get<std::vector<std::int32_t>>();
            const auto threshold = t.at("threshold").get<std::vector<double>>();
            const auto left = t.at("left").get<std::vector<std::int32_t>>();
            const auto right = t.at("right").get<std::vector<std::int32_t>>();
            const auto negatives = t.at("negatives").get<std::vector<std::uint32_t>>();
            const auto positives = t.at("positives").get<std::vector<std::uint32_t>>();
            const auto depth = t.at("depth").get<std::vector<std::uint32_t>>();
            const auto n = feature.size();
            if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || negatives.size() != n ||
                positives.size() != n || depth.size() != n) {
                throw ParseError("inconsistent tree node arrays");
            }
            std::vector<DecisionTree::Node> nodes(n);
            for (std::size_t i = 0; i < n; ++i) {
                nodes[i] = {feature[i], threshold[i], left[i], right[i], negatives[i], positives[i], depth[i]};
                const auto &node = nodes[i];
                if (!node.is_leaf() &&
                    (static_cast<std::size_t>(node.feature) >= names.size() || node.left <= static_cast<std::int32_t>(i) ||
                     node.right <= static_cast<std::int32_t>(i) ||
                     static_cast<std::size_t>(node.left) >= n || static_cast<std::size_t>(node.right) >= n)) {
                    throw ParseError("tree node " + std::to_string(i) + " has invalid links");
                }
                if (node.is_leaf() && node.negatives + node.positives == 0) {
                    throw ParseError("tree leaf " + std::to_string(i) + " is empty");
                }
            }
            trees.emplace_back(std::move(nodes));
        }
        if (trees.empty() || importances.size() != names.size()) {
            throw ParseError("forest file has no trees or mismatched importances");
        }
        return Forest{std::move(trees), params, std::move(names), std::move(importances)};
    } catch (const json::exception &e) {
        throw ParseError(std::string{"forest file: "} + e.what());
    }
}

} // namespace dynrisk
