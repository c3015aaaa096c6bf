#include "stockcast/trees.hpp"

#include "stockcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace stockcast {

namespace {

struct Subset {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    double sse() const {
        if (count == 0) return 0.0;
        return sum_sq - sum * sum / static_cast<double>(count);
    }
};

} // namespace

std::optional<SplitChoice> find_best_split(const Matrix& X, const std::vector<double>& y,
                                           const std::vector<std::size_t>& sample_indices,
                                           const std::vector<int>& features,
                                           int min_samples_leaf) {
    const std::size_t n = sample_indices.size();
    if (n < 2 * static_cast<std::size_t>(min_samples_leaf)) return std::nullopt;

    Subset total;
    for (std::size_t idx : sample_indices) {
        total.sum += y[idx];
        total.sum_sq += y[idx] * y[idx];
        total.count += 1;
    }
    const double parent_sse = total.sse();
    if (parent_sse <= 0.0) return std::nullopt; // node already pure

    std::optional<SplitChoice> best;
    std::vector<std::size_t> sorted = sample_indices;
    for (int f : features) {
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
            return X[a][static_cast<std::size_t>(f)] < X[b][static_cast<std::size_t>(f)];
        });

        Subset left;
        Subset right = total;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double yv = y[sorted[k]];
            left.sum += yv;
            left.sum_sq += yv * yv;
            left.count += 1;
            right.sum -= yv;
            right.sum_sq -= yv * yv;
            right.count -= 1;

            const double xa = X[sorted[k]][static_cast<std::size_t>(f)];
            const double xb = X[sorted[k + 1]][static_cast<std::size_t>(f)];
            if (xa == xb) continue; // not a boundary between distinct values
            if (left.count < static_cast<std::size_t>(min_samples_leaf) ||
                right.count < static_cast<std::size_t>(min_samples_leaf)) {
                continue;
            }

            const double threshold = 0.5 * (xa + xb);
            const double score = parent_sse - left.sse() - right.sse();
            if (!best || score > best->score + 1e-15 ||
                (std::abs(score - best->score) <= 1e-15 &&
                 (f < best->feature || (f == best->feature && threshold < best->threshold)))) {
                best = SplitChoice{f, threshold, score};
            }
        }
    }
    if (best && best->score <= 0.0) return std::nullopt;
    return best;
}

namespace {

int grow(DecisionTree& tree, const Matrix& X, const std::vector<double>& y,
         std::vector<std::size_t>& indices, int depth, int max_depth, int min_samples_leaf,
         double max_features, Rng& rng) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum = 0.0;
    for (std::size_t idx : indices) sum += y[idx];
    tree.nodes[static_cast<std::size_t>(node_id)].value =
        sum / static_cast<double>(indices.size());

    const bool depth_ok = max_depth == 0 || depth < max_depth;
    if (!depth_ok || indices.size() < 2) return node_id;

    // Feature subset for this node. A fraction of 1 keeps all features and
    // draws nothing from the rng, so full forests stay reproducible when the
    // fraction changes elsewhere.
    std::vector<int> features(tree.n_features);
    std::iota(features.begin(), features.end(), 0);
    if (max_features < 1.0) {
        const auto want = static_cast<std::size_t>(
            std::max(1.0, std::ceil(max_features * static_cast<double>(tree.n_features))));
        std::vector<int> pool = features;
        features.clear();
        for (std::size_t k = 0; k < want; ++k) {
            const std::size_t pick = rng.uniform_index(pool.size());
            features.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        std::sort(features.begin(), features.end());
    }

    const auto split = find_best_split(X, y, indices, features, min_samples_leaf);
    if (!split) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t idx : indices) {
        if (X[idx][static_cast<std::size_t>(split->feature)] <= split->threshold) {
            left_idx.push_back(idx);
        } else {
            right_idx.push_back(idx);
        }
    }
    indices.clear();
    indices.shrink_to_fit();

    const int left = grow(tree, X, y, left_idx, depth + 1, max_depth, min_samples_leaf,
                          max_features, rng);
    const int right = grow(tree, X, y, right_idx, depth + 1, max_depth, min_samples_leaf,
                           max_features, rng);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.leaf = false;
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    return node_id;
}

} // namespace

DecisionTree fit_tree(const Matrix& X, const std::vector<double>& y, int max_depth,
                      int min_samples_leaf, double max_features, Rng& rng) {
    if (X.empty() || X.size() != y.size()) {
        throw std::invalid_argument("fit_tree: X and y must be non-empty and aligned");
    }
    if (min_samples_leaf < 1) throw std::invalid_argument("fit_tree: min_samples_leaf >= 1");

    DecisionTree tree;
    tree.n_features = X[0].size();
    std::vector<std::size_t> indices(X.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    grow(tree, X, y, indices, 0, max_depth, min_samples_leaf, max_features, rng);
    return tree;
}

double predict_tree(const DecisionTree& tree, const std::vector<double>& x) {
    if (x.size() != tree.n_features) {
        throw std::invalid_argument("predict_tree: feature count mismatch");
    }
    int node = 0;
    while (!tree.nodes[static_cast<std::size_t>(node)].leaf) {
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return tree.nodes[static_cast<std::size_t>(node)].value;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("bootstrap_indices: n must be >= 1");
    std::vector<std::size_t> out(n);
    for (auto& v : out) v = rng.uniform_index(n);
    return out;
}

RandomForest fit_forest(const Matrix& X, const std::vector<double>& y,
                        const ForestParams& params) {
    if (params.n_trees < 1) throw std::invalid_argument("fit_forest: n_trees must be >= 1");
    if (X.empty() || X.size() != y.size()) {
        throw std::invalid_argument("fit_forest: X and y must be non-empty and aligned");
    }

    RandomForest forest;
    forest.params = params;
    forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
    forest.tree_seeds.reserve(static_cast<std::size_t>(params.n_trees));

    for (int i = 0; i < params.n_trees; ++i) {
        const std::uint64_t tree_seed = params.seed + static_cast<std::uint64_t>(i);
        forest.tree_seeds.push_back(tree_seed);
        Rng rng(tree_seed);

        Matrix Xb;
        std::vector<double> yb;
        if (params.bootstrap) {
            const auto idx = bootstrap_indices(X.size(), rng);
            Xb.reserve(idx.size());
            yb.reserve(idx.size());
            for (std::size_t k : idx) {
                Xb.push_back(X[k]);
                yb.push_back(y[k]);
            }
        } else {
            Xb = X;
            yb = y;
        }
        forest.trees.push_back(fit_tree(Xb, yb, params.max_depth, params.min_samples_leaf,
                                        params.max_features, rng));
    }
    return forest;
}

double predict_forest(const RandomForest& forest, const std::vector<double>& x) {
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += predict_tree(tree, x);
    return sum / static_cast<double>(forest.trees.size());
}

namespace {

nlohmann::ordered_json node_to_json(const DecisionTree& tree, int id) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    nlohmann::ordered_json j;
    if (node.leaf) {
        j["value"] = node.value;
    } else {
        j["feature"] = node.feature;
        j["threshold"] = node.threshold;
        j["left"] = node_to_json(tree, node.left);
        j["right"] = node_to_json(tree, node.right);
    }
    return j;
}

int node_from_json(const nlohmann::json& j, DecisionTree& tree) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("value")) {
        tree.nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
        return id;
    }
    const int left = node_from_json(j.at("left"), tree);
    const int right = node_from_json(j.at("right"), tree);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.leaf = false;
    node.feature = j.at("feature").get<int>();
    node.threshold = j.at("threshold").get<double>();
    node.left = left;
    node.right = right;
    return id;
}

} // namespace

std::string forest_to_json(const RandomForest& forest) {
    nlohmann::ordered_json j;
    j["kind"] = "random_forest";
    j["n_trees"] = forest.params.n_trees;
    j["max_depth"] = forest.params.max_depth;
    j["min_samples_leaf"] = forest.params.min_samples_leaf;
    j["max_features"] = forest.params.max_features;
    j["bootstrap"] = forest.params.bootstrap;
    j["seed"] = forest.params.seed;
    j["n_features"] = forest.trees.empty() ? 0 : forest.trees[0].n_features;
    auto trees = nlohmann::ordered_json::array();
    for (const auto& tree : forest.trees) trees.push_back(node_to_json(tree, 0));
    j["trees"] = std::move(trees);
    return j.dump(2) + "\n";
}

RandomForest forest_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("kind", "") != "random_forest") {
        throw InputError("forest_from_json: not a random_forest document");
    }
    RandomForest forest;
    forest.params.n_trees = j.at("n_trees").get<int>();
    forest.params.max_depth = j.at("max_depth").get<int>();
    forest.params.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    forest.params.max_features = j.at("max_features").get<double>();
    forest.params.bootstrap = j.at("bootstrap").get<bool>();
    forest.params.seed = j.at("seed").get<std::uint64_t>();
    const auto n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
        DecisionTree tree;
        tree.n_features = n_features;
        node_from_json(jt, tree);
        forest.trees.push_back(std::move(tree));
        forest.tree_seeds.push_back(forest.params.seed + forest.tree_seeds.size());
    }
    return forest;
}

} // namespace stockcast
