#pragma once

#include "stockcast/data.hpp"
#include "stockcast/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stockcast {

/// Binary regression tree stored as a flat node array; children of internal
/// nodes are indices into the same array, leaves carry the mean target.
struct TreeNode {
    bool leaf = true;
    double value = 0.0;   // leaf mean
    int feature = -1;     // split feature (internal nodes)
    double threshold = 0; // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
};

struct DecisionTree {
    std::size_t n_features = 0;
    std::vector<TreeNode> nodes; // node 0 is the root
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = 0;          // 0 = unlimited
    int min_samples_leaf = 1;
    double max_features = 1.0;  // fraction of features tried per node; 1 = all
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct RandomForest {
    ForestParams params;
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> tree_seeds; // seed + i, per tree
};

struct SplitChoice {
    int feature = 0;
    double threshold = 0.0;
    double score = 0.0; // weighted variance reduction (SSE decrease)
};

/// Greedy best split over the given feature subset: candidate thresholds are
/// midpoints of consecutive sorted distinct values, scored by SSE reduction.
/// Ties break to the lowest feature index, then the lowest threshold.
/// Returns nothing when no split separates the samples.
std::optional<SplitChoice> find_best_split(const Matrix& X, const std::vector<double>& y,
                                           const std::vector<std::size_t>& sample_indices,
                                           const std::vector<int>& features,
                                           int min_samples_leaf);

DecisionTree fit_tree(const Matrix& X, const std::vector<double>& y, int max_depth,
                      int min_samples_leaf, double max_features, Rng& rng);

double predict_tree(const DecisionTree& tree, const std::vector<double>& x);

/// n uniform draws in [0, n) with replacement; deterministic per rng state.
std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng);

RandomForest fit_forest(const Matrix& X, const std::vector<double>& y,
                        const ForestParams& params);

double predict_forest(const RandomForest& forest, const std::vector<double>& x);

std::string forest_to_json(const RandomForest& forest);
RandomForest forest_from_json(const std::string& text);

} // namespace stockcast
