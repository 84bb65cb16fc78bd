#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace volidx {

/// Depth sentinel for fully grown trees.
inline constexpr int kUnlimitedDepth = -1;

struct TreeNode {
    /// -1 marks a leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// Mean training target of the samples reaching this node.
    double value = 0.0;
};

/// Flat CART tree; node 0 is the root. x[feature] <= threshold goes left.
struct DecisionTree {
    std::vector<TreeNode> nodes;

    [[nodiscard]] double predict(std::span<const double> x) const;
    [[nodiscard]] int depth() const;
};

struct ForestConfig {
    int n_trees = 100;
    int max_depth = kUnlimitedDepth;
    /// Off only as a test hook: every tree then sees the full sample once.
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestModel {
    int input_dim = 0;
    int max_depth = kUnlimitedDepth;
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> tree_seeds;

    /// Equal-weight average of the trees.
    [[nodiscard]] double predict(std::span<const double> x) const;
};

/// Regression forest: each tree is grown on a bootstrap resample, splitting
/// on the threshold (a midpoint between adjacent distinct values) that
/// minimizes the children's summed squared error over all features.
[[nodiscard]] ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& cfg = {});

}  // namespace volidx
