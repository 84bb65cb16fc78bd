#include "volidx/forest.hpp"

#include "volidx/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace volidx {

double DecisionTree::predict(std::span<const double> x) const {
    if (nodes.empty()) throw DataError("empty decision tree");
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

int DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    // Children are always appended after their parent.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.feature < 0) continue;
        d[static_cast<std::size_t>(n.left)] = d[i] + 1;
        d[static_cast<std::size_t>(n.right)] = d[i] + 1;
        best = std::max(best, d[i] + 1);
    }
    return best;
}

double ForestModel::predict(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim) {
        throw DataError("input has " + std::to_string(x.size()) + " features, forest expects " +
                        std::to_string(input_dim));
    }
    if (trees.empty()) throw DataError("forest has no trees");
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
}

namespace {

/// Grows one tree. `order` holds, for every feature, the in-bag rows sorted
/// by that feature; each node owns the same [lo, hi) slice of every
/// feature's segment, kept consistent by stable partitioning.
class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<double> weight,
                const std::vector<std::vector<int>>& presorted, int max_depth)
        : X_(X), y_(y), w_(std::move(weight)), max_depth_(max_depth), d_(static_cast<int>(X.cols())) {
        std::size_t m = 0;
        for (double w : w_) m += w > 0.0 ? 1 : 0;
        m_ = m;
        order_.resize(m_ * static_cast<std::size_t>(d_));
        for (int f = 0; f < d_; ++f) {
            std::size_t k = 0;
            for (int r : presorted[static_cast<std::size_t>(f)]) {
                if (w_[static_cast<std::size_t>(r)] > 0.0) order_[f * m_ + k++] = r;
            }
        }
        goes_left_.assign(static_cast<std::size_t>(X.rows()), 0);
        scratch_.resize(m_);
    }

    DecisionTree build() {
        DecisionTree tree;
        grow(tree, 0, m_, 0);
        return tree;
    }

private:
    int grow(DecisionTree& tree, std::size_t lo, std::size_t hi, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});

        const int* rows = order_.data() + lo;  // feature 0's slice: any feature works for sums
        double W = 0.0;
        double S = 0.0;
        double y_min = y_(rows[0]);
        double y_max = y_min;
        for (std::size_t k = 0; k < hi - lo; ++k) {
            const int r = rows[k];
            W += w_[static_cast<std::size_t>(r)];
            S += w_[static_cast<std::size_t>(r)] * y_(r);
            y_min = std::min(y_min, y_(r));
            y_max = std::max(y_max, y_(r));
        }
        tree.nodes[static_cast<std::size_t>(id)].value = S / W;

        const bool depth_capped = max_depth_ != kUnlimitedDepth && depth >= max_depth_;
        if (depth_capped || hi - lo < 2 || y_min == y_max) return id;

        int best_feature = -1;
        double best_score = -1.0;
        double best_threshold = 0.0;
        std::size_t best_split = 0;  // count of slice entries going left
        for (int f = 0; f < d_; ++f) {
            const int* seg = order_.data() + f * m_ + lo;
            double wl = 0.0;
            double sl = 0.0;
            for (std::size_t k = 0; k + 1 < hi - lo; ++k) {
                const int r = seg[k];
                wl += w_[static_cast<std::size_t>(r)];
                sl += w_[static_cast<std::size_t>(r)] * y_(r);
                const double x_here = X_(r, f);
                const double x_next = X_(seg[k + 1], f);
                if (!(x_here < x_next)) continue;
                const double wr = W - wl;
                const double sr = S - sl;
                const double score = sl * sl / wl + sr * sr / wr;
                if (score > best_score) {
                    best_score = score;
                    best_feature = f;
                    best_split = k + 1;
                    double mid = 0.5 * (x_here + x_next);
                    if (!(mid < x_next)) mid = x_here;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) return id;

        const int* best_seg = order_.data() + best_feature * m_ + lo;
        for (std::size_t k = 0; k < hi - lo; ++k) {
            goes_left_[static_cast<std::size_t>(best_seg[k])] = k < best_split ? 1 : 0;
        }
        for (int f = 0; f < d_; ++f) {
            int* seg = order_.data() + f * m_ + lo;
            std::size_t nl = 0;
            std::size_t nr = 0;
            for (std::size_t k = 0; k < hi - lo; ++k) {
                if (goes_left_[static_cast<std::size_t>(seg[k])]) seg[nl++] = seg[k];
                else scratch_[nr++] = seg[k];
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(nr), seg + nl);
        }

        const int left = grow(tree, lo, lo + best_split, depth + 1);
        const int right = grow(tree, lo + best_split, hi, depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    std::vector<double> w_;
    int max_depth_;
    int d_;
    std::size_t m_ = 0;
    std::vector<int> order_;
    std::vector<char> goes_left_;
    std::vector<int> scratch_;
};

}  // namespace

ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& cfg) {
    if (X.rows() != y.size()) throw DataError("X and y row counts differ");
    if (X.rows() < 1 || X.cols() < 1) throw DataError("empty training set");
    if (cfg.n_trees < 1) throw DataError("n_trees must be positive");
    if (cfg.max_depth != kUnlimitedDepth && cfg.max_depth < 0) throw DataError("max_depth must be >= 0");

    const auto n = static_cast<std::size_t>(X.rows());
    const int d = static_cast<int>(X.cols());
    std::vector<std::vector<int>> presorted(static_cast<std::size_t>(d), std::vector<int>(n));
    for (int f = 0; f < d; ++f) {
        auto& idx = presorted[static_cast<std::size_t>(f)];
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
    }

    ForestModel model;
    model.input_dim = d;
    model.max_depth = cfg.max_depth;
    model.trees.reserve(static_cast<std::size_t>(cfg.n_trees));
    for (int t = 0; t < cfg.n_trees; ++t) {
        const std::uint64_t tree_seed = cfg.seed + static_cast<std::uint64_t>(t);
        model.tree_seeds.push_back(tree_seed);
        std::vector<double> weight(n, 0.0);
        if (cfg.bootstrap) {
            std::mt19937_64 rng(tree_seed);
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (std::size_t k = 0; k < n; ++k) weight[pick(rng)] += 1.0;
        } else {
            std::fill(weight.begin(), weight.end(), 1.0);
        }
        TreeBuilder builder(X, y, std::move(weight), presorted, cfg.max_depth);
        model.trees.push_back(builder.build());
    }
    return model;
}

}  // namespace volidx
