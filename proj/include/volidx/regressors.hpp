#pragma once

#include "volidx/fnn.hpp"
#include "volidx/forest.hpp"
#include "volidx/linear_model.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

namespace volidx {

using RegressionModel = std::variant<LinearModel, FnnModel, ForestModel>;

/// Exact affine form of a piecewise-linear model around one input.
struct LocalAffine {
    std::vector<double> coefficients;
    double constant = 0.0;
    /// Active hidden units at the query point (empty for linear models).
    std::vector<bool> hidden_pattern;
    bool output_active = true;

    [[nodiscard]] double evaluate(std::span<const double> x) const;
};

[[nodiscard]] int input_dimension(const RegressionModel& model);
[[nodiscard]] double predict(const RegressionModel& model, std::span<const double> x);

/// Throws NotPiecewiseLinear for forests and DataError on a dimension mismatch.
[[nodiscard]] LocalAffine local_affine(const RegressionModel& model, std::span<const double> x);

/// Text serialization. Layout (one token group per line):
///   volidx-model 1
///   linear <dim> <lambda> <intercept> / coefficients
///   fnn <dim> <hidden> <lambda> <shift> <scale> <epochs> <final_loss> / w1 rows / b1 / w2 / b2
///   forest <dim> <max_depth> <n_trees> then per tree: tree <seed> <n_nodes> and one node per line
/// Numbers use the shortest round-trip decimal form.
void write_model(std::ostream& out, const RegressionModel& model);
[[nodiscard]] RegressionModel read_model(std::istream& in);

}  // namespace volidx
