#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace volidx {

/// Globally affine predictor: coefficients . x + intercept.
struct LinearModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    /// 0 for ordinary least squares.
    double ridge_lambda = 0.0;

    [[nodiscard]] double predict(std::span<const double> x) const;
};

/// Least squares with an unpenalized intercept, solved by column-pivoting
/// Householder QR. Throws NumericalError when the design (with intercept)
/// is rank deficient.
[[nodiscard]] LinearModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Minimizes ||y - X b - b0||^2 + lambda ||b||^2 on centered data.
[[nodiscard]] LinearModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);

}  // namespace volidx
