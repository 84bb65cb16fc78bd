#include "volidx/linear_model.hpp"

#include "volidx/errors.hpp"

#include <string>

namespace volidx {

double LinearModel::predict(std::span<const double> x) const {
    if (x.size() != coefficients.size()) {
        throw DataError("input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(coefficients.size()));
    }
    double v = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) v += coefficients[i] * x[i];
    return v;
}

namespace {

void check_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw DataError("X and y row counts differ");
    if (X.rows() < 2) throw DataError("need at least two rows to fit");
}

LinearModel to_model(const Eigen::VectorXd& beta, double intercept, double lambda) {
    LinearModel m;
    m.coefficients.assign(beta.data(), beta.data() + beta.size());
    m.intercept = intercept;
    m.ridge_lambda = lambda;
    return m;
}

}  // namespace

LinearModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    check_shapes(X, y);
    if (X.rows() <= X.cols()) {
        throw NumericalError("OLS needs more rows than features");
    }
    Eigen::MatrixXd design(X.rows(), X.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(X.cols()) = X;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols()) {
        throw NumericalError("OLS design is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(design.cols()) + "); use ridge for collinear features");
    }
    const Eigen::VectorXd solution = qr.solve(y);
    return to_model(solution.tail(X.cols()), solution(0), 0.0);
}

LinearModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    check_shapes(X, y);
    if (!(lambda >= 0.0)) throw DataError("ridge lambda must be non-negative");
    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd gram = Xc.transpose() * Xc;
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd rhs = Xc.transpose() * yc;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericalError("ridge normal matrix is not positive definite");
    }
    const Eigen::VectorXd beta = ldlt.solve(rhs);
    if (!beta.allFinite()) throw NumericalError("ridge solve produced non-finite coefficients");
    return to_model(beta, y_mean - x_mean.dot(beta), lambda);
}

}  // namespace volidx
