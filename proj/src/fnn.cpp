#include "volidx/fnn.hpp"

#include "volidx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace volidx {

FnnModel::Activation FnnModel::activate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim) {
        throw DataError("input has " + std::to_string(x.size()) + " features, network expects " +
                        std::to_string(input_dim));
    }
    Activation act;
    act.hidden_pre.resize(static_cast<std::size_t>(hidden));
    act.hidden_on.resize(static_cast<std::size_t>(hidden));
    double z2 = b2;
    for (int j = 0; j < hidden; ++j) {
        const double* row = w1.data() + static_cast<std::size_t>(j) * input_dim;
        double z = b1[static_cast<std::size_t>(j)];
        for (int i = 0; i < input_dim; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
        act.hidden_pre[static_cast<std::size_t>(j)] = z;
        act.hidden_on[static_cast<std::size_t>(j)] = z > 0.0;
        if (z > 0.0) z2 += w2[static_cast<std::size_t>(j)] * z;
    }
    act.output_pre = z2;
    act.output_on = z2 > 0.0;
    return act;
}

double FnnModel::network_output(std::span<const double> x) const {
    const auto act = activate(x);
    return act.output_on ? act.output_pre : 0.0;
}

double FnnModel::predict(std::span<const double> x) const {
    return output_shift + output_scale * network_output(x);
}

FnnModel init_fnn(int input_dim, int hidden, std::uint64_t seed, double output_bias) {
    if (input_dim < 1 || hidden < 1) throw DataError("network dimensions must be positive");
    FnnModel m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    std::mt19937_64 rng(seed);
    const double a1 = std::sqrt(6.0 / (input_dim + hidden));
    const double a2 = std::sqrt(6.0 / (hidden + 1));
    std::uniform_real_distribution<double> u1(-a1, a1);
    std::uniform_real_distribution<double> u2(-a2, a2);
    m.w1.resize(static_cast<std::size_t>(input_dim) * hidden);
    for (auto& w : m.w1) w = u1(rng);
    m.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    m.w2.resize(static_cast<std::size_t>(hidden));
    for (auto& w : m.w2) w = u2(rng);
    m.b2 = output_bias;
    return m;
}

namespace {

/// Flat parameter view: [W1 | b1 | w2 | b2].
struct Layout {
    std::size_t d;
    std::size_t h;
    [[nodiscard]] std::size_t w1() const { return 0; }
    [[nodiscard]] std::size_t b1() const { return d * h; }
    [[nodiscard]] std::size_t w2() const { return d * h + h; }
    [[nodiscard]] std::size_t b2() const { return d * h + 2 * h; }
    [[nodiscard]] std::size_t size() const { return d * h + 2 * h + 1; }
};

std::vector<double> flatten(const FnnModel& m) {
    std::vector<double> p;
    p.reserve(m.w1.size() + 2 * m.b1.size() + 1);
    p.insert(p.end(), m.w1.begin(), m.w1.end());
    p.insert(p.end(), m.b1.begin(), m.b1.end());
    p.insert(p.end(), m.w2.begin(), m.w2.end());
    p.push_back(m.b2);
    return p;
}

void unflatten(const std::vector<double>& p, const Layout& L, FnnModel& m) {
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(L.w1()), p.begin() + static_cast<std::ptrdiff_t>(L.b1()),
              m.w1.begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(L.b1()), p.begin() + static_cast<std::ptrdiff_t>(L.w2()),
              m.b1.begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(L.w2()), p.begin() + static_cast<std::ptrdiff_t>(L.b2()),
              m.w2.begin());
    m.b2 = p[L.b2()];
}

/// Accumulates the batch-mean squared-error gradient of rows `batch` into
/// `grad` (which must be zeroed) and returns the batch-mean squared error.
/// `x` is row-major n x d.
double batch_gradient(const std::vector<double>& p, const Layout& L, const double* x, const double* y,
                      std::span<const std::size_t> batch, std::vector<double>& grad, std::vector<double>& z1) {
    const std::size_t d = L.d;
    const std::size_t h = L.h;
    const double* w1 = p.data() + L.w1();
    const double* b1 = p.data() + L.b1();
    const double* w2 = p.data() + L.w2();
    const double b2 = p[L.b2()];
    double* g_w1 = grad.data() + L.w1();
    double* g_b1 = grad.data() + L.b1();
    double* g_w2 = grad.data() + L.w2();
    double& g_b2 = grad[L.b2()];
    const double inv_m = 1.0 / static_cast<double>(batch.size());

    double sse = 0.0;
    for (std::size_t r : batch) {
        const double* xr = x + r * d;
        double z2 = b2;
        for (std::size_t j = 0; j < h; ++j) {
            const double* row = w1 + j * d;
            double z = b1[j];
            for (std::size_t i = 0; i < d; ++i) z += row[i] * xr[i];
            z1[j] = z;
            if (z > 0.0) z2 += w2[j] * z;
        }
        const double out = z2 > 0.0 ? z2 : 0.0;
        const double err = out - y[r];
        sse += err * err;
        if (z2 <= 0.0) continue;
        const double dz2 = 2.0 * err * inv_m;
        g_b2 += dz2;
        for (std::size_t j = 0; j < h; ++j) {
            if (z1[j] <= 0.0) continue;
            g_w2[j] += dz2 * z1[j];
            const double dz1 = dz2 * w2[j];
            g_b1[j] += dz1;
            double* grow = g_w1 + j * d;
            for (std::size_t i = 0; i < d; ++i) grow[i] += dz1 * xr[i];
        }
    }
    return sse * inv_m;
}

double penalty(const std::vector<double>& p, const Layout& L) {
    double s = 0.0;
    for (std::size_t k = L.w1(); k < L.b1(); ++k) s += p[k] * p[k];
    for (std::size_t k = L.w2(); k < L.b2(); ++k) s += p[k] * p[k];
    return s;
}

void add_penalty_gradient(const std::vector<double>& p, const Layout& L, double lambda, std::vector<double>& grad) {
    if (lambda == 0.0) return;
    for (std::size_t k = L.w1(); k < L.b1(); ++k) grad[k] += 2.0 * lambda * p[k];
    for (std::size_t k = L.w2(); k < L.b2(); ++k) grad[k] += 2.0 * lambda * p[k];
}

std::vector<double> row_major(const Eigen::MatrixXd& X) {
    std::vector<double> out(static_cast<std::size_t>(X.size()));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            out[static_cast<std::size_t>(r * X.cols() + c)] = X(r, c);
        }
    }
    return out;
}

void check_data(const FnnModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw DataError("X and y row counts differ");
    if (X.cols() != m.input_dim) throw DataError("X width does not match the network input");
    if (X.rows() < 1) throw DataError("need at least one row");
}

}  // namespace

FnnGradient fnn_loss_gradient(const FnnModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double lambda) {
    check_data(model, X, y);
    const Layout L{static_cast<std::size_t>(model.input_dim), static_cast<std::size_t>(model.hidden)};
    const auto p = flatten(model);
    const auto x = row_major(X);
    std::vector<double> grad(L.size(), 0.0);
    std::vector<double> z1(L.h);
    std::vector<std::size_t> all(static_cast<std::size_t>(X.rows()));
    std::iota(all.begin(), all.end(), 0);
    const double mse = batch_gradient(p, L, x.data(), y.data(), all, grad, z1);
    const double pen = lambda / static_cast<double>(X.rows());
    add_penalty_gradient(p, L, pen, grad);

    FnnGradient g;
    g.loss = mse + pen * penalty(p, L);
    g.w1.assign(grad.begin() + static_cast<std::ptrdiff_t>(L.w1()), grad.begin() + static_cast<std::ptrdiff_t>(L.b1()));
    g.b1.assign(grad.begin() + static_cast<std::ptrdiff_t>(L.b1()), grad.begin() + static_cast<std::ptrdiff_t>(L.w2()));
    g.w2.assign(grad.begin() + static_cast<std::ptrdiff_t>(L.w2()), grad.begin() + static_cast<std::ptrdiff_t>(L.b2()));
    g.b2 = grad[L.b2()];
    return g;
}

double fnn_loss(const FnnModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    check_data(model, X, y);
    double sse = 0.0;
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) row[static_cast<std::size_t>(c)] = X(r, c);
        const double err = model.network_output(row) - y(r);
        sse += err * err;
    }
    const Layout L{static_cast<std::size_t>(model.input_dim), static_cast<std::size_t>(model.hidden)};
    return (sse + lambda * penalty(flatten(model), L)) / static_cast<double>(X.rows());
}

FnnModel fit_fnn(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const FnnTrainConfig& cfg) {
    if (X.rows() != y.size()) throw DataError("X and y row counts differ");
    if (X.rows() < 1 || X.cols() < 1) throw DataError("empty training set");
    if (!(lambda >= 0.0)) throw DataError("lambda must be non-negative");
    if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
        throw DataError("invalid FNN training configuration");
    }
    const auto n = static_cast<std::size_t>(X.rows());
    const int d = static_cast<int>(X.cols());

    const double shift = cfg.shift_target_to_min ? y.minCoeff() : 0.0;
    double scale = 1.0;
    if (cfg.scale_target) {
        const Eigen::ArrayXd centered = (y.array() - shift) - (y.array() - shift).mean();
        const double sd = std::sqrt(centered.square().mean());
        if (sd > 0.0) scale = sd;
    }
    std::vector<double> ys(n);
    for (std::size_t r = 0; r < n; ++r) ys[r] = (y(static_cast<Eigen::Index>(r)) - shift) / scale;
    const double y_mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);

    FnnModel model = init_fnn(d, d, cfg.seed, y_mean);
    model.output_shift = shift;
    model.output_scale = scale;
    model.lambda = lambda;

    const Layout L{static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    const double pen = lambda / static_cast<double>(n);
    auto p = flatten(model);
    const auto x = row_major(X);
    std::vector<double> grad(L.size());
    std::vector<double> z1(L.h);
    std::vector<double> m1;
    std::vector<double> m2;
    if (cfg.optimizer == FnnOptimizer::Adam) {
        m1.assign(L.size(), 0.0);
        m2.assign(L.size(), 0.0);
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    long long step = 0;

    std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            epoch_loss += batch_gradient(p, L, x.data(), ys.data(),
                                         std::span<const std::size_t>(order.data() + start, len), grad, z1) *
                          static_cast<double>(len);
            add_penalty_gradient(p, L, pen, grad);
            ++step;
            if (cfg.optimizer == FnnOptimizer::Sgd) {
                for (std::size_t k = 0; k < p.size(); ++k) p[k] -= cfg.learning_rate * grad[k];
            } else {
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for (std::size_t k = 0; k < p.size(); ++k) {
                    m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
                    m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
                    p[k] -= cfg.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
                }
            }
        }
        if (!std::isfinite(epoch_loss)) {
            throw NumericalError("FNN training diverged at epoch " + std::to_string(epoch + 1));
        }
        model.epochs_trained = epoch + 1;
    }
    unflatten(p, L, model);

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::fill(grad.begin(), grad.end(), 0.0);
    model.final_loss = batch_gradient(p, L, x.data(), ys.data(), all, grad, z1) + pen * penalty(p, L);
    if (!std::isfinite(model.final_loss)) {
        throw NumericalError("FNN training produced a non-finite loss");
    }
    return model;
}

}  // namespace volidx
