#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace volidx {

enum class FnnOptimizer { Sgd, Adam };

struct FnnTrainConfig {
    int epochs = 2000;
    double learning_rate = 1e-3;
    /// Batches larger than the sample degrade to full-batch descent.
    int batch_size = 32;
    std::uint64_t seed = 0;
    FnnOptimizer optimizer = FnnOptimizer::Sgd;
    /// Fit y - min(y) instead of y so that the output ReLU can reach every
    /// training target; the shift is added back at prediction time.
    bool shift_target_to_min = false;
    /// Divide the (shifted) target by its standard deviation while training.
    bool scale_target = true;
};

/// One-hidden-layer ReLU network with a ReLU output unit:
///   out = relu(w2 . relu(W1 x + b1) + b2),  prediction = shift + scale * out.
/// The hidden width equals the input width.
struct FnnModel {
    int input_dim = 0;
    int hidden = 0;
    /// Row-major hidden x input.
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
    double output_shift = 0.0;
    double output_scale = 1.0;
    double lambda = 0.0;
    int epochs_trained = 0;
    double final_loss = 0.0;

    /// Pre-activations and ReLU gates at one input.
    struct Activation {
        std::vector<double> hidden_pre;
        std::vector<bool> hidden_on;
        double output_pre = 0.0;
        bool output_on = false;
    };

    [[nodiscard]] Activation activate(std::span<const double> x) const;
    /// Raw network output before shift and scale.
    [[nodiscard]] double network_output(std::span<const double> x) const;
    [[nodiscard]] double predict(std::span<const double> x) const;
};

/// Glorot-uniform weights, zero hidden biases, output bias `output_bias`.
[[nodiscard]] FnnModel init_fnn(int input_dim, int hidden, std::uint64_t seed, double output_bias = 0.0);

struct FnnGradient {
    double loss = 0.0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
};

/// Loss (sum((network_output - y)^2) + lambda * (|W1|^2 + |w2|^2)) / n, i.e.
/// the ridge objective per sample, and its gradient by backpropagation
/// (ReLU'(0) = 0). Biases are not penalized.
[[nodiscard]] FnnGradient fnn_loss_gradient(const FnnModel& model, const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& y, double lambda);
[[nodiscard]] double fnn_loss(const FnnModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double lambda);

/// Mini-batch gradient descent on the loss above (each batch uses its own
/// mean error plus the full-sample penalty). Deterministic in
/// `cfg.seed`; throws NumericalError if the loss stops being finite.
[[nodiscard]] FnnModel fit_fnn(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                               const FnnTrainConfig& cfg = {});

}  // namespace volidx
