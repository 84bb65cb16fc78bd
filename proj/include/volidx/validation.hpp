#pragma once

#include "volidx/features.hpp"
#include "volidx/index_builder.hpp"
#include "volidx/regressors.hpp"
#include "volidx/targets.hpp"
#include "volidx/vix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volidx {

/// Half-open [begin, end) over observation indices.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const { return end > begin ? end - begin : 0; }
    [[nodiscard]] bool empty() const { return size() == 0; }
    [[nodiscard]] bool contains(std::size_t i) const { return begin <= i && i < end; }
    auto operator<=>(const IndexRange&) const = default;
};

struct FoldPlan {
    IndexRange train;
    /// Tail dropped from the training window because its targets overlap the test period.
    IndexRange purge;
    IndexRange test;
};

/// Expanding-window folds: fold k tests [initial + k*step, initial + (k+1)*step)
/// (the last fold may be shorter) and trains on [0, test_begin - purge).
/// Throws DataError unless initial > purge and n_obs > initial.
[[nodiscard]] std::vector<FoldPlan> rolling_splits(std::size_t n_obs, std::size_t initial = 1000,
                                                   std::size_t step = 30, std::size_t purge = 30);

/// 1 - SSE / sum((y - mean(y))^2) with the mean over `actuals`. Throws
/// DataError for mismatched or short inputs and NumericalError when the
/// actuals are constant.
[[nodiscard]] double oos_r2(std::span<const double> actuals, std::span<const double> preds);

enum class Algorithm {
    /// The squared index itself (a zero model in RegII).
    Benchmark,
    Linear,
    Ridge,
    Forest,
    Fnn,
};

[[nodiscard]] std::string_view algorithm_name(Algorithm algo);
/// Column heading used in rendered tables.
[[nodiscard]] std::string_view algorithm_label(Algorithm algo);
/// Accepts vix, linear, ridge, forest, fnn.
[[nodiscard]] Algorithm parse_algorithm(std::string_view text);

[[nodiscard]] std::vector<double> default_lambda_grid();
/// kUnlimitedDepth stands for fully grown trees.
[[nodiscard]] std::vector<int> default_depth_grid();

/// One date with everything a backtest needs.
struct DatasetRow {
    Date date;
    std::size_t price_index = 0;
    FeatureRow features;
    VixResult vix;
    double realized_var = 0.0;
    double vix_star_sq = 0.0;
};

struct Dataset {
    FeatureConfig config;
    std::vector<DatasetRow> rows;
    std::vector<SkippedDate> skipped;
};

/// Features, the fixed-count index (same strikes per side and step as the
/// features) and the forward realized variance for every usable date.
[[nodiscard]] Dataset assemble_dataset(const MarketData& market, const FeatureConfig& cfg);

struct BacktestConfig {
    std::size_t initial = 1000;
    std::size_t step = 30;
    /// Observations purged before each test block; the target horizon.
    std::size_t purge = 30;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::vector<int> depth_grid = default_depth_grid();
    /// Fraction of each training window used to fit during tuning.
    double tune_fit_fraction = 0.8;
    FnnTrainConfig fnn;
    /// RegII only: train the network on y - min(y).
    bool fnn_shift_reg2 = true;
    ForestConfig forest;
    std::uint64_t seed = 0;
    /// Build portfolio weights and replication checks for each test day.
    bool compute_weights = false;
    double materiality = 1e-6;
    int jobs = 1;
};

struct PredictionRecord {
    Date date;
    double actual = 0.0;
    double pred = 0.0;
    double vix_star_sq = 0.0;
    std::size_t fold = 0;
    std::string hyperparam;
};

struct FoldSummary {
    std::size_t fold = 0;
    FoldPlan plan;
    std::size_t n_train = 0;
    std::string hyperparam;
};

struct ReplicationRecord {
    Date date;
    ReplicationResult result;
};

/// Model fitted on the last fold's training window, with its normalizer.
struct FittedModel {
    RegressionModel model;
    Normalizer normalizer;
    std::string hyperparam;
};

struct BacktestReport {
    Algorithm algorithm = Algorithm::Linear;
    RegressionMode mode = RegressionMode::RegI;
    int n_options = 0;
    double oos_r2 = 0.0;
    std::vector<PredictionRecord> predictions;
    std::vector<FoldSummary> folds;
    std::vector<PortfolioWeights> weights;
    std::vector<ReplicationRecord> replication;
    std::vector<LiquidityRow> liquidity;
    std::optional<FittedModel> final_model;
};

/// Hyperparameter chosen on the training rows `train`: fit on the first
/// part, score R^2 on the rest (on the variance scale), with the purge gap
/// between them. Ties favour stronger regularization. Returns the sole
/// grid value without fitting when the grid has one entry.
[[nodiscard]] double tune(Algorithm algo, std::span<const double> grid, std::span<const DatasetRow> rows,
                          std::span<const std::size_t> train, RegressionMode mode, const BacktestConfig& cfg,
                          std::uint64_t seed);

/// Fits `algo` with hyperparameter `h` on already normalized X and mode targets y.
[[nodiscard]] RegressionModel fit_algorithm(Algorithm algo, double h, const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& y, RegressionMode mode,
                                            const BacktestConfig& cfg, std::uint64_t seed);

/// Walk-forward backtest. `chains` is needed only with compute_weights.
[[nodiscard]] BacktestReport run_backtest(const Dataset& dataset, Algorithm algo, RegressionMode mode,
                                          const BacktestConfig& cfg,
                                          std::span<const ChainSnapshot> chains = {});

/// `date,actual,pred,fold,hyperparam`
void write_predictions_csv(const std::filesystem::path& path, const BacktestReport& report);
/// `algorithm,mode,n_options,oos_r2`
void write_summary_csv(const std::filesystem::path& path, const BacktestReport& report);

}  // namespace volidx
