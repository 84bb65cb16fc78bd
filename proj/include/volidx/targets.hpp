#pragma once

#include "volidx/market_data.hpp"

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace volidx {

/// Daily variances are multiplied by this to sit on the same annualized
/// scale as the squared volatility index.
inline constexpr double kTradingDaysPerYear = 252.0;

enum class RegressionMode {
    /// Predict realized variance directly.
    RegI,
    /// Predict realized variance minus the squared index.
    RegII,
};

[[nodiscard]] std::string_view mode_name(RegressionMode mode);
/// Accepts `reg1` / `reg2`.
[[nodiscard]] RegressionMode parse_mode(std::string_view text);

/// Demeaned variance of the T daily returns following price index `t`
/// (non-annualized). Throws DataError without T prices after `t`.
[[nodiscard]] double realized_variance(const PriceSeries& prices, std::size_t t, int horizon);

struct TargetRow {
    Date date;
    int horizon_days = 0;
    /// Annualized.
    double realized_var = 0.0;
    /// (VIX* / 100)^2
    double vix_star_sq = 0.0;
    RegressionMode mode = RegressionMode::RegI;
    double target = 0.0;
};

struct IndexObservation {
    Date date;
    double vix_star_sq = 0.0;
};

/// Regression target for `mode`.
[[nodiscard]] double regression_target(RegressionMode mode, double realized_var, double vix_star_sq);
/// Model output mapped back onto the realized-variance scale.
[[nodiscard]] double reconstruct_variance(RegressionMode mode, double model_output, double vix_star_sq);

/// One row per observation whose forward window fits inside `prices`.
/// Throws DataError when an observation's date is not a price date or the
/// observations are not increasing.
[[nodiscard]] std::vector<TargetRow> build_targets(const PriceSeries& prices,
                                                   std::span<const IndexObservation> index_series,
                                                   RegressionMode mode, int horizon);

void write_targets_csv(const std::filesystem::path& path, std::span<const TargetRow> rows);

}  // namespace volidx
