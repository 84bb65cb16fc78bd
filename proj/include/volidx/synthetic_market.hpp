#pragma once

#include "volidx/market_data.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace volidx {

/// Discrete-time square-root variance process, annualized units.
struct VolProcess {
    double mean_reversion = 4.0;
    double long_run_variance = 0.04;
    double vol_of_vol = 0.5;
    double correlation = -0.7;
};

/// Parameters of the built-in market generator. Field names double as the
/// keys of the flat `key = value` configuration file.
struct SyntheticMarketConfig {
    int n_days = 2500;
    double spot0 = 1000.0;
    VolProcess vol_process;
    /// Multiplies the model volatility to obtain the quoted implied volatility.
    double premium = 1.15;
    double strike_spacing = 5.0;
    int strikes_per_side = 40;
    /// Calendar-day tenors of the two listed expiries, re-listed every day.
    std::pair<int, int> tenor_days{23, 37};
    double quote_gap_rate = 0.0;
    std::uint64_t rng_seed = 42;
    double rate = 0.02;
    double relative_half_spread = 0.02;
    Date start_date = Date::from_ymd(2010, 1, 4);

    /// Throws DataError when a field is out of range.
    void validate() const;
    /// Throws DataError unless the listed tenors bracket `horizon_days`.
    void require_brackets(int horizon_days) const;
};

/// Applies `key = value` overrides. Unknown keys throw DataError.
void apply_config_overrides(SyntheticMarketConfig& cfg, const std::map<std::string, std::string>& kv);

struct SyntheticMarket {
    MarketData market;
    /// Instantaneous annualized model variance on each day (after truncation).
    std::vector<double> model_variance;
    /// Forward of each listed expiry (near, next) on each day.
    std::vector<std::array<double, 2>> forwards;
};

/// Deterministic in `cfg`. Variance follows a full-truncation Euler scheme;
/// every listed option is priced with Black-Scholes at
/// premium * sqrt(model variance), and quotes other than each expiry's
/// at-the-money strike are dropped with probability `quote_gap_rate`.
SyntheticMarket generate_synthetic_market(const SyntheticMarketConfig& cfg);

/// Discounted European price on a forward. `years` and `vol` may be zero.
[[nodiscard]] double black_scholes_price(OptionKind kind, double forward, double strike,
                                         double years, double rate, double vol);

}  // namespace volidx
