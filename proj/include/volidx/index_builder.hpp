#pragma once

#include "volidx/features.hpp"
#include "volidx/regressors.hpp"
#include "volidx/targets.hpp"
#include "volidx/vix.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace volidx {

struct WeightLeg {
    QuoteKey key;
    /// Variance units per unit of option mid price.
    double weight = 0.0;
};

/// The day's variance forecast written as an option portfolio plus cash.
struct PortfolioWeights {
    Date date;
    RegressionMode mode = RegressionMode::RegI;
    /// Legs of the model part f(x), sorted by key.
    std::vector<WeightLeg> legs;
    double cash_constant = 0.0;
    /// RegII only: option legs of the squared index.
    std::vector<WeightLeg> vix_legs;
    /// RegII only: the squared index's forward correction, which no option
    /// position replicates.
    double vix_adjustment = 0.0;

    /// legs and vix_legs merged by key.
    [[nodiscard]] std::vector<WeightLeg> combined_legs() const;
    /// cash_constant + vix_adjustment
    [[nodiscard]] double total_cash() const { return cash_constant + vix_adjustment; }
};

/// Composes the model's local affine form with the row's feature map.
/// `normalized_row` must be the row the model sees (normalizer applied).
/// Throws NotPiecewiseLinear for forests, NotReplicable when the row uses
/// returns features, and DataError when the row's affine map does not
/// reproduce its values or RegII lacks `vix`.
[[nodiscard]] PortfolioWeights daily_weights(const RegressionModel& model, const FeatureRow& normalized_row,
                                             RegressionMode mode, const VixResult* vix);

struct ReplicationResult {
    double forecast = 0.0;
    double replicated = 0.0;
    double residual = 0.0;
    bool flagged = false;
};

/// Prices the portfolio at the snapshot's mids. Flags residuals above
/// 1e-8 * max(1, |forecast|). Throws DataError when a leg has no quote.
[[nodiscard]] ReplicationResult replication_check(const PortfolioWeights& weights, const ChainSnapshot& snapshot,
                                                  double forecast);

struct LiquidityRow {
    Date date;
    int n_legs = 0;
    int n_material = 0;
    /// Sum of |w_t - w_{t-1}| over the union of both days' legs; NaN on the first day.
    double turnover = 0.0;
    double cash = 0.0;
    double adjustment = 0.0;
};

/// Legs count as material when |weight| > `materiality`.
[[nodiscard]] std::vector<LiquidityRow> liquidity_report(std::span<const PortfolioWeights> series,
                                                         double materiality);

void write_weights_csv(const std::filesystem::path& path, std::span<const PortfolioWeights> series);
void write_liquidity_csv(const std::filesystem::path& path, std::span<const LiquidityRow> rows);

}  // namespace volidx
