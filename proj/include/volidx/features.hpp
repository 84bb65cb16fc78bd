#pragma once

#include "volidx/market_data.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace volidx {

struct FeatureConfig {
    int horizon_days = 30;
    /// n; the option feature count is 2n + 1.
    int strikes_per_side = 20;
    /// Grid step in units of `base_spacing` (1 = consecutive strikes).
    int strike_step = 1;
    double base_spacing = 5.0;
    bool include_returns_features = false;
    std::vector<int> return_lookbacks{1, 5, 15, 30, 60, 90};
    std::vector<int> variance_lookbacks{15, 30, 60, 90};

    void validate() const;
    [[nodiscard]] int option_feature_count() const { return 2 * strikes_per_side + 1; }
    [[nodiscard]] int feature_count() const;
    /// Longest return history a returns feature needs.
    [[nodiscard]] int max_lookback() const;
};

using QuoteMids = std::map<QuoteKey, double>;

struct AffineTerm {
    QuoteKey key;
    double coefficient = 0.0;
};

/// value = sum(coefficient * mid) + constant. Features built from the
/// underlying's own history are not tradable and carry their value in
/// `constant`.
struct AffineFeature {
    std::vector<AffineTerm> terms;
    double constant = 0.0;
    bool tradable = true;
};

/// Exact affine map from the day's raw option mids to its feature vector.
struct AffineMap {
    std::vector<AffineFeature> features;

    /// Throws DataError when a referenced quote is absent.
    [[nodiscard]] std::vector<double> evaluate(const std::function<double(const QuoteKey&)>& mid_of) const;
    [[nodiscard]] std::vector<double> evaluate(const ChainSnapshot& snapshot) const;
    [[nodiscard]] std::vector<double> evaluate(const QuoteMids& mids) const;
    [[nodiscard]] bool tradable() const;
};

struct FeatureRow {
    Date date;
    std::vector<double> values;
    std::vector<double> strike_grid;
    AffineMap affine;
    /// The raw mids `affine` reads, as observed when the row was built.
    QuoteMids source_mids;

    [[nodiscard]] bool tradable() const { return affine.tradable(); }
    /// Largest |affine(source_mids) - values|.
    [[nodiscard]] double affine_error() const;
};

/// Linear interpolation of a mid between two expiries at tenor `t`.
/// All tenors in the same unit; throws DataError when t lies outside [t1, t2].
[[nodiscard]] double interpolate_tenor(double q1, double q2, double t1, double t2, double t);

/// {K0 + i * step * base_spacing : i = -n..n}
[[nodiscard]] std::vector<double> build_strike_grid(double k0, int n, double base_spacing, int step);

struct StrikeQuote {
    double strike = 0.0;
    double mid = 0.0;
};

struct FilledMid {
    double value = 0.0;
    /// (donor strike, weight); weights sum to one.
    std::vector<std::pair<double, double>> donors;
};

/// Mid at `strike` from same-expiry, same-kind quotes sorted by strike:
/// the quote itself when present, otherwise linear in strike between the
/// nearest quoted strikes below and above. With quotes on one side only the
/// nearest one is carried flat. Throws DataError when `quoted` is empty.
[[nodiscard]] FilledMid fill_missing(double strike, std::span<const StrikeQuote> quoted);

/// Mid divided by strike squared.
[[nodiscard]] double prescale(double mid, double strike);

/// Per-feature z-score with the sample (n - 1) standard deviation.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    [[nodiscard]] std::vector<double> transform(std::span<const double> values) const;
};

/// Throws DataError for fewer than two rows or a constant feature.
[[nodiscard]] Normalizer fit_normalizer(std::span<const FeatureRow> rows);
[[nodiscard]] Normalizer fit_normalizer(std::span<const std::vector<double>> values);
/// Normalized values with the z-score composed into the affine map.
[[nodiscard]] FeatureRow apply_normalizer(const Normalizer& normalizer, const FeatureRow& row);

/// Six lagged returns followed by four trailing realized variances
/// (annualized) at price index `index`, using data up to and including it.
[[nodiscard]] std::vector<double> returns_features(const PriceSeries& prices, std::size_t index,
                                                   const FeatureConfig& cfg);

/// Features for one day. `prices` is only read when returns features are on.
[[nodiscard]] FeatureRow build_feature_row(const ChainSnapshot& snapshot, const PriceSeries& prices,
                                           const FeatureConfig& cfg);

struct SkippedDate {
    Date date;
    std::string reason;
};

struct FeatureDataset {
    std::vector<FeatureRow> rows;
    std::vector<SkippedDate> skipped;
};

/// One row per resolvable date; every row's affine map is checked against
/// the snapshot's mids to 1e-10. Failing dates are skipped and reported.
[[nodiscard]] FeatureDataset build_dataset(std::span<const ChainSnapshot> chains, const PriceSeries& prices,
                                           const FeatureConfig& cfg);

void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureRow> rows);
void write_affine_csv(const std::filesystem::path& path, const FeatureRow& row);

}  // namespace volidx
