#pragma once

#include "volidx/date.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volidx {

enum class OptionKind { Call, Put };

[[nodiscard]] char kind_code(OptionKind kind);
/// Accepts `C` or `P`.
[[nodiscard]] OptionKind parse_kind(std::string_view text);

/// Identifies one listed option within a snapshot.
struct QuoteKey {
    Date expiry;
    double strike = 0.0;
    OptionKind kind = OptionKind::Call;

    auto operator<=>(const QuoteKey&) const = default;
};

/// One bid/ask quote. Use make() so that the invariants are checked.
struct OptionQuote {
    Date quote_date;
    Date expiry;
    double strike = 0.0;
    OptionKind kind = OptionKind::Call;
    double bid = 0.0;
    double ask = 0.0;
    double mid = 0.0;

    /// Throws DataError unless 0 <= bid <= ask, strike > 0 and expiry > quote_date.
    static OptionQuote make(Date quote_date, Date expiry, double strike, OptionKind kind,
                            double bid, double ask);

    /// Zero-bid quotes count as missing for strike selection.
    [[nodiscard]] bool usable() const { return bid > 0.0; }
    [[nodiscard]] QuoteKey key() const { return {expiry, strike, kind}; }
};

/// All quotes observed on one date plus the rates and forwards needed to
/// price them. Immutable once constructed.
class ChainSnapshot {
public:
    ChainSnapshot(Date date, double spot, std::vector<OptionQuote> quotes,
                  std::map<int, double> forward_by_tenor = {},
                  std::map<int, double> rate_by_tenor = {});

    [[nodiscard]] Date date() const { return date_; }
    [[nodiscard]] double spot() const { return spot_; }
    /// Sorted by (expiry, kind, strike).
    [[nodiscard]] std::span<const OptionQuote> quotes() const { return quotes_; }
    [[nodiscard]] const std::map<int, double>& forward_by_tenor() const { return forward_by_tenor_; }
    [[nodiscard]] const std::map<int, double>& rate_by_tenor() const { return rate_by_tenor_; }

    [[nodiscard]] std::vector<Date> expiries() const;
    /// Union of strikes quoted for either kind at `expiry`, ascending.
    [[nodiscard]] std::vector<double> strikes(Date expiry) const;
    /// Quotes of one (expiry, kind), ascending in strike.
    [[nodiscard]] std::span<const OptionQuote> slice(Date expiry, OptionKind kind) const;

    [[nodiscard]] const OptionQuote* find(Date expiry, double strike, OptionKind kind) const;
    [[nodiscard]] const OptionQuote* find(const QuoteKey& key) const {
        return find(key.expiry, key.strike, key.kind);
    }

    [[nodiscard]] int tenor_days(Date expiry) const { return expiry - date_; }
    [[nodiscard]] std::optional<double> forward_for(int tenor_days) const;
    /// Exact tenor if present, otherwise linear in tenor with flat ends.
    /// Throws DataError when the snapshot carries no rates at all.
    [[nodiscard]] double rate_for(int tenor_days) const;

private:
    Date date_;
    double spot_;
    std::vector<OptionQuote> quotes_;
    std::map<int, double> forward_by_tenor_;
    std::map<int, double> rate_by_tenor_;
};

/// Expiries used to reach a `horizon_days` tenor: the one expiry whose tenor
/// equals the horizon, else the closest below and the closest at-or-above.
/// Empty when the horizon is not bracketed.
[[nodiscard]] std::vector<Date> bracketing_expiries(const ChainSnapshot& snapshot, int horizon_days);

/// Daily closes with strictly increasing dates and positive prices.
class PriceSeries {
public:
    PriceSeries() = default;
    PriceSeries(std::vector<Date> dates, std::vector<double> closes);

    [[nodiscard]] std::size_t size() const { return dates_.size(); }
    [[nodiscard]] bool empty() const { return dates_.empty(); }
    [[nodiscard]] std::span<const Date> dates() const { return dates_; }
    [[nodiscard]] std::span<const double> closes() const { return closes_; }
    [[nodiscard]] Date date(std::size_t i) const { return dates_[i]; }
    [[nodiscard]] double close(std::size_t i) const { return closes_[i]; }
    [[nodiscard]] std::optional<std::size_t> index_of(Date d) const;

private:
    std::vector<Date> dates_;
    std::vector<double> closes_;
};

/// date -> (tenor in calendar days -> annualized continuously compounded rate)
using RateTable = std::map<Date, std::map<int, double>>;

struct MarketData {
    PriceSeries prices;
    std::vector<ChainSnapshot> chains;
};

// CSV input. Errors carry the file name and 1-based line number.
std::vector<ChainSnapshot> load_chain_series(const std::filesystem::path& options_csv);
std::vector<ChainSnapshot> load_chain_series(const std::filesystem::path& options_csv,
                                             const PriceSeries& underlying,
                                             const RateTable& rates);
PriceSeries load_price_series(const std::filesystem::path& underlying_csv);
RateTable load_rate_table(const std::filesystem::path& rates_csv);

/// Reads `options.csv`, `underlying.csv` and `rates.csv` from `dir`.
MarketData load_market_directory(const std::filesystem::path& dir);

void write_chain_series(const std::filesystem::path& path, std::span<const ChainSnapshot> chains);
void write_price_series(const std::filesystem::path& path, const PriceSeries& prices);
void write_rate_table(const std::filesystem::path& path, std::span<const ChainSnapshot> chains);
void write_market_directory(const std::filesystem::path& dir, const MarketData& market);

/// Shortest decimal form that round-trips the double exactly.
[[nodiscard]] std::string format_number(double value);

struct MissingQuote {
    Date date;
    Date expiry;
    double strike = 0.0;
    OptionKind kind = OptionKind::Call;
};

struct SpacingIssue {
    Date date;
    Date expiry;
    double lower_strike = 0.0;
    double upper_strike = 0.0;
    double base_spacing = 0.0;
};

struct ValidationReport {
    std::vector<MissingQuote> missing;
    std::vector<SpacingIssue> spacing;
    std::vector<Date> unbracketed;

    [[nodiscard]] bool empty() const {
        return missing.empty() && spacing.empty() && unbracketed.empty();
    }
};

/// Report-only scan. Missing quotes are found against each expiry's strike
/// lattice (the most common gap between listed strikes); gaps that are not a
/// whole multiple of that spacing are reported as irregular. With a horizon,
/// dates lacking an expiry pair around it are listed too.
ValidationReport validate_chain(std::span<const ChainSnapshot> series,
                                std::optional<int> horizon_days = std::nullopt);

}  // namespace volidx
