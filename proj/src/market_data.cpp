#include "volidx/market_data.hpp"

#include "volidx/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

namespace volidx {

namespace {

constexpr double kStrikeTolerance = 1e-8;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw DataError("invalid number '" + std::string(text) + "'");
    }
    return value;
}

int parse_int(std::string_view text) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError("invalid integer '" + std::string(text) + "'");
    }
    return value;
}

/// Line-oriented CSV reader that checks the header and reports positions.
class CsvReader {
public:
    CsvReader(const std::filesystem::path& path, std::vector<std::string_view> header)
        : path_(path.string()), in_(path) {
        if (!in_) {
            throw DataError("cannot open " + path_);
        }
        std::string line;
        if (!std::getline(in_, line)) {
            throw DataError(path_ + ": missing header row");
        }
        ++line_no_;
        const auto fields = split_fields(line);
        if (fields.size() != header.size() || !std::equal(fields.begin(), fields.end(), header.begin())) {
            throw DataError(where() + ": unexpected header '" + std::string(trim(line)) + "'");
        }
        width_ = header.size();
    }

    /// Next non-blank row, or false at end of file.
    bool next(std::vector<std::string_view>& fields) {
        while (std::getline(in_, current_)) {
            ++line_no_;
            if (trim(current_).empty()) continue;
            fields = split_fields(current_);
            if (fields.size() != width_) {
                throw DataError(where() + ": expected " + std::to_string(width_) + " fields, got " +
                                std::to_string(fields.size()));
            }
            return true;
        }
        return false;
    }

    [[nodiscard]] std::string where() const { return path_ + ":" + std::to_string(line_no_); }

    /// Runs `fn`, re-throwing any DataError prefixed with the current position.
    template <class Fn>
    auto guarded(Fn&& fn) {
        try {
            return fn();
        } catch (const DataError& e) {
            throw DataError(where() + ": " + e.what());
        }
    }

private:
    std::string path_;
    std::ifstream in_;
    std::string current_;
    std::size_t line_no_ = 0;
    std::size_t width_ = 0;
};

bool quote_less(const OptionQuote& a, const OptionQuote& b) {
    return std::tie(a.expiry, a.kind, a.strike) < std::tie(b.expiry, b.kind, b.strike);
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

}  // namespace

char kind_code(OptionKind kind) { return kind == OptionKind::Call ? 'C' : 'P'; }

OptionKind parse_kind(std::string_view text) {
    if (text == "C") return OptionKind::Call;
    if (text == "P") return OptionKind::Put;
    throw DataError("invalid option kind '" + std::string(text) + "' (expected C or P)");
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) {
        throw DataError("cannot format number");
    }
    return std::string(buf, ptr);
}

OptionQuote OptionQuote::make(Date quote_date, Date expiry, double strike, OptionKind kind,
                              double bid, double ask) {
    if (!(strike > 0.0)) {
        throw DataError("strike must be positive");
    }
    if (!(bid >= 0.0)) {
        throw DataError("bid must be non-negative");
    }
    if (!(ask >= bid)) {
        throw DataError("bid " + format_number(bid) + " exceeds ask " + format_number(ask));
    }
    if (!(expiry > quote_date)) {
        throw DataError("expiry " + expiry.iso() + " is not after quote date " + quote_date.iso());
    }
    return OptionQuote{quote_date, expiry, strike, kind, bid, ask, (bid + ask) / 2.0};
}

ChainSnapshot::ChainSnapshot(Date date, double spot, std::vector<OptionQuote> quotes,
                             std::map<int, double> forward_by_tenor,
                             std::map<int, double> rate_by_tenor)
    : date_(date),
      spot_(spot),
      quotes_(std::move(quotes)),
      forward_by_tenor_(std::move(forward_by_tenor)),
      rate_by_tenor_(std::move(rate_by_tenor)) {
    std::sort(quotes_.begin(), quotes_.end(), quote_less);
    for (std::size_t i = 0; i < quotes_.size(); ++i) {
        const auto& q = quotes_[i];
        if (q.quote_date != date_) {
            throw DataError("quote dated " + q.quote_date.iso() + " in snapshot for " + date_.iso());
        }
        if (i > 0) {
            const auto& p = quotes_[i - 1];
            if (p.expiry == q.expiry && p.kind == q.kind &&
                std::abs(p.strike - q.strike) <= kStrikeTolerance) {
                throw DataError("duplicate quote " + date_.iso() + " " + q.expiry.iso() + " " +
                                format_number(q.strike) + " " + kind_code(q.kind));
            }
        }
    }
}

std::vector<Date> ChainSnapshot::expiries() const {
    std::vector<Date> out;
    for (const auto& q : quotes_) {
        if (out.empty() || out.back() != q.expiry) out.push_back(q.expiry);
    }
    return out;
}

std::span<const OptionQuote> ChainSnapshot::slice(Date expiry, OptionKind kind) const {
    auto lo = std::lower_bound(quotes_.begin(), quotes_.end(), std::make_pair(expiry, kind),
                               [](const OptionQuote& q, const std::pair<Date, OptionKind>& k) {
                                   return std::tie(q.expiry, q.kind) < std::tie(k.first, k.second);
                               });
    auto hi = lo;
    while (hi != quotes_.end() && hi->expiry == expiry && hi->kind == kind) ++hi;
    return {lo, hi};
}

std::vector<double> ChainSnapshot::strikes(Date expiry) const {
    std::vector<double> out;
    for (auto kind : {OptionKind::Call, OptionKind::Put}) {
        for (const auto& q : slice(expiry, kind)) out.push_back(q.strike);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) { return std::abs(a - b) <= kStrikeTolerance; }),
              out.end());
    return out;
}

const OptionQuote* ChainSnapshot::find(Date expiry, double strike, OptionKind kind) const {
    const auto s = slice(expiry, kind);
    auto it = std::lower_bound(s.begin(), s.end(), strike - kStrikeTolerance,
                               [](const OptionQuote& q, double k) { return q.strike < k; });
    if (it != s.end() && std::abs(it->strike - strike) <= kStrikeTolerance) {
        return &*it;
    }
    return nullptr;
}

std::optional<double> ChainSnapshot::forward_for(int tenor_days) const {
    if (auto it = forward_by_tenor_.find(tenor_days); it != forward_by_tenor_.end()) {
        return it->second;
    }
    return std::nullopt;
}

double ChainSnapshot::rate_for(int tenor_days) const {
    if (rate_by_tenor_.empty()) {
        throw DataError("no rate for tenor " + std::to_string(tenor_days) + "d on " + date_.iso());
    }
    auto hi = rate_by_tenor_.lower_bound(tenor_days);
    if (hi != rate_by_tenor_.end() && hi->first == tenor_days) return hi->second;
    if (hi == rate_by_tenor_.begin()) return hi->second;
    if (hi == rate_by_tenor_.end()) return std::prev(hi)->second;
    auto lo = std::prev(hi);
    const double w = static_cast<double>(tenor_days - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

std::vector<Date> bracketing_expiries(const ChainSnapshot& snapshot, int horizon_days) {
    std::optional<Date> below;
    std::optional<Date> above;
    for (Date e : snapshot.expiries()) {
        const int tenor = snapshot.tenor_days(e);
        if (tenor == horizon_days) return {e};
        if (tenor < horizon_days) {
            below = e;
        } else if (!above) {
            above = e;
        }
    }
    if (below && above) return {*below, *above};
    return {};
}

PriceSeries::PriceSeries(std::vector<Date> dates, std::vector<double> closes)
    : dates_(std::move(dates)), closes_(std::move(closes)) {
    if (dates_.size() != closes_.size()) {
        throw DataError("price series dates and closes differ in length");
    }
    for (std::size_t i = 0; i < dates_.size(); ++i) {
        if (!(closes_[i] > 0.0) || !std::isfinite(closes_[i])) {
            throw DataError("non-positive close on " + dates_[i].iso());
        }
        if (i > 0 && !(dates_[i] > dates_[i - 1])) {
            throw DataError("price dates not strictly increasing at " + dates_[i].iso());
        }
    }
}

std::optional<std::size_t> PriceSeries::index_of(Date d) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
    if (it != dates_.end() && *it == d) {
        return static_cast<std::size_t>(it - dates_.begin());
    }
    return std::nullopt;
}

std::vector<ChainSnapshot> load_chain_series(const std::filesystem::path& options_csv) {
    return load_chain_series(options_csv, PriceSeries{}, RateTable{});
}

std::vector<ChainSnapshot> load_chain_series(const std::filesystem::path& options_csv,
                                             const PriceSeries& underlying,
                                             const RateTable& rates) {
    CsvReader reader(options_csv, {"date", "expiry", "strike", "kind", "bid", "ask"});
    std::vector<ChainSnapshot> out;
    std::vector<OptionQuote> pending;
    std::set<QuoteKey> seen;
    std::optional<Date> current;

    auto flush = [&] {
        if (!current) return;
        double spot = std::numeric_limits<double>::quiet_NaN();
        if (auto idx = underlying.index_of(*current)) spot = underlying.close(*idx);
        std::map<int, double> rate_map;
        if (auto it = rates.find(*current); it != rates.end()) rate_map = it->second;
        out.emplace_back(*current, spot, std::move(pending), std::map<int, double>{}, std::move(rate_map));
        pending.clear();
        seen.clear();
    };

    std::vector<std::string_view> f;
    while (reader.next(f)) {
        reader.guarded([&] {
            const Date date = Date::parse(f[0]);
            const Date expiry = Date::parse(f[1]);
            const double strike = parse_double(f[2]);
            const OptionKind kind = parse_kind(f[3]);
            const double bid = parse_double(f[4]);
            const double ask = parse_double(f[5]);
            if (current && date < *current) {
                throw DataError("non-monotone dates: " + date.iso() + " after " + current->iso());
            }
            if (!current || date != *current) {
                flush();
                current = date;
            }
            auto quote = OptionQuote::make(date, expiry, strike, kind, bid, ask);
            if (!seen.insert(quote.key()).second) {
                throw DataError("duplicate quote (" + date.iso() + ", " + expiry.iso() + ", " +
                                format_number(strike) + ", " + kind_code(kind) + ")");
            }
            pending.push_back(quote);
            return 0;
        });
    }
    flush();
    return out;
}

PriceSeries load_price_series(const std::filesystem::path& underlying_csv) {
    CsvReader reader(underlying_csv, {"date", "close"});
    std::vector<Date> dates;
    std::vector<double> closes;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        reader.guarded([&] {
            const Date d = Date::parse(f[0]);
            const double c = parse_double(f[1]);
            if (!(c > 0.0)) throw DataError("close must be positive");
            if (!dates.empty() && !(d > dates.back())) {
                throw DataError("non-monotone dates: " + d.iso() + " after " + dates.back().iso());
            }
            dates.push_back(d);
            closes.push_back(c);
            return 0;
        });
    }
    return PriceSeries(std::move(dates), std::move(closes));
}

RateTable load_rate_table(const std::filesystem::path& rates_csv) {
    CsvReader reader(rates_csv, {"date", "tenor_days", "rate"});
    RateTable table;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        reader.guarded([&] {
            const Date d = Date::parse(f[0]);
            const int tenor = parse_int(f[1]);
            const double r = parse_double(f[2]);
            if (tenor <= 0) throw DataError("tenor_days must be positive");
            if (!table[d].emplace(tenor, r).second) {
                throw DataError("duplicate rate for (" + d.iso() + ", " + std::to_string(tenor) + ")");
            }
            return 0;
        });
    }
    return table;
}

MarketData load_market_directory(const std::filesystem::path& dir) {
    MarketData market;
    market.prices = load_price_series(dir / "underlying.csv");
    const auto rates = load_rate_table(dir / "rates.csv");
    market.chains = load_chain_series(dir / "options.csv", market.prices, rates);
    return market;
}

void write_chain_series(const std::filesystem::path& path, std::span<const ChainSnapshot> chains) {
    auto out = open_output(path);
    out << "date,expiry,strike,kind,bid,ask\n";
    for (const auto& snap : chains) {
        const std::string date = snap.date().iso();
        for (const auto& q : snap.quotes()) {
            out << date << ',' << q.expiry.iso() << ',' << format_number(q.strike) << ','
                << kind_code(q.kind) << ',' << format_number(q.bid) << ',' << format_number(q.ask)
                << '\n';
        }
    }
}

void write_price_series(const std::filesystem::path& path, const PriceSeries& prices) {
    auto out = open_output(path);
    out << "date,close\n";
    for (std::size_t i = 0; i < prices.size(); ++i) {
        out << prices.date(i).iso() << ',' << format_number(prices.close(i)) << '\n';
    }
}

void write_rate_table(const std::filesystem::path& path, std::span<const ChainSnapshot> chains) {
    auto out = open_output(path);
    out << "date,tenor_days,rate\n";
    for (const auto& snap : chains) {
        for (const auto& [tenor, rate] : snap.rate_by_tenor()) {
            out << snap.date().iso() << ',' << tenor << ',' << format_number(rate) << '\n';
        }
    }
}

void write_market_directory(const std::filesystem::path& dir, const MarketData& market) {
    std::filesystem::create_directories(dir);
    write_chain_series(dir / "options.csv", market.chains);
    write_price_series(dir / "underlying.csv", market.prices);
    write_rate_table(dir / "rates.csv", market.chains);
}

ValidationReport validate_chain(std::span<const ChainSnapshot> series, std::optional<int> horizon_days) {
    ValidationReport report;
    for (const auto& snap : series) {
        for (Date expiry : snap.expiries()) {
            const auto strikes = snap.strikes(expiry);
            auto check_strike = [&](double k) {
                for (auto kind : {OptionKind::Put, OptionKind::Call}) {
                    const auto* q = snap.find(expiry, k, kind);
                    if (q == nullptr || !q->usable()) {
                        report.missing.push_back({snap.date(), expiry, k, kind});
                    }
                }
            };
            if (strikes.size() < 2) {
                for (double k : strikes) check_strike(k);
                continue;
            }
            // Most common gap, smallest on ties.
            std::map<long long, int> gap_counts;
            for (std::size_t i = 1; i < strikes.size(); ++i) {
                ++gap_counts[std::llround((strikes[i] - strikes[i - 1]) * 1e6)];
            }
            const auto base_it = std::max_element(gap_counts.begin(), gap_counts.end(),
                                                  [](const auto& a, const auto& b) { return a.second < b.second; });
            const double base = static_cast<double>(base_it->first) * 1e-6;

            check_strike(strikes.front());
            for (std::size_t i = 1; i < strikes.size(); ++i) {
                const double gap = strikes[i] - strikes[i - 1];
                const double ratio = gap / base;
                const double whole = std::round(ratio);
                if (std::abs(ratio - whole) > 1e-6) {
                    report.spacing.push_back({snap.date(), expiry, strikes[i - 1], strikes[i], base});
                } else {
                    for (int m = 1; m < static_cast<int>(whole); ++m) {
                        const double k = strikes[i - 1] + m * base;
                        for (auto kind : {OptionKind::Put, OptionKind::Call}) {
                            report.missing.push_back({snap.date(), expiry, k, kind});
                        }
                    }
                }
                check_strike(strikes[i]);
            }
        }
        if (horizon_days && bracketing_expiries(snap, *horizon_days).empty()) {
            report.unbracketed.push_back(snap.date());
        }
    }
    return report;
}

}  // namespace volidx
