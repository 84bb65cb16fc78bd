#include "volidx/synthetic_market.hpp"

#include "volidx/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

namespace volidx {

namespace {

constexpr double kDaysPerYear = 365.0;
constexpr double kTradingDaysPerYear = 252.0;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw DataError("config key '" + key + "': invalid number '" + value + "'");
    }
    return out;
}

long long to_integer(const std::string& key, const std::string& value) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw DataError("config key '" + key + "': invalid integer '" + value + "'");
    }
    return out;
}

Date next_trading_day(Date d) {
    do {
        d = d + 1;
    } while (d.weekday() >= 5);
    return d;
}

}  // namespace

void SyntheticMarketConfig::validate() const {
    if (n_days < 2) throw DataError("n_days must be at least 2");
    if (!(spot0 > 0.0)) throw DataError("spot0 must be positive");
    if (!(premium >= 1.0)) throw DataError("premium must be >= 1");
    if (!(quote_gap_rate >= 0.0 && quote_gap_rate < 1.0)) throw DataError("quote_gap_rate must lie in [0, 1)");
    if (!(strike_spacing > 0.0)) throw DataError("strike_spacing must be positive");
    if (strikes_per_side < 1) throw DataError("strikes_per_side must be >= 1");
    if (tenor_days.first < 1 || tenor_days.second <= tenor_days.first) {
        throw DataError("tenor_days must be increasing positive integers");
    }
    if (vol_process.mean_reversion < 0.0 || vol_process.long_run_variance < 0.0 || vol_process.vol_of_vol < 0.0) {
        throw DataError("vol_process parameters must be non-negative");
    }
    if (std::abs(vol_process.correlation) > 1.0) throw DataError("correlation must lie in [-1, 1]");
    if (!(relative_half_spread >= 0.0 && relative_half_spread < 1.0)) {
        throw DataError("relative_half_spread must lie in [0, 1)");
    }
}

void SyntheticMarketConfig::require_brackets(int horizon_days) const {
    if (horizon_days < tenor_days.first || horizon_days > tenor_days.second) {
        throw DataError("tenors " + std::to_string(tenor_days.first) + "/" + std::to_string(tenor_days.second) +
                        " do not bracket horizon " + std::to_string(horizon_days));
    }
}

void apply_config_overrides(SyntheticMarketConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "n_days") cfg.n_days = static_cast<int>(to_integer(key, value));
        else if (key == "spot0") cfg.spot0 = to_double(key, value);
        else if (key == "mean_reversion") cfg.vol_process.mean_reversion = to_double(key, value);
        else if (key == "long_run_variance") cfg.vol_process.long_run_variance = to_double(key, value);
        else if (key == "vol_of_vol") cfg.vol_process.vol_of_vol = to_double(key, value);
        else if (key == "correlation") cfg.vol_process.correlation = to_double(key, value);
        else if (key == "premium") cfg.premium = to_double(key, value);
        else if (key == "strike_spacing") cfg.strike_spacing = to_double(key, value);
        else if (key == "strikes_per_side") cfg.strikes_per_side = static_cast<int>(to_integer(key, value));
        else if (key == "tenor_days") {
            const auto comma = value.find(',');
            if (comma == std::string::npos) throw DataError("tenor_days expects 'near,next'");
            cfg.tenor_days = {static_cast<int>(to_integer(key, value.substr(0, comma))),
                              static_cast<int>(to_integer(key, value.substr(comma + 1)))};
        } else if (key == "quote_gap_rate") cfg.quote_gap_rate = to_double(key, value);
        else if (key == "rng_seed") cfg.rng_seed = static_cast<std::uint64_t>(to_integer(key, value));
        else if (key == "rate") cfg.rate = to_double(key, value);
        else if (key == "relative_half_spread") cfg.relative_half_spread = to_double(key, value);
        else if (key == "start_date") cfg.start_date = Date::parse(value);
        else throw DataError("unknown config key '" + key + "'");
    }
}

double black_scholes_price(OptionKind kind, double forward, double strike, double years, double rate,
                           double vol) {
    const double discount = std::exp(-rate * years);
    const double stdev = vol * std::sqrt(years);
    if (stdev <= 0.0) {
        const double intrinsic = kind == OptionKind::Call ? forward - strike : strike - forward;
        return discount * std::max(intrinsic, 0.0);
    }
    const double d1 = std::log(forward / strike) / stdev + 0.5 * stdev;
    const double d2 = d1 - stdev;
    if (kind == OptionKind::Call) {
        return discount * (forward * normal_cdf(d1) - strike * normal_cdf(d2));
    }
    return discount * (strike * normal_cdf(-d2) - forward * normal_cdf(-d1));
}

SyntheticMarket generate_synthetic_market(const SyntheticMarketConfig& cfg) {
    cfg.validate();

    // Separate streams so that the gap pattern never perturbs the path.
    std::mt19937_64 path_rng(cfg.rng_seed);
    std::mt19937_64 gap_rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const auto& vp = cfg.vol_process;
    const double dt = 1.0 / kTradingDaysPerYear;
    const double rho = vp.correlation;
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const std::array<int, 2> tenors{cfg.tenor_days.first, cfg.tenor_days.second};

    SyntheticMarket out;
    out.model_variance.reserve(static_cast<std::size_t>(cfg.n_days));
    out.forwards.reserve(static_cast<std::size_t>(cfg.n_days));

    std::vector<Date> dates;
    std::vector<double> closes;
    double spot = cfg.spot0;
    double variance = vp.long_run_variance;
    Date date = cfg.start_date;
    while (date.weekday() >= 5) date = date + 1;

    for (int day = 0; day < cfg.n_days; ++day) {
        const double v_pos = std::max(variance, 0.0);
        dates.push_back(date);
        closes.push_back(spot);
        out.model_variance.push_back(v_pos);

        const double implied_vol = cfg.premium * std::sqrt(v_pos);
        const double center = std::floor(spot / cfg.strike_spacing) * cfg.strike_spacing;
        std::vector<double> strikes;
        for (int i = -cfg.strikes_per_side; i <= cfg.strikes_per_side; ++i) {
            const double k = center + i * cfg.strike_spacing;
            if (k > 0.0) strikes.push_back(k);
        }

        std::vector<OptionQuote> quotes;
        quotes.reserve(strikes.size() * 4);
        std::map<int, double> rate_map;
        std::array<double, 2> fwd{};
        for (std::size_t e = 0; e < tenors.size(); ++e) {
            const double years = tenors[e] / kDaysPerYear;
            const double forward = spot * std::exp(cfg.rate * years);
            fwd[e] = forward;
            rate_map[tenors[e]] = cfg.rate;
            const Date expiry = date + tenors[e];
            // At-the-money strike of this expiry: largest listed strike <= forward.
            double atm = strikes.front();
            for (double k : strikes) {
                if (k <= forward) atm = k;
            }
            for (auto kind : {OptionKind::Put, OptionKind::Call}) {
                for (double k : strikes) {
                    const bool drop = unif(gap_rng) < cfg.quote_gap_rate;
                    if (drop && k != atm) continue;
                    // Cancellation can leave deep out-of-the-money prices a hair below zero.
                    const double price =
                        std::max(0.0, black_scholes_price(kind, forward, k, years, cfg.rate, implied_vol));
                    const double bid = price * (1.0 - cfg.relative_half_spread);
                    const double ask = price * (1.0 + cfg.relative_half_spread);
                    quotes.push_back(OptionQuote::make(date, expiry, k, kind, bid, ask));
                }
            }
        }
        out.forwards.push_back(fwd);
        out.market.chains.emplace_back(date, spot, std::move(quotes), std::map<int, double>{},
                                       std::move(rate_map));

        // Advance to the next trading day.
        const double z_var = gauss(path_rng);
        const double z_ind = gauss(path_rng);
        const double z_ret = rho * z_var + rho_c * z_ind;
        const double sd = std::sqrt(v_pos * dt);
        spot *= std::exp((cfg.rate - 0.5 * v_pos) * dt + sd * z_ret);
        variance = variance + vp.mean_reversion * (vp.long_run_variance - v_pos) * dt + vp.vol_of_vol * sd * z_var;
        date = next_trading_day(date);
    }
    out.market.prices = PriceSeries(std::move(dates), std::move(closes));
    return out;
}

}  // namespace volidx
