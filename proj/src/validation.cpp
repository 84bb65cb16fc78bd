#include "volidx/validation.hpp"

#include "volidx/errors.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace volidx {

std::vector<FoldPlan> rolling_splits(std::size_t n_obs, std::size_t initial, std::size_t step, std::size_t purge) {
    if (step == 0) throw DataError("step must be positive");
    if (initial <= purge) {
        throw DataError("initial window " + std::to_string(initial) + " must exceed the purge " +
                        std::to_string(purge));
    }
    if (n_obs <= initial) {
        throw DataError("need more than " + std::to_string(initial) + " observations, have " +
                        std::to_string(n_obs));
    }
    std::vector<FoldPlan> plans;
    for (std::size_t start = initial; start < n_obs; start += step) {
        FoldPlan p;
        p.train = {0, start - purge};
        p.purge = {start - purge, start};
        p.test = {start, std::min(start + step, n_obs)};
        plans.push_back(p);
    }
    return plans;
}

double oos_r2(std::span<const double> actuals, std::span<const double> preds) {
    if (actuals.size() != preds.size()) throw DataError("actuals and predictions differ in length");
    if (actuals.size() < 2) throw DataError("R^2 needs at least two observations");
    double mean = 0.0;
    for (double y : actuals) mean += y;
    mean /= static_cast<double>(actuals.size());
    double sse = 0.0;
    double sst = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
        sse += (actuals[i] - preds[i]) * (actuals[i] - preds[i]);
        sst += (actuals[i] - mean) * (actuals[i] - mean);
    }
    if (sst == 0.0) throw NumericalError("R^2 undefined: actuals are constant");
    return 1.0 - sse / sst;
}

std::string_view algorithm_name(Algorithm algo) {
    switch (algo) {
        case Algorithm::Benchmark: return "vix";
        case Algorithm::Linear: return "linear";
        case Algorithm::Ridge: return "ridge";
        case Algorithm::Forest: return "forest";
        case Algorithm::Fnn: return "fnn";
    }
    return "?";
}

std::string_view algorithm_label(Algorithm algo) {
    switch (algo) {
        case Algorithm::Benchmark: return "VIX*^2";
        case Algorithm::Linear: return "Linear";
        case Algorithm::Ridge: return "Ridge";
        case Algorithm::Forest: return "RF";
        case Algorithm::Fnn: return "FNN";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view text) {
    for (auto a : {Algorithm::Benchmark, Algorithm::Linear, Algorithm::Ridge, Algorithm::Forest, Algorithm::Fnn}) {
        if (text == algorithm_name(a)) return a;
    }
    throw DataError("unknown algorithm '" + std::string(text) + "' (expected vix, linear, ridge, forest or fnn)");
}

std::vector<double> default_lambda_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e2, 1e3, 1e4}; }

std::vector<int> default_depth_grid() { return {3, 5, 10, kUnlimitedDepth}; }

Dataset assemble_dataset(const MarketData& market, const FeatureConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.config = cfg;
    auto features = build_dataset(market.chains, market.prices, cfg);
    ds.skipped = std::move(features.skipped);

    std::map<Date, const ChainSnapshot*> by_date;
    for (const auto& s : market.chains) by_date[s.date()] = &s;

    VixOptions vix_opts;
    vix_opts.horizon_days = cfg.horizon_days;
    vix_opts.selection.strikes_per_side = cfg.strikes_per_side;
    vix_opts.selection.stride = cfg.strike_step;

    for (auto& row : features.rows) {
        const auto pi = market.prices.index_of(row.date);
        if (!pi) {
            ds.skipped.push_back({row.date, "no underlying price"});
            continue;
        }
        if (*pi + static_cast<std::size_t>(cfg.horizon_days) >= market.prices.size()) {
            ds.skipped.push_back({row.date, "realized-variance window runs past the data"});
            continue;
        }
        DatasetRow dr;
        dr.date = row.date;
        dr.price_index = *pi;
        try {
            dr.vix = synthetic_vix(*by_date.at(row.date), vix_opts);
        } catch (const Error& e) {
            ds.skipped.push_back({row.date, std::string("index: ") + e.what()});
            continue;
        }
        dr.vix_star_sq = dr.vix.variance();
        dr.realized_var = kTradingDaysPerYear * realized_variance(market.prices, *pi, cfg.horizon_days);
        dr.features = std::move(row);
        ds.rows.push_back(std::move(dr));
    }
    std::sort(ds.skipped.begin(), ds.skipped.end(),
              [](const SkippedDate& a, const SkippedDate& b) { return a.date < b.date; });
    return ds;
}

}  // namespace volidx
