#include "volidx/targets.hpp"

#include "volidx/errors.hpp"

#include <fstream>

namespace volidx {

std::string_view mode_name(RegressionMode mode) { return mode == RegressionMode::RegI ? "reg1" : "reg2"; }

RegressionMode parse_mode(std::string_view text) {
    if (text == "reg1") return RegressionMode::RegI;
    if (text == "reg2") return RegressionMode::RegII;
    throw DataError("unknown regression mode '" + std::string(text) + "' (expected reg1 or reg2)");
}

double realized_variance(const PriceSeries& prices, std::size_t t, int horizon) {
    if (horizon < 1) throw DataError("horizon must be positive");
    if (t + static_cast<std::size_t>(horizon) >= prices.size()) {
        throw DataError("insufficient forward prices after " +
                        (t < prices.size() ? prices.date(t).iso() : std::string("end of series")));
    }
    std::vector<double> r(static_cast<std::size_t>(horizon));
    double mean = 0.0;
    for (int i = 1; i <= horizon; ++i) {
        const std::size_t j = t + static_cast<std::size_t>(i);
        r[static_cast<std::size_t>(i - 1)] = (prices.close(j) - prices.close(j - 1)) / prices.close(j - 1);
        mean += r[static_cast<std::size_t>(i - 1)];
    }
    mean /= horizon;
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    return ss / horizon;
}

double regression_target(RegressionMode mode, double realized_var, double vix_star_sq) {
    return mode == RegressionMode::RegI ? realized_var : realized_var - vix_star_sq;
}

double reconstruct_variance(RegressionMode mode, double model_output, double vix_star_sq) {
    return mode == RegressionMode::RegI ? model_output : model_output + vix_star_sq;
}

std::vector<TargetRow> build_targets(const PriceSeries& prices, std::span<const IndexObservation> index_series,
                                     RegressionMode mode, int horizon) {
    std::vector<TargetRow> rows;
    rows.reserve(index_series.size());
    for (std::size_t i = 0; i < index_series.size(); ++i) {
        const auto& obs = index_series[i];
        if (i > 0 && !(obs.date > index_series[i - 1].date)) {
            throw DataError("index observations not increasing at " + obs.date.iso());
        }
        const auto t = prices.index_of(obs.date);
        if (!t) throw DataError("index observation " + obs.date.iso() + " has no matching price date");
        if (*t + static_cast<std::size_t>(horizon) >= prices.size()) continue;
        TargetRow row;
        row.date = obs.date;
        row.horizon_days = horizon;
        row.realized_var = kTradingDaysPerYear * realized_variance(prices, *t, horizon);
        row.vix_star_sq = obs.vix_star_sq;
        row.mode = mode;
        row.target = regression_target(mode, row.realized_var, row.vix_star_sq);
        rows.push_back(row);
    }
    return rows;
}

void write_targets_csv(const std::filesystem::path& path, std::span<const TargetRow> rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "date,realized_var,vix_star_sq,target,mode\n";
    for (const auto& r : rows) {
        out << r.date.iso() << ',' << format_number(r.realized_var) << ',' << format_number(r.vix_star_sq) << ','
            << format_number(r.target) << ',' << mode_name(r.mode) << '\n';
    }
}

}  // namespace volidx
