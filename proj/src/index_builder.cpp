#include "volidx/index_builder.hpp"

#include "volidx/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace volidx {

namespace {

std::vector<WeightLeg> to_legs(const std::map<QuoteKey, double>& acc) {
    std::vector<WeightLeg> out;
    out.reserve(acc.size());
    for (const auto& [key, w] : acc) out.push_back({key, w});
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

}  // namespace

std::vector<WeightLeg> PortfolioWeights::combined_legs() const {
    std::map<QuoteKey, double> acc;
    for (const auto& l : legs) acc[l.key] += l.weight;
    for (const auto& l : vix_legs) acc[l.key] += l.weight;
    return to_legs(acc);
}

PortfolioWeights daily_weights(const RegressionModel& model, const FeatureRow& row, RegressionMode mode,
                               const VixResult* vix) {
    if (!row.tradable()) {
        throw NotReplicable("features on " + row.date.iso() +
                            " include returns of the underlying; the forecast is not an option portfolio");
    }
    if (row.affine.features.size() != row.values.size()) {
        throw DataError("feature row " + row.date.iso() + " has no affine map for every feature");
    }
    double scale = 1.0;
    for (double v : row.values) scale = std::max(scale, std::abs(v));
    if (row.affine_error() > 1e-9 * scale) {
        throw DataError("affine map of " + row.date.iso() + " no longer reproduces its features");
    }
    const LocalAffine la = local_affine(model, row.values);

    PortfolioWeights pw;
    pw.date = row.date;
    pw.mode = mode;
    pw.cash_constant = la.constant;
    std::map<QuoteKey, double> acc;
    for (std::size_t j = 0; j < row.values.size(); ++j) {
        const double c = la.coefficients[j];
        const auto& feat = row.affine.features[j];
        pw.cash_constant += c * feat.constant;
        for (const auto& term : feat.terms) acc[term.key] += c * term.coefficient;
    }
    pw.legs = to_legs(acc);

    if (mode == RegressionMode::RegII) {
        if (vix == nullptr) throw DataError("RegII weights need the day's index terms");
        if (vix->date != row.date) {
            throw DataError("index terms dated " + vix->date.iso() + " do not match row " + row.date.iso());
        }
        std::map<QuoteKey, double> vacc;
        for (std::size_t i = 0; i < vix->terms.size(); ++i) {
            const auto& term = vix->terms[i];
            const double omega = vix->term_weights[i];
            const double years = term.years();
            const double growth = std::exp(term.rate * years);
            for (const auto& opt : term.selected) {
                const double w = omega * 2.0 / years * opt.delta_k / (opt.strike * opt.strike) * growth /
                                 static_cast<double>(opt.kinds.size());
                for (auto kind : opt.kinds) vacc[{term.expiry, opt.strike, kind}] += w;
            }
            const double c = term.forward / term.k0 - 1.0;
            pw.vix_adjustment -= omega * c * c / years;
        }
        pw.vix_legs = to_legs(vacc);
    }
    return pw;
}

ReplicationResult replication_check(const PortfolioWeights& weights, const ChainSnapshot& snapshot,
                                    double forecast) {
    if (snapshot.date() != weights.date) {
        throw DataError("snapshot " + snapshot.date().iso() + " does not match weights dated " + weights.date.iso());
    }
    auto price = [&](const std::vector<WeightLeg>& legs) {
        double v = 0.0;
        for (const auto& l : legs) {
            const auto* q = snapshot.find(l.key);
            if (q == nullptr) {
                throw DataError("no quote for leg " + l.key.expiry.iso() + " " + format_number(l.key.strike) +
                                kind_code(l.key.kind) + " on " + snapshot.date().iso());
            }
            v += l.weight * q->mid;
        }
        return v;
    };
    ReplicationResult r;
    r.forecast = forecast;
    r.replicated = price(weights.legs) + weights.cash_constant + price(weights.vix_legs) + weights.vix_adjustment;
    r.residual = std::abs(r.replicated - forecast);
    r.flagged = !(r.residual <= 1e-8 * std::max(1.0, std::abs(forecast)));
    return r;
}

std::vector<LiquidityRow> liquidity_report(std::span<const PortfolioWeights> series, double materiality) {
    std::vector<LiquidityRow> out;
    std::map<QuoteKey, double> previous;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto legs = series[t].combined_legs();
        std::map<QuoteKey, double> current;
        LiquidityRow row;
        row.date = series[t].date;
        row.n_legs = static_cast<int>(legs.size());
        for (const auto& l : legs) {
            current[l.key] = l.weight;
            if (std::abs(l.weight) > materiality) ++row.n_material;
        }
        if (t == 0) {
            row.turnover = std::numeric_limits<double>::quiet_NaN();
        } else {
            double turnover = 0.0;
            for (const auto& [key, w] : current) {
                auto it = previous.find(key);
                turnover += std::abs(w - (it == previous.end() ? 0.0 : it->second));
            }
            for (const auto& [key, w] : previous) {
                if (!current.contains(key)) turnover += std::abs(w);
            }
            row.turnover = turnover;
        }
        row.cash = series[t].cash_constant;
        row.adjustment = series[t].vix_adjustment;
        out.push_back(row);
        previous = std::move(current);
    }
    return out;
}

void write_weights_csv(const std::filesystem::path& path, std::span<const PortfolioWeights> series) {
    auto out = open_output(path);
    out << "date,expiry,strike,kind,weight\n";
    for (const auto& pw : series) {
        for (const auto& l : pw.combined_legs()) {
            out << pw.date.iso() << ',' << l.key.expiry.iso() << ',' << format_number(l.key.strike) << ','
                << kind_code(l.key.kind) << ',' << format_number(l.weight) << '\n';
        }
    }
}

void write_liquidity_csv(const std::filesystem::path& path, std::span<const LiquidityRow> rows) {
    auto out = open_output(path);
    out << "date,n_legs,n_material,turnover,cash,adjustment\n";
    for (const auto& r : rows) {
        out << r.date.iso() << ',' << r.n_legs << ',' << r.n_material << ','
            << (std::isnan(r.turnover) ? std::string() : format_number(r.turnover)) << ',' << format_number(r.cash)
            << ',' << format_number(r.adjustment) << '\n';
    }
}

}  // namespace volidx
