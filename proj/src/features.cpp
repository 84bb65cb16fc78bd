#include "volidx/features.hpp"

#include "volidx/errors.hpp"
#include "volidx/vix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace volidx {

namespace {

constexpr double kAffineTolerance = 1e-10;
constexpr double kAnnualization = 252.0;

double simple_return(const PriceSeries& prices, std::size_t j) {
    return (prices.close(j) - prices.close(j - 1)) / prices.close(j - 1);
}

}  // namespace

void FeatureConfig::validate() const {
    if (strikes_per_side < 0) throw DataError("strikes_per_side must be non-negative");
    if (strike_step < 1) throw DataError("strike_step must be >= 1");
    if (!(base_spacing > 0.0)) throw DataError("base_spacing must be positive");
    if (horizon_days < 1) throw DataError("horizon_days must be positive");
    for (int l : return_lookbacks) {
        if (l < 1) throw DataError("return lookbacks must be positive");
    }
    for (int l : variance_lookbacks) {
        if (l < 2) throw DataError("variance lookbacks must be >= 2");
    }
}

int FeatureConfig::feature_count() const {
    int n = option_feature_count();
    if (include_returns_features) {
        n += static_cast<int>(return_lookbacks.size() + variance_lookbacks.size());
    }
    return n;
}

int FeatureConfig::max_lookback() const {
    int m = 0;
    for (int l : return_lookbacks) m = std::max(m, l);
    // var_{t,l} reads r_{t-1} .. r_{t-l}, i.e. prices back to t-l-1.
    for (int l : variance_lookbacks) m = std::max(m, l + 1);
    return m;
}

std::vector<double> AffineMap::evaluate(const std::function<double(const QuoteKey&)>& mid_of) const {
    std::vector<double> out;
    out.reserve(features.size());
    for (const auto& f : features) {
        double v = f.constant;
        for (const auto& t : f.terms) v += t.coefficient * mid_of(t.key);
        out.push_back(v);
    }
    return out;
}

std::vector<double> AffineMap::evaluate(const ChainSnapshot& snapshot) const {
    return evaluate([&](const QuoteKey& key) {
        const auto* q = snapshot.find(key);
        if (q == nullptr) {
            throw DataError("affine map references missing quote " + key.expiry.iso() + " " +
                            format_number(key.strike) + " " + kind_code(key.kind));
        }
        return q->mid;
    });
}

std::vector<double> AffineMap::evaluate(const QuoteMids& mids) const {
    return evaluate([&](const QuoteKey& key) {
        auto it = mids.find(key);
        if (it == mids.end()) {
            throw DataError("affine map references unknown quote " + key.expiry.iso() + " " +
                            format_number(key.strike) + " " + kind_code(key.kind));
        }
        return it->second;
    });
}

bool AffineMap::tradable() const {
    return std::all_of(features.begin(), features.end(), [](const AffineFeature& f) { return f.tradable; });
}

double FeatureRow::affine_error() const {
    const auto recomputed = affine.evaluate(source_mids);
    if (recomputed.size() != values.size()) {
        throw DataError("affine map dimension does not match feature row");
    }
    double err = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        err = std::max(err, std::abs(recomputed[i] - values[i]));
    }
    return err;
}

double interpolate_tenor(double q1, double q2, double t1, double t2, double t) {
    if (!(t1 < t2)) throw DataError("tenor interpolation needs t1 < t2");
    if (t < t1 || t > t2) throw DataError("tenor outside the interpolation interval");
    return q1 * (t2 - t) / (t2 - t1) + q2 * (t - t1) / (t2 - t1);
}

std::vector<double> build_strike_grid(double k0, int n, double base_spacing, int step) {
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(2 * n + 1));
    for (int i = -n; i <= n; ++i) {
        grid.push_back(k0 + static_cast<double>(i) * step * base_spacing);
    }
    return grid;
}

FilledMid fill_missing(double strike, std::span<const StrikeQuote> quoted) {
    if (quoted.empty()) {
        throw DataError("no quotes available to fill strike " + format_number(strike));
    }
    auto hi = std::lower_bound(quoted.begin(), quoted.end(), strike - 1e-8,
                               [](const StrikeQuote& q, double k) { return q.strike < k; });
    if (hi != quoted.end() && std::abs(hi->strike - strike) <= 1e-8) {
        return {hi->mid, {{hi->strike, 1.0}}};
    }
    if (hi == quoted.end()) {
        const auto& lo = quoted.back();
        return {lo.mid, {{lo.strike, 1.0}}};
    }
    if (hi == quoted.begin()) {
        return {hi->mid, {{hi->strike, 1.0}}};
    }
    const auto& lo = *std::prev(hi);
    const double w_hi = (strike - lo.strike) / (hi->strike - lo.strike);
    const double w_lo = 1.0 - w_hi;
    return {w_lo * lo.mid + w_hi * hi->mid, {{lo.strike, w_lo}, {hi->strike, w_hi}}};
}

double prescale(double mid, double strike) {
    if (!(strike > 0.0)) throw DataError("prescale needs a positive strike");
    return mid / (strike * strike);
}

std::vector<double> Normalizer::transform(std::span<const double> values) const {
    if (values.size() != mean.size()) {
        throw DataError("normalizer dimension mismatch");
    }
    std::vector<double> out(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        out[j] = (values[j] - mean[j]) / stddev[j];
    }
    return out;
}

Normalizer fit_normalizer(std::span<const std::vector<double>> values) {
    if (values.size() < 2) {
        throw DataError("normalizer needs at least two training rows");
    }
    const std::size_t dim = values.front().size();
    Normalizer norm;
    norm.mean.assign(dim, 0.0);
    norm.stddev.assign(dim, 0.0);
    for (const auto& row : values) {
        if (row.size() != dim) throw DataError("ragged feature rows");
        for (std::size_t j = 0; j < dim; ++j) norm.mean[j] += row[j];
    }
    const double n = static_cast<double>(values.size());
    for (auto& m : norm.mean) m /= n;
    for (const auto& row : values) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = row[j] - norm.mean[j];
            norm.stddev[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        norm.stddev[j] = std::sqrt(norm.stddev[j] / (n - 1.0));
        if (norm.stddev[j] == 0.0 || norm.stddev[j] <= 1e-12 * std::abs(norm.mean[j])) {
            throw DataError("feature " + std::to_string(j) + " is constant over the training rows");
        }
    }
    return norm;
}

Normalizer fit_normalizer(std::span<const FeatureRow> rows) {
    std::vector<std::vector<double>> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.push_back(r.values);
    return fit_normalizer(values);
}

FeatureRow apply_normalizer(const Normalizer& normalizer, const FeatureRow& row) {
    FeatureRow out = row;
    out.values = normalizer.transform(row.values);
    if (out.affine.features.size() != out.values.size()) {
        throw DataError("affine map dimension does not match feature row");
    }
    for (std::size_t j = 0; j < out.values.size(); ++j) {
        auto& f = out.affine.features[j];
        const double inv = 1.0 / normalizer.stddev[j];
        for (auto& t : f.terms) t.coefficient *= inv;
        f.constant = (f.constant - normalizer.mean[j]) * inv;
    }
    return out;
}

std::vector<double> returns_features(const PriceSeries& prices, std::size_t index, const FeatureConfig& cfg) {
    if (index >= prices.size() || index < static_cast<std::size_t>(cfg.max_lookback())) {
        throw DataError("insufficient price history for returns features");
    }
    std::vector<double> out;
    for (int l : cfg.return_lookbacks) {
        const double past = prices.close(index - static_cast<std::size_t>(l));
        out.push_back((prices.close(index) - past) / past);
    }
    for (int l : cfg.variance_lookbacks) {
        std::vector<double> r;
        for (int i = 1; i <= l; ++i) r.push_back(simple_return(prices, index - static_cast<std::size_t>(i)));
        double mean = 0.0;
        for (double x : r) mean += x;
        mean /= l;
        double ss = 0.0;
        for (double x : r) ss += (x - mean) * (x - mean);
        out.push_back(kAnnualization * ss / l);
    }
    return out;
}

FeatureRow build_feature_row(const ChainSnapshot& snapshot, const PriceSeries& prices, const FeatureConfig& cfg) {
    cfg.validate();
    const auto expiries = bracketing_expiries(snapshot, cfg.horizon_days);
    if (expiries.empty()) {
        throw DataError("no expiries bracket horizon " + std::to_string(cfg.horizon_days) + "d");
    }
    const double forward = compute_forward(snapshot, expiries.front());
    const double k0 = find_k0(snapshot, expiries.front(), forward);

    std::vector<double> tenor_weights{1.0};
    if (expiries.size() == 2) {
        const double t1 = snapshot.tenor_days(expiries[0]);
        const double t2 = snapshot.tenor_days(expiries[1]);
        const double t = cfg.horizon_days;
        tenor_weights = {interpolate_tenor(1.0, 0.0, t1, t2, t), interpolate_tenor(0.0, 1.0, t1, t2, t)};
    }

    FeatureRow row;
    row.date = snapshot.date();
    row.strike_grid = build_strike_grid(k0, cfg.strikes_per_side, cfg.base_spacing, cfg.strike_step);

    // Present quotes per (expiry, kind), ascending in strike.
    std::map<std::pair<Date, OptionKind>, std::vector<StrikeQuote>> quoted;
    for (Date e : expiries) {
        for (auto kind : {OptionKind::Put, OptionKind::Call}) {
            auto& v = quoted[{e, kind}];
            for (const auto& q : snapshot.slice(e, kind)) v.push_back({q.strike, q.mid});
        }
    }

    for (double k : row.strike_grid) {
        if (!(k > 0.0)) throw DataError("strike grid reaches a non-positive strike");
        // Puts at and below K0, calls above: every feature is an out-of-the-money option.
        const OptionKind kind = k <= k0 + 1e-8 ? OptionKind::Put : OptionKind::Call;
        AffineFeature feature;
        double blended = 0.0;
        for (std::size_t e = 0; e < expiries.size(); ++e) {
            const auto& quotes = quoted[{expiries[e], kind}];
            const auto filled = fill_missing(k, quotes);
            blended += tenor_weights[e] * filled.value;
            for (const auto& [donor, w] : filled.donors) {
                const QuoteKey key{expiries[e], donor, kind};
                feature.terms.push_back({key, tenor_weights[e] * w / (k * k)});
                row.source_mids[key] = snapshot.find(key)->mid;
            }
        }
        row.values.push_back(prescale(blended, k));
        row.affine.features.push_back(std::move(feature));
    }

    if (cfg.include_returns_features) {
        const auto idx = prices.index_of(snapshot.date());
        if (!idx) throw DataError("no underlying close on " + snapshot.date().iso());
        for (double v : returns_features(prices, *idx, cfg)) {
            row.values.push_back(v);
            row.affine.features.push_back({{}, v, false});
        }
    }
    return row;
}

FeatureDataset build_dataset(std::span<const ChainSnapshot> chains, const PriceSeries& prices,
                             const FeatureConfig& cfg) {
    cfg.validate();
    FeatureDataset out;
    out.rows.reserve(chains.size());
    for (const auto& snap : chains) {
        try {
            auto row = build_feature_row(snap, prices, cfg);
            const auto check = row.affine.evaluate(snap);
            double err = 0.0;
            for (std::size_t j = 0; j < check.size(); ++j) err = std::max(err, std::abs(check[j] - row.values[j]));
            if (err > kAffineTolerance) {
                out.skipped.push_back({snap.date(), "affine self-check failed by " + format_number(err)});
                continue;
            }
            out.rows.push_back(std::move(row));
        } catch (const Error& e) {
            out.skipped.push_back({snap.date(), e.what()});
        }
    }
    return out;
}

void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureRow> rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "date";
    const std::size_t dim = rows.empty() ? 0 : rows.front().values.size();
    for (std::size_t j = 0; j < dim; ++j) out << ",f" << j;
    out << '\n';
    for (const auto& r : rows) {
        out << r.date.iso();
        for (double v : r.values) out << ',' << format_number(v);
        out << '\n';
    }
}

void write_affine_csv(const std::filesystem::path& path, const FeatureRow& row) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "feature_index,expiry,strike,kind,coefficient,constant\n";
    for (std::size_t j = 0; j < row.affine.features.size(); ++j) {
        const auto& f = row.affine.features[j];
        if (f.terms.empty()) {
            out << j << ",,,," << 0 << ',' << format_number(f.constant) << '\n';
        }
        for (const auto& t : f.terms) {
            out << j << ',' << t.key.expiry.iso() << ',' << format_number(t.key.strike) << ','
                << kind_code(t.key.kind) << ',' << format_number(t.coefficient) << ','
                << format_number(f.constant) << '\n';
        }
    }
}

}  // namespace volidx
