#include "volidx/vix.hpp"

#include "volidx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace volidx {

double compute_forward(const ChainSnapshot& snapshot, Date expiry) {
    const int tenor = snapshot.tenor_days(expiry);
    if (auto given = snapshot.forward_for(tenor)) {
        return *given;
    }
    double best_strike = 0.0;
    double best_diff = 0.0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& call : snapshot.slice(expiry, OptionKind::Call)) {
        const auto* put = snapshot.find(expiry, call.strike, OptionKind::Put);
        if (put == nullptr) continue;
        const double diff = call.mid - put->mid;
        if (std::abs(diff) < best_gap) {
            best_gap = std::abs(diff);
            best_strike = call.strike;
            best_diff = diff;
        }
    }
    if (!std::isfinite(best_gap)) {
        throw DataError("no strike quotes both kinds for expiry " + expiry.iso() + " on " + snapshot.date().iso());
    }
    const double rate = snapshot.rate_for(tenor);
    return best_strike + std::exp(rate * tenor / kCalendarDaysPerYear) * best_diff;
}

double find_k0(const ChainSnapshot& snapshot, Date expiry, double forward) {
    const auto strikes = snapshot.strikes(expiry);
    auto it = std::upper_bound(strikes.begin(), strikes.end(), forward);
    if (it == strikes.begin()) {
        throw DataError("no listed strike at or below forward " + format_number(forward) + " for expiry " +
                        expiry.iso());
    }
    return *std::prev(it);
}

namespace {

void assign_delta_k(std::vector<SelectedOption>& selected, DeltaKConvention convention, double fallback) {
    const std::size_t n = selected.size();
    if (n == 1) {
        selected[0].delta_k = fallback;
        return;
    }
    for (std::size_t h = 0; h < n; ++h) {
        double dk = 0.0;
        if (convention == DeltaKConvention::HalfNeighbor) {
            if (h == 0) dk = selected[1].strike - selected[0].strike;
            else if (h == n - 1) dk = selected[n - 1].strike - selected[n - 2].strike;
            else dk = 0.5 * (selected[h + 1].strike - selected[h - 1].strike);
        } else {
            dk = h + 1 < n ? selected[h + 1].strike - selected[h].strike : selected[h].strike - selected[h - 1].strike;
        }
        selected[h].delta_k = dk;
    }
}

}  // namespace

TermSelection select_otm_options(const ChainSnapshot& snapshot, Date expiry, double forward, double k0,
                                 const OtmSelectionOptions& options) {
    if (options.stride < 1) throw DataError("stride must be >= 1");
    const auto strikes = snapshot.strikes(expiry);
    auto k0_it = std::find_if(strikes.begin(), strikes.end(), [&](double k) { return std::abs(k - k0) <= 1e-8; });
    if (k0_it == strikes.end()) {
        throw DataError("K0 " + format_number(k0) + " is not listed for expiry " + expiry.iso());
    }
    const auto k0_index = static_cast<std::ptrdiff_t>(k0_it - strikes.begin());

    TermSelection sel;
    sel.expiry = expiry;
    sel.tenor_days = snapshot.tenor_days(expiry);
    sel.rate = snapshot.rate_for(sel.tenor_days);
    sel.forward = forward;
    sel.k0 = *k0_it;

    auto usable = [&](double k, OptionKind kind) -> const OptionQuote* {
        const auto* q = snapshot.find(expiry, k, kind);
        return (q != nullptr && q->usable()) ? q : nullptr;
    };

    // Walks away from K0 in direction `dir`, returning options nearest-first.
    auto walk = [&](std::ptrdiff_t dir, OptionKind kind) {
        std::vector<SelectedOption> side;
        bool previous_missing = false;
        int considered = 0;
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(strikes.size());
        for (std::ptrdiff_t step = 1;; ++step) {
            const std::ptrdiff_t idx = k0_index + dir * step;
            if (idx < 0 || idx >= n) break;
            if (step % options.stride != 0) continue;
            if (options.strikes_per_side && considered >= *options.strikes_per_side) break;
            ++considered;
            const double k = strikes[static_cast<std::size_t>(idx)];
            if (const auto* q = usable(k, kind)) {
                side.push_back({k, {kind}, q->mid, 0.0});
                previous_missing = false;
            } else {
                if (previous_missing) break;
                previous_missing = true;
            }
        }
        return side;
    };

    auto puts = walk(-1, OptionKind::Put);
    auto calls = walk(+1, OptionKind::Call);

    std::vector<SelectedOption> selected(puts.rbegin(), puts.rend());
    {
        SelectedOption atm{sel.k0, {}, 0.0, 0.0};
        double sum = 0.0;
        for (auto kind : {OptionKind::Put, OptionKind::Call}) {
            if (const auto* q = usable(sel.k0, kind)) {
                atm.kinds.push_back(kind);
                sum += q->mid;
            }
        }
        if (!atm.kinds.empty()) {
            atm.mid = sum / static_cast<double>(atm.kinds.size());
            selected.push_back(atm);
        }
    }
    selected.insert(selected.end(), calls.begin(), calls.end());

    if (!selected.empty()) {
        // Listed spacing next to K0 for a lone strike.
        double fallback = 0.0;
        if (k0_index + 1 < static_cast<std::ptrdiff_t>(strikes.size())) {
            fallback = strikes[static_cast<std::size_t>(k0_index + 1)] - sel.k0;
        } else if (k0_index > 0) {
            fallback = sel.k0 - strikes[static_cast<std::size_t>(k0_index - 1)];
        }
        assign_delta_k(selected, options.convention, fallback * options.stride);
    }
    sel.selected = std::move(selected);
    return sel;
}

double term_variance(const TermSelection& selection) {
    const double years = selection.years();
    if (!(years > 0.0)) {
        throw DataError("term has non-positive time to expiry");
    }
    if (selection.selected.empty()) {
        throw DataError("empty option selection for expiry " + selection.expiry.iso());
    }
    const double growth = std::exp(selection.rate * years);
    double sum = 0.0;
    for (const auto& opt : selection.selected) {
        sum += opt.delta_k / (opt.strike * opt.strike) * growth * opt.mid;
    }
    const double correction = selection.forward / selection.k0 - 1.0;
    return 2.0 / years * sum - correction * correction / years;
}

std::vector<double> horizon_term_weights(std::span<const int> tenor_days, int horizon_days) {
    if (tenor_days.size() == 1) {
        if (tenor_days[0] != horizon_days) {
            throw DataError("single term must match the horizon exactly");
        }
        return {1.0};
    }
    if (tenor_days.size() != 2) throw DataError("expected one or two terms");
    const double t1 = tenor_days[0];
    const double t2 = tenor_days[1];
    const double t = horizon_days;
    if (!(t1 < t2 && t1 <= t && t <= t2)) {
        throw DataError("tenors " + std::to_string(tenor_days[0]) + "/" + std::to_string(tenor_days[1]) +
                        " do not bracket horizon " + std::to_string(horizon_days));
    }
    // T_i * sigma_i^2 interpolated linearly in time, then divided by T.
    return {t1 / t * (t2 - t) / (t2 - t1), t2 / t * (t - t1) / (t2 - t1)};
}

VixResult synthetic_vix(const ChainSnapshot& snapshot, const VixOptions& options) {
    const auto expiries = bracketing_expiries(snapshot, options.horizon_days);
    if (expiries.empty()) {
        throw DataError("no expiries bracket horizon " + std::to_string(options.horizon_days) + "d on " +
                        snapshot.date().iso());
    }
    return synthetic_vix(snapshot, options, expiries);
}

VixResult synthetic_vix(const ChainSnapshot& snapshot, const VixOptions& options, std::span<const Date> expiries) {
    VixResult result;
    result.date = snapshot.date();
    result.horizon_days = options.horizon_days;
    std::vector<int> tenors;
    for (Date expiry : expiries) {
        const double forward = compute_forward(snapshot, expiry);
        const double k0 = find_k0(snapshot, expiry, forward);
        auto sel = select_otm_options(snapshot, expiry, forward, k0, options.selection);
        result.term_variances.push_back(term_variance(sel));
        result.option_count += static_cast<int>(sel.selected.size());
        tenors.push_back(sel.tenor_days);
        result.terms.push_back(std::move(sel));
    }
    result.term_weights = horizon_term_weights(tenors, options.horizon_days);
    double variance = 0.0;
    for (std::size_t i = 0; i < tenors.size(); ++i) {
        variance += result.term_weights[i] * result.term_variances[i];
    }
    if (variance < 0.0) {
        throw NumericalError("negative interpolated variance " + format_number(variance) + " on " +
                             snapshot.date().iso());
    }
    result.value = 100.0 * std::sqrt(variance);
    return result;
}

}  // namespace volidx
