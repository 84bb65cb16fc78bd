#pragma once

#include "volidx/market_data.hpp"

#include <optional>
#include <vector>

namespace volidx {

inline constexpr double kCalendarDaysPerYear = 365.0;

/// How the strike interval of each selected option is measured.
enum class DeltaKConvention {
    /// Half the distance between the neighbouring selected strikes; one-sided at the ends.
    HalfNeighbor,
    /// K[h+1] - K[h]; the last strike reuses the previous interval.
    ForwardDifference,
};

/// One strike of a term selection. At K0 both kinds may contribute, in
/// which case `mid` is the average of their mids.
struct SelectedOption {
    double strike = 0.0;
    std::vector<OptionKind> kinds;
    double mid = 0.0;
    double delta_k = 0.0;
};

struct TermSelection {
    Date expiry;
    int tenor_days = 0;
    double rate = 0.0;
    double forward = 0.0;
    double k0 = 0.0;
    /// Strictly increasing in strike.
    std::vector<SelectedOption> selected;

    [[nodiscard]] double years() const { return tenor_days / kCalendarDaysPerYear; }
};

struct OtmSelectionOptions {
    /// Caps the walk on each side of K0 (in considered strikes); unset walks
    /// until the two-consecutive-missing rule stops it.
    std::optional<int> strikes_per_side;
    /// Consider every `stride`-th listed strike away from K0.
    int stride = 1;
    DeltaKConvention convention = DeltaKConvention::HalfNeighbor;
};

struct VixOptions {
    int horizon_days = 30;
    OtmSelectionOptions selection;
};

struct VixResult {
    Date date;
    int horizon_days = 0;
    /// Index points, i.e. 100 * annualized volatility.
    double value = 0.0;
    std::vector<TermSelection> terms;
    std::vector<double> term_variances;
    /// (value / 100)^2 == sum_i term_weights[i] * term_variances[i].
    std::vector<double> term_weights;
    int option_count = 0;

    /// Annualized variance, (value / 100)^2.
    [[nodiscard]] double variance() const { return value * value / 1e4; }
};

/// Put-call parity forward at the strike minimising |C - P|, unless the
/// snapshot already carries a forward for this tenor.
[[nodiscard]] double compute_forward(const ChainSnapshot& snapshot, Date expiry);

/// Largest listed strike at `expiry` that does not exceed `forward`.
[[nodiscard]] double find_k0(const ChainSnapshot& snapshot, Date expiry, double forward);

[[nodiscard]] TermSelection select_otm_options(const ChainSnapshot& snapshot, Date expiry, double forward,
                                               double k0, const OtmSelectionOptions& options = {});

/// Annualized implied variance of one term, including the forward correction.
[[nodiscard]] double term_variance(const TermSelection& selection);

/// Weight of each term's variance in the horizon variance; sums of
/// weight * variance give (VIX/100)^2.
[[nodiscard]] std::vector<double> horizon_term_weights(std::span<const int> tenor_days, int horizon_days);

[[nodiscard]] VixResult synthetic_vix(const ChainSnapshot& snapshot, const VixOptions& options);
[[nodiscard]] VixResult synthetic_vix(const ChainSnapshot& snapshot, const VixOptions& options,
                                      std::span<const Date> expiries);

}  // namespace volidx
