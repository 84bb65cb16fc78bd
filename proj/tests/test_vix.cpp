#include "volidx/errors.hpp"
#include "volidx/synthetic_market.hpp"
#include "volidx/vix.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

using namespace volidx;

namespace {

const Date kDay = Date::from_ymd(2016, 6, 1);

struct Leg {
    double strike;
    OptionKind kind;
    double mid;
};

ChainSnapshot snapshot_of(const std::vector<std::pair<int, std::vector<Leg>>>& expiries, double rate = 0.0,
                          std::map<int, double> forwards = {}) {
    std::vector<OptionQuote> qs;
    std::map<int, double> rates;
    for (const auto& [tenor, legs] : expiries) {
        rates[tenor] = rate;
        for (const auto& l : legs) {
            qs.push_back(OptionQuote::make(kDay, kDay + tenor, l.strike, l.kind, l.mid, l.mid));
        }
    }
    return ChainSnapshot(kDay, 100.0, qs, std::move(forwards), rates);
}

std::vector<double> strikes_of(const TermSelection& sel) {
    std::vector<double> out;
    for (const auto& o : sel.selected) out.push_back(o.strike);
    return out;
}

SyntheticMarketConfig flat_market(int days) {
    SyntheticMarketConfig cfg;
    cfg.n_days = days;
    cfg.premium = 1.0;
    cfg.vol_process.vol_of_vol = 0.0;
    return cfg;
}

}  // namespace

TEST(ComputeForward, ParityAtEqualPricesAndZeroRate) {
    auto snap = snapshot_of({{30, {{1990, OptionKind::Call, 30}, {1990, OptionKind::Put, 12},
                                   {2000, OptionKind::Call, 20}, {2000, OptionKind::Put, 20}}}});
    EXPECT_DOUBLE_EQ(compute_forward(snap, kDay + 30), 2000.0);
    auto snap2 = snapshot_of({{30, {{1960, OptionKind::Call, 25}, {1960, OptionKind::Put, 20},
                                    {1970, OptionKind::Call, 40}, {1970, OptionKind::Put, 10}}}});
    EXPECT_DOUBLE_EQ(compute_forward(snap2, kDay + 30), 1965.0);
}

TEST(ComputeForward, SuppliedForwardWinsAndMissingPairFails) {
    auto snap = snapshot_of({{30, {{2000, OptionKind::Call, 20}, {2000, OptionKind::Put, 20}}}}, 0.0, {{30, 2012.5}});
    EXPECT_DOUBLE_EQ(compute_forward(snap, kDay + 30), 2012.5);
    auto lonely = snapshot_of({{30, {{2000, OptionKind::Call, 20}, {2005, OptionKind::Put, 20}}}});
    EXPECT_THROW((void)compute_forward(lonely, kDay + 30), DataError);
}

TEST(ComputeForward, MatchesGeneratorForward) {
    const auto m = generate_synthetic_market(flat_market(10));
    for (std::size_t d = 0; d < 10; ++d) {
        const auto& snap = m.market.chains[d];
        const auto exps = snap.expiries();
        for (std::size_t e = 0; e < 2; ++e) {
            EXPECT_NEAR(compute_forward(snap, exps[e]) / m.forwards[d][e], 1.0, 1e-6);
        }
    }
}

TEST(FindK0, LargestStrikeNotAboveForward) {
    auto snap = snapshot_of({{30, {{95, OptionKind::Put, 1}, {100, OptionKind::Put, 2}, {105, OptionKind::Call, 1}}}});
    EXPECT_EQ(find_k0(snap, kDay + 30, 104.9), 100.0);
    EXPECT_EQ(find_k0(snap, kDay + 30, 105.0), 105.0);
    EXPECT_THROW((void)find_k0(snap, kDay + 30, 90.0), DataError);
}

TEST(SelectOtm, TenStrikeWalkSkipsIsolatedGap) {
    // Strikes 100..145; K0 = 110; the call at 125 (K0 + 3 dK) is missing.
    std::vector<Leg> legs;
    for (double k = 100; k <= 145; k += 5) {
        legs.push_back({k, OptionKind::Put, 1.0});
        if (k != 125) legs.push_back({k, OptionKind::Call, 1.0});
    }
    auto snap = snapshot_of({{30, legs}});
    const auto sel = select_otm_options(snap, kDay + 30, 112.0, 110.0);
    EXPECT_EQ(strikes_of(sel), (std::vector<double>{100, 105, 110, 115, 120, 130, 135, 140, 145}));
    // Hand-enumerated half-neighbour spacings.
    const std::vector<double> dk{5, 5, 5, 5, 7.5, 7.5, 5, 5, 5};
    for (std::size_t i = 0; i < dk.size(); ++i) EXPECT_DOUBLE_EQ(sel.selected[i].delta_k, dk[i]) << i;
    EXPECT_EQ(sel.selected[2].kinds.size(), 2u);
    EXPECT_EQ(sel.selected[0].kinds, std::vector<OptionKind>{OptionKind::Put});
    EXPECT_EQ(sel.selected[3].kinds, std::vector<OptionKind>{OptionKind::Call});
}

TEST(SelectOtm, TwoConsecutiveMissingStopsTheWalk) {
    std::vector<Leg> legs;
    const double k0 = 200;
    for (int i = -10; i <= 10; ++i) {
        const double k = k0 + 5 * i;
        if (i != -5 && i != -6) legs.push_back({k, OptionKind::Put, 1.0});
        legs.push_back({k, OptionKind::Call, 1.0});
    }
    auto snap = snapshot_of({{30, legs}});
    const auto sel = select_otm_options(snap, kDay + 30, k0, k0);
    EXPECT_EQ(sel.selected.front().strike, k0 - 20);  // truncated below K0 - 4 dK
    EXPECT_EQ(sel.selected.back().strike, k0 + 50);
    EXPECT_EQ(sel.selected.size(), 4u + 1u + 10u);
}

TEST(SelectOtm, ZeroBidCountsAsMissing) {
    std::vector<Leg> legs;
    for (int i = -4; i <= 4; ++i) {
        const double k = 100 + 5 * i;
        legs.push_back({k, OptionKind::Put, (i == -2 || i == -3) ? 0.0 : 1.0});
        legs.push_back({k, OptionKind::Call, 1.0});
    }
    auto snap = snapshot_of({{30, legs}});
    const auto sel = select_otm_options(snap, kDay + 30, 100, 100);
    EXPECT_EQ(sel.selected.front().strike, 95.0);
}

TEST(SelectOtm, GapFreeChainTakesEveryStrike) {
    const auto m = generate_synthetic_market(flat_market(2));
    const auto& snap = m.market.chains[0];
    const Date e = snap.expiries()[0];
    const double F = compute_forward(snap, e);
    const double k0 = find_k0(snap, e, F);
    const auto sel = select_otm_options(snap, e, F, k0);
    EXPECT_EQ(sel.selected.size(), snap.strikes(e).size());
    for (std::size_t i = 1; i < sel.selected.size(); ++i) {
        EXPECT_LT(sel.selected[i - 1].strike, sel.selected[i].strike);
    }
}

TEST(SelectOtm, StrikesPerSideAndStride) {
    std::vector<Leg> legs;
    for (int i = -10; i <= 10; ++i) {
        legs.push_back({100.0 + 5 * i, OptionKind::Put, 1.0});
        legs.push_back({100.0 + 5 * i, OptionKind::Call, 1.0});
    }
    auto snap = snapshot_of({{30, legs}});
    OtmSelectionOptions opts;
    opts.strikes_per_side = 3;
    opts.stride = 2;
    const auto sel = select_otm_options(snap, kDay + 30, 100, 100, opts);
    EXPECT_EQ(strikes_of(sel), (std::vector<double>{70, 80, 90, 100, 110, 120, 130}));
    for (const auto& o : sel.selected) EXPECT_DOUBLE_EQ(o.delta_k, 10.0);
}

TEST(TermVariance, SingleOptionArithmetic) {
    TermSelection sel;
    sel.tenor_days = 30;
    sel.rate = 0.0;
    sel.forward = 2000;
    sel.k0 = 2000;
    sel.selected = {{2000, {OptionKind::Put}, 10.0, 5.0}};
    EXPECT_NEAR(term_variance(sel), 2.0 * (365.0 / 30.0) * (5.0 / (2000.0 * 2000.0)) * 10.0, 1e-18);
    EXPECT_NEAR(term_variance(sel), 3.0417e-4, 1e-8);
    sel.forward = 2010;
    const double c = 2010.0 / 2000.0 - 1.0;
    EXPECT_NEAR(term_variance(sel), 2.0 * (365.0 / 30.0) * 5.0 / 4e6 * 10.0 - c * c * 365.0 / 30.0, 1e-18);
    sel.tenor_days = 0;
    EXPECT_THROW((void)term_variance(sel), DataError);
}

TEST(TermVariance, FlatVolReplicatesImpliedVariance) {
    const auto m = generate_synthetic_market(flat_market(3));
    for (const auto& snap : m.market.chains) {
        for (Date e : snap.expiries()) {
            const double F = compute_forward(snap, e);
            const auto sel = select_otm_options(snap, e, F, find_k0(snap, e, F));
            EXPECT_NEAR(term_variance(sel) / 0.04, 1.0, 0.02);
        }
    }
}

TEST(TermVariance, HomogeneousInMids) {
    std::vector<Leg> legs;
    std::vector<Leg> scaled;
    for (int i = -6; i <= 6; ++i) {
        const double k = 100 + 5 * i;
        const double p = 1.0 + 0.1 * std::abs(i);
        legs.push_back({k, i <= 0 ? OptionKind::Put : OptionKind::Call, p});
        scaled.push_back({k, i <= 0 ? OptionKind::Put : OptionKind::Call, 3.0 * p});
    }
    auto a = select_otm_options(snapshot_of({{30, legs}}), kDay + 30, 100, 100);
    auto b = select_otm_options(snapshot_of({{30, scaled}}), kDay + 30, 100, 100);
    EXPECT_NEAR(term_variance(b), 3.0 * term_variance(a), 1e-15);
}

TEST(TermVariance, AddingAPricedOptionIncreasesTheSum) {
    std::vector<Leg> legs;
    for (int i = -3; i <= 3; ++i) legs.push_back({100.0 + 5 * i, i <= 0 ? OptionKind::Put : OptionKind::Call, 1.0});
    auto sel = select_otm_options(snapshot_of({{30, legs}}), kDay + 30, 100, 100);
    const double before = term_variance(sel);
    sel.selected.push_back({120.0, {OptionKind::Call}, 0.5, 5.0});
    EXPECT_GT(term_variance(sel), before);
}

TEST(HorizonWeights, InterpolationEdgeCases) {
    const std::vector<int> t{23, 37};
    const auto w = horizon_term_weights(t, 30);
    EXPECT_NEAR(w[0], 23.0 / 30.0 * 7.0 / 14.0, 1e-15);
    EXPECT_NEAR(w[1], 37.0 / 30.0 * 7.0 / 14.0, 1e-15);
    const std::vector<int> t1_eq{30, 44};
    EXPECT_EQ(horizon_term_weights(t1_eq, 30)[1], 0.0);
    EXPECT_EQ(horizon_term_weights(std::vector<int>{30}, 30), std::vector<double>{1.0});
    EXPECT_THROW((void)horizon_term_weights(std::vector<int>{31, 37}, 30), DataError);
    // A constant term variance interpolates to itself.
    for (int t1 = 5; t1 < 30; t1 += 6) {
        for (int t2 = 31; t2 < 60; t2 += 7) {
            const std::vector<int> tt{t1, t2};
            const auto ww = horizon_term_weights(tt, 30);
            EXPECT_NEAR((ww[0] + ww[1]) * 0.09, 0.09, 1e-15);
        }
    }
}

TEST(SyntheticVix, FlatMarketGivesTwentyAndIsOrderInvariant) {
    const auto m = generate_synthetic_market(flat_market(20));
    std::mt19937 rng(3);
    for (const auto& snap : m.market.chains) {
        const auto r = synthetic_vix(snap, VixOptions{});
        EXPECT_NEAR(r.value, 20.0, 0.5);
        double v = 0.0;
        for (std::size_t i = 0; i < r.terms.size(); ++i) v += r.term_weights[i] * r.term_variances[i];
        EXPECT_NEAR(r.value, 100.0 * std::sqrt(v), 1e-12);

        std::vector<OptionQuote> shuffled(snap.quotes().begin(), snap.quotes().end());
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        ChainSnapshot again(snap.date(), snap.spot(), shuffled, {}, snap.rate_by_tenor());
        EXPECT_EQ(synthetic_vix(again, VixOptions{}).value, r.value);
    }
}

TEST(SyntheticVix, SingleTermEqualsWeightedSum) {
    std::vector<Leg> legs;
    for (int i = -8; i <= 8; ++i) {
        legs.push_back({100.0 + 5 * i, OptionKind::Put, 0.5 + 0.05 * (8 - i)});
        legs.push_back({100.0 + 5 * i, OptionKind::Call, 0.5 + 0.05 * (8 + i)});
    }
    // Put and call mids coincide at 100 so the parity forward is exactly K0.
    auto snap = snapshot_of({{30, legs}});
    const auto r = synthetic_vix(snap, VixOptions{});
    ASSERT_EQ(r.terms.size(), 1u);
    ASSERT_EQ(r.terms[0].forward, r.terms[0].k0);
    double sum = 0.0;
    for (const auto& o : r.terms[0].selected) sum += o.delta_k / (o.strike * o.strike) * o.mid;
    EXPECT_NEAR(r.value * r.value / 1e4 * (30.0 / 365.0), 2.0 * sum, 1e-15);
}

TEST(SyntheticVix, ErrorsWithoutBracketOrOnNegativeVariance) {
    auto snap = snapshot_of({{40, {{100, OptionKind::Call, 1}, {100, OptionKind::Put, 1}}}});
    EXPECT_THROW((void)synthetic_vix(snap, VixOptions{}), DataError);
    // A forward far from K0 makes the correction dominate the option sum.
    auto crossed = snapshot_of({{30, {{100, OptionKind::Call, 1e-4}, {100, OptionKind::Put, 1e-4},
                                      {105, OptionKind::Call, 1e-4}, {105, OptionKind::Put, 1e-4}}}},
                               0.0, {{30, 104.9}});
    EXPECT_THROW((void)synthetic_vix(crossed, VixOptions{}), NumericalError);
}

TEST(SyntheticVix, ThousandDaysUnderOneSecond) {
    const auto m = generate_synthetic_market(flat_market(1000));
    const auto start = std::chrono::steady_clock::now();
    double total = 0.0;
    for (const auto& snap : m.market.chains) total += synthetic_vix(snap, VixOptions{}).value;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_GT(total, 0.0);
    EXPECT_LT(secs, 1.0);
}
