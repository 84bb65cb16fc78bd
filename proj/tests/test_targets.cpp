#include "volidx/errors.hpp"
#include "volidx/targets.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace volidx;

namespace {

PriceSeries series(const std::vector<double>& closes) {
    std::vector<Date> dates;
    Date d = Date::from_ymd(2012, 1, 2);
    for (std::size_t i = 0; i < closes.size(); ++i) dates.push_back(d + static_cast<int>(i));
    return PriceSeries(dates, closes);
}

}  // namespace

TEST(RealizedVariance, HandComputedWindow) {
    // Returns +10%, -10%, +10%: mean 1/30, deviations 1/15, -2/15, 1/15.
    const auto p = series({100, 110, 99, 108.9, 50});
    const double expected = (1.0 / 225 + 4.0 / 225 + 1.0 / 225) / 3.0;
    EXPECT_NEAR(realized_variance(p, 0, 3), expected, 1e-15);
    EXPECT_THROW((void)realized_variance(p, 2, 3), DataError);
}

TEST(RealizedVariance, ConstantGrowthHasZeroVariance) {
    std::vector<double> closes{100};
    for (int i = 0; i < 40; ++i) closes.push_back(closes.back() * 1.01);
    EXPECT_NEAR(realized_variance(series(closes), 3, 30), 0.0, 1e-20);
}

TEST(Targets, ModesAndReconstruction) {
    EXPECT_EQ(regression_target(RegressionMode::RegI, 0.05, 0.04), 0.05);
    EXPECT_NEAR(regression_target(RegressionMode::RegII, 0.05, 0.04), 0.01, 1e-17);
    for (double f : {-0.02, 0.0, 0.013}) {
        EXPECT_EQ(reconstruct_variance(RegressionMode::RegI, f, 0.04), f);
        EXPECT_EQ(reconstruct_variance(RegressionMode::RegII, f, 0.04), f + 0.04);
    }
    EXPECT_EQ(parse_mode("reg2"), RegressionMode::RegII);
    EXPECT_EQ(mode_name(RegressionMode::RegI), "reg1");
    EXPECT_THROW((void)parse_mode("reg3"), DataError);
}

TEST(Targets, BuildSkipsShortWindowsAndAnnualizes) {
    std::vector<double> closes;
    for (int i = 0; i < 12; ++i) closes.push_back(100.0 + (i % 2 ? 1.0 : -1.0));
    const auto p = series(closes);
    std::vector<IndexObservation> obs;
    for (int i = 0; i < 12; ++i) obs.push_back({p.date(static_cast<std::size_t>(i)), 0.04});
    const auto rows = build_targets(p, obs, RegressionMode::RegII, 5);
    ASSERT_EQ(rows.size(), 7u);  // t + 5 < 12
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_NEAR(rows[i].realized_var, 252.0 * realized_variance(p, i, 5), 1e-15);
        EXPECT_NEAR(rows[i].target, rows[i].realized_var - 0.04, 1e-15);
    }
    std::vector<IndexObservation> bad{{Date::from_ymd(1999, 1, 1), 0.04}};
    EXPECT_THROW((void)build_targets(p, bad, RegressionMode::RegI, 5), DataError);
    std::vector<IndexObservation> unordered{obs[3], obs[2]};
    EXPECT_THROW((void)build_targets(p, unordered, RegressionMode::RegI, 5), DataError);
}

TEST(Targets, VarianceRiskPremiumIdentity) {
    // RegII target is minus the variance risk premium: realized - index^2.
    for (double rv : {0.01, 0.03, 0.09}) {
        for (double v2 : {0.02, 0.04}) {
            EXPECT_EQ(regression_target(RegressionMode::RegII, rv, v2), -(v2 - rv));
        }
    }
}
