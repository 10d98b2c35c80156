#include "flexdur/diagnostics.hpp"
#include "flexdur/errors.hpp"
#include "flexdur/simulate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace flexdur;

namespace {

std::vector<double> exp_quantile_grid(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = -std::log1p(-(i + 0.5) / static_cast<double>(n));
    return v;
}

}  // namespace

TEST(ExpResiduals, ExponentialModelGivesPhi) {
    const ModelSpec model(SeParams{0.8, 0.4, 1.3}, ResidualSpec::exponential());
    const auto series = simulate(model, 500, {.seed = 2});
    const double x0 = default_initial_state(model.dynamics());
    const auto res = exp_residuals(model, series.durations, x0);
    ASSERT_EQ(res.values.size(), series.size());
    double x = x0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        EXPECT_NEAR(res.values[i], phi(model, series.durations[i], x), 1e-12 * (1.0 + res.values[i]));
        x = psi_update(model, series.durations[i], x);
    }
    EXPECT_EQ(res.clamped, 0u);
}

TEST(ExpResiduals, RenewalSingleDuration) {
    const ModelSpec model(RenewalParams{}, ResidualSpec::exponential());
    const std::vector<double> tau{std::log(2.0)};
    EXPECT_NEAR(exp_residuals(model, tau, 1.0).values[0], std::log(2.0), 1e-15);
}

TEST(ExpResiduals, ExtremeTailIsClamped) {
    const ModelSpec model(RenewalParams{}, ResidualSpec::gamma(5.0));
    const std::vector<double> tau{1.0, 500.0};
    const auto res = exp_residuals(model, tau, 1.0);
    EXPECT_EQ(res.clamped, 1u);
    EXPECT_EQ(res.values[1], kMaxExpResidual);
    EXPECT_NEAR(kMaxExpResidual, -std::log(1e-16), 1e-14);
}

TEST(ExpResiduals, TrueModelSeBurrPassesKs) {
    const ModelSpec model(SeParams{0.27, 0.094, 0.107}, ResidualSpec::burr(6.0, 0.7));
    const auto series = simulate(model, 10000, {.seed = 41, .burn_in = 1000});
    const auto res = exp_residuals(model, series.durations, (*series.latent_path)[0]);
    EXPECT_LT(ks_statistic(res.values), 1.36 / 100.0);
}

TEST(Ks, HandValues) {
    const std::vector<double> median{std::log(2.0)};
    EXPECT_NEAR(ks_statistic(median), 0.5, 1e-15);
    const std::vector<double> tail{20.0};
    EXPECT_NEAR(ks_statistic(tail), 1.0 - std::exp(-20.0), 1e-15);
    EXPECT_NEAR(ks_statistic(exp_quantile_grid(100)), 0.005, 1e-12);
}

TEST(Ks, QuantileGridDecaysAsHalfOverN) {
    for (std::size_t n : {10u, 50u, 400u, 2000u}) {
        EXPECT_NEAR(ks_statistic(exp_quantile_grid(n)), 0.5 / static_cast<double>(n), 1e-12);
    }
}

TEST(Ks, AlwaysInUnitInterval) {
    const auto sample = ResidualSpec::gamma(0.2).sample(3000, 5);
    const double ks = ks_statistic(sample);
    EXPECT_GE(ks, 0.0);
    EXPECT_LE(ks, 1.0);
    const std::vector<double> tiny{1e-300, 1e-300};
    EXPECT_LE(ks_statistic(tiny), 1.0);
}

TEST(Wasserstein, HandValues) {
    EXPECT_NEAR(wasserstein_msq(exp_quantile_grid(250)), 0.0, 1e-28);
    const std::vector<double> median{std::log(2.0)};
    EXPECT_NEAR(wasserstein_msq(median), 0.0, 1e-30);
    // PIT values 0.5 and 0.75 against the grid 0.25, 0.75.
    const std::vector<double> shifted{-std::log1p(-0.5), -std::log1p(-0.75)};
    EXPECT_NEAR(wasserstein_msq(shifted), 0.5 * 0.25 * 0.25, 1e-15);
}

TEST(Wasserstein, TrueExponentialsAreSmall) {
    int below = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        below += wasserstein_msq(ResidualSpec::exponential().sample(10000, seed)) < 1e-3;
    }
    EXPECT_GE(below, 99);
}

TEST(PpPoints, PitChainIdentity) {
    const ModelSpec model(AcdParams{0.1, 0.2, 0.5}, ResidualSpec::gen_gamma(0.5, 1.4));
    const auto series = simulate(model, 800, {.seed = 7});
    const double x0 = default_initial_state(model.dynamics());
    const auto pp = pp_points(model, series.durations, x0);
    auto res = exp_residuals(model, series.durations, x0).values;
    std::sort(res.begin(), res.end());
    ASSERT_EQ(pp.size(), res.size());
    double w = 0.0;
    for (std::size_t i = 0; i < pp.size(); ++i) {
        EXPECT_NEAR(pp[i].first, -std::expm1(-res[i]), 1e-12);
        EXPECT_NEAR(pp[i].second, (i + 0.5) / pp.size(), 1e-15);
        w += (pp[i].first - pp[i].second) * (pp[i].first - pp[i].second);
    }
    EXPECT_NEAR(wasserstein_msq(res), w / pp.size(), 1e-12);
}

TEST(PpPoints, TrueModelUniformity) {
    const ModelSpec model(LogAcdParams{0.02, 0.05, 0.9}, ResidualSpec::burr(4.0, 0.6));
    const auto series = simulate(model, 5000, {.seed = 19, .burn_in = 500});
    const auto pp = pp_points(model, series.durations, (*series.latent_path)[0]);
    double dev = 0.0;
    for (const auto& [v, u] : pp) dev = std::max(dev, std::abs(v - u));
    EXPECT_LT(dev, 1.36 / std::sqrt(static_cast<double>(pp.size())));
}

TEST(PpPoints, SinglePoint) {
    const ModelSpec model(RenewalParams{}, ResidualSpec::exponential());
    const std::vector<double> tau{0.3};
    const auto pp = pp_points(model, tau, 1.0);
    ASSERT_EQ(pp.size(), 1u);
    EXPECT_EQ(pp[0].second, 0.5);
}

TEST(Metrics, HandValues) {
    const std::vector<double> real{1.0, 2.0, 3.0};
    const auto perfect = forecast_metrics(real, real);
    EXPECT_EQ(perfect.rrmse, 0.0);
    EXPECT_EQ(perfect.r_squared, 1.0);

    const std::vector<double> ones{1.0, 1.0, 1.0};
    const auto m = forecast_metrics(ones, real);
    EXPECT_NEAR(m.rrmse, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_NEAR(m.r_squared, -1.5, 1e-15);

    const std::vector<double> mean{2.0, 2.0, 2.0};
    const auto c = forecast_metrics(mean, real);
    EXPECT_NEAR(c.r_squared, 0.0, 1e-15);
    EXPECT_NEAR(c.rrmse, std::sqrt(2.0 / 3.0) / 2.0, 1e-15);
}

TEST(Metrics, DegenerateInput) {
    const std::vector<double> flat{2.0, 2.0, 2.0};
    EXPECT_THROW((void)forecast_metrics(flat, flat), DomainError);
    const std::vector<double> two{1.0, 2.0};
    EXPECT_THROW((void)forecast_metrics(two, flat), DomainError);
}

TEST(Metrics, FromRecords) {
    std::vector<ForecastRecord> records(3);
    for (std::size_t i = 0; i < 3; ++i) {
        records[i].event_index = i;
        records[i].predicted = 1.0;
        records[i].realized = static_cast<double>(i + 1);
        records[i].exp_residual = static_cast<double>(i + 1) * 0.5;
    }
    const auto m = forecast_metrics(records);
    EXPECT_NEAR(m.r_squared, -1.5, 1e-15);
    const auto report = diagnose_forecasts(records, 1);
    EXPECT_EQ(report.n_forecasts, 3u);
    EXPECT_NEAR(report.rrmse, m.rrmse, 1e-15);
    EXPECT_GE(report.ks, 0.0);
    EXPECT_LE(report.ks, 1.0);
}

TEST(Describe, HandValues) {
    const std::vector<double> v{1.0, 2.0, 3.0};
    const auto s = descriptive_stats(v);
    EXPECT_EQ(s.count, 3u);
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_DOUBLE_EQ(s.sd, 1.0);
    EXPECT_DOUBLE_EQ(s.median, 2.0);
    EXPECT_DOUBLE_EQ(s.min, 1.0);
    EXPECT_DOUBLE_EQ(s.max, 3.0);
    EXPECT_DOUBLE_EQ(s.overdispersion, 0.5);
    ASSERT_TRUE(s.skewness.has_value());
    EXPECT_NEAR(*s.skewness, 0.0, 1e-15);
}

TEST(Describe, ConstantSequenceFlagsMoments) {
    const std::vector<double> v(10, 4.0);
    const auto s = descriptive_stats(v);
    EXPECT_EQ(s.sd, 0.0);
    EXPECT_FALSE(s.skewness.has_value());
    EXPECT_FALSE(s.kurtosis.has_value());
}

TEST(Describe, ExponentialMoments) {
    const auto sample = ResidualSpec::exponential().sample(1000000, 77);
    const auto s = descriptive_stats(sample);
    EXPECT_NEAR(s.overdispersion, 1.0, 0.01);
    EXPECT_NEAR(*s.skewness, 2.0, 0.1);
    EXPECT_NEAR(*s.kurtosis, 9.0, 0.5);
}

TEST(Describe, AgreesWithStreamingRecomputation) {
    const auto series = simulate(ModelSpec(SeParams{0.27, 0.094, 0.107}, ResidualSpec::gamma(0.35)), 30000,
                                 {.seed = 3, .burn_in = 1000});
    const auto s = descriptive_stats(series.durations);
    // Welford one-pass moments.
    double mean = 0.0;
    double m2 = 0.0;
    double n = 0.0;
    for (double x : series.durations) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    EXPECT_NEAR(s.mean, mean, 1e-9 * mean);
    EXPECT_NEAR(s.sd, std::sqrt(m2 / (n - 1.0)), 1e-9 * s.sd);
}
