#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"

namespace bai {
namespace {

using testing::constant_model;

TEST(BubeckLower, Arithmetic) {
    EXPECT_DOUBLE_EQ(bubeck_lower(4, 400), 0.005);
    EXPECT_DOUBLE_EQ(bubeck_lower(2, 2), 0.05);
    EXPECT_THROW(bubeck_lower(20, 5), DomainError);
    EXPECT_THROW(bubeck_lower(1, 5), DomainError);
}

TEST(UniformEbaUpper, Arithmetic) {
    EXPECT_NEAR(uniform_eba_upper(2, 98), 0.2354820045, 1e-10);
    EXPECT_NEAR(uniform_eba_upper(2, 98), 2.0 * std::sqrt(2.0 * std::log(2.0) / 100.0), 1e-15);
    for (std::size_t t = 1; t < 1000; ++t) ASSERT_LT(uniform_eba_upper(5, t + 1), uniform_eba_upper(5, t));
    EXPECT_THROW(uniform_eba_upper(2, 0), DomainError);
}

TEST(MinimaxLower, ConstantVarianceClosedForms) {
    RandomSource rng(1);
    for (std::size_t k : {2u, 3u, 7u}) {
        const auto m = constant_model(std::vector<double>(k, 0.0), std::vector<double>(k, 1.0));
        const auto r = minimax_lower_multi(m, 100, rng);
        EXPECT_NEAR(r.value, std::sqrt(static_cast<double>(k)) / 12.0, 1e-12);
        EXPECT_EQ(r.scaling, Scaling::per_sqrt_t);
    }
    const auto m3 = constant_model({0, 0, 0}, {1, 2, 3});
    EXPECT_NEAR(minimax_lower(m3, 100, rng).value, std::sqrt(6.0) / 12.0, 1e-12);
    EXPECT_NEAR(minimax_lower(m3, 100, rng).value, 0.2041241452, 1e-10);

    EXPECT_NEAR(minimax_lower_two(constant_model({0, 0}, {1, 1}), 100, rng).value, 2.0 / 12.0, 1e-12);
    EXPECT_NEAR(minimax_lower_two(constant_model({0, 0}, {4, 1}), 100, rng).value, 0.25, 1e-12);
    EXPECT_THROW(minimax_lower_two(m3, 100, rng), DomainError);
}

TEST(MinimaxLower, TwoArmFunctionalDominatesSumOfVariances) {
    // (s1 + s2)^2 >= s1^2 + s2^2 pointwise, so the two-arm bound is the larger one.
    RandomSource rng(2);
    const auto fixed = constant_model({0, 0}, {1, 4});
    EXPECT_NEAR(minimax_lower_multi(fixed, 10, rng).value, std::sqrt(5.0) / 12.0, 1e-12);
    EXPECT_GT(minimax_lower_two(fixed, 10, rng).value, minimax_lower_multi(fixed, 10, rng).value);
    for (std::uint64_t seed = 3; seed < 13; ++seed) {
        const auto m = testing::synthetic(2, 0.8, seed);
        RandomSource a(seed), b(seed);
        EXPECT_GE(minimax_lower_two(m, 20000, a).value, minimax_lower_multi(m, 20000, b).value);
    }
}

TEST(RsAipwUpper, ClosedForms) {
    RandomSource rng(4);
    EXPECT_NEAR(rs_aipw_upper(constant_model({0, 0}, {1, 1}), 10, rng).value, 2.0 / 2.2, 1e-12);
    const auto r = rs_aipw_upper(constant_model({0, 0, 0}, {1, 1, 1}), 10, rng);
    EXPECT_NEAR(r.value, 2.0 / 1.6 * std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(r.value, 2.165, 5e-4);
    EXPECT_EQ(r.inputs.at("K"), 3.0);
}

TEST(Bounds, LowerBelowUpperOnFuzzedModels) {
    RandomSource meta(5);
    for (int i = 0; i < 100; ++i) {
        const std::size_t k = 2 + static_cast<std::size_t>(meta.uniform() * 9.0);
        RandomSource build(meta.next_u64());
        SyntheticOptions opts;
        opts.moment_draws = 2000;
        const auto m = make_synthetic_model(k, 2, 1.0, meta.uniform(0.5, 0.95), build, opts);
        RandomSource a(i), b(i);
        const auto lo = minimax_lower(m, 2000, a);
        const auto hi = rs_aipw_upper(m, 2000, b);
        ASSERT_TRUE(std::isfinite(lo.value) && lo.value >= 0.0);
        ASSERT_LE(lo.value, hi.value) << "K=" << k;
    }
}

TEST(Bounds, ReportAtBudget) {
    RandomSource rng(6);
    const auto r = rs_aipw_upper(constant_model({0, 0}, {1, 1}), 10, rng);
    EXPECT_NEAR(r.at(100), r.value / 10.0, 1e-15);
    BoundReport abs{"x", 0.3, Scaling::absolute, 0.0, {}};
    EXPECT_EQ(abs.at(100), 0.3);
    EXPECT_STREQ(to_string(Scaling::per_sqrt_t), "per_sqrtT");
}

TEST(NonasymptoticUpper, LeadingTermWithoutRateConstant) {
    RandomSource rng(7);
    const auto m2 = constant_model({0, 0}, {4, 1});
    // (1/2.2) sqrt(2 * 9 / T) at T = 200
    EXPECT_NEAR(nonasymptotic_upper(m2, 200, 0.0, 1.0, 10, rng).value, std::sqrt(18.0 / 200.0) / 2.2, 1e-12);
    const auto m3 = constant_model({0, 0, 0}, {1, 1, 1});
    const double lead = 2.0 / 2.2 * std::sqrt(12.0 / 400.0);
    const double rate = 0.5 * std::pow(400.0, -0.25) * std::pow(std::log(400.0), 2.0);
    EXPECT_NEAR(nonasymptotic_upper(m3, 400, 0.5, 1.0, 10, rng).value, lead + rate, 1e-12);
    EXPECT_THROW(nonasymptotic_upper(m3, 1, 0.5, 1.0, 10, rng), DomainError);
}

TEST(WorstCaseGap, ArithmeticAndScaling) {
    EXPECT_NEAR(worst_case_gap_from_variance(9.0, 450), 0.1, 1e-15);
    EXPECT_NEAR(worst_case_gap_from_variance(9.0, 900), 0.1 / std::sqrt(2.0), 1e-15);
    RandomSource rng(8);
    EXPECT_NEAR(worst_case_gap(constant_model({1, 0}, {4, 1}), 0, 1, 450, 10, rng), 0.1, 1e-12);
}

TEST(WorstCaseGap, SyntheticModelGoldenValue) {
    const auto model = testing::synthetic(2, 0.8, 2024);
    RandomSource rng(2025);
    // Same seeds as the variance functional golden value: sqrt(6.305419448120931 / 2000).
    EXPECT_NEAR(worst_case_gap(model, 0, 1, 1000, 1000000, rng), std::sqrt(6.305419448120931 / 2000.0), 1e-10);
}

TEST(MinimaxLower, SyntheticModelGoldenValue) {
    const auto model = testing::synthetic(5, 0.9, 2024);
    RandomSource rng(2026);
    const auto r = minimax_lower(model, 1000000, rng);
    EXPECT_LT(r.std_error / r.value, 0.01);
    EXPECT_NEAR(r.value, 0.24628126482704218, 1e-10);  // pinned for seeds (2024, 2026)
}

TEST(EfficiencyGain, NoGainForConstantModel) {
    RandomSource rng(9);
    const auto g = efficiency_gain(constant_model({1.0, 0.5, 0.2}, {2, 1, 3}), 1000, rng);
    EXPECT_NEAR(g.context_free.value, std::sqrt(6.0), 1e-12);
    EXPECT_NEAR(g.contextual.value, std::sqrt(6.0), 1e-12);
}

TEST(EfficiencyGain, DegenerateContextDistribution) {
    std::vector<ArmSpec> arms(2);
    arms[0] = {1.0, 1.0, {0.5, {0.2, 0.3}}, {0.4, {0.1, 0.2}}};
    arms[1] = {0.0, 1.0, {0.1, {0.1, 0.0}}, {1.0, {0.0, 0.5}}};
    const LocationShiftBandit model(arms, ContextDistribution({1.0, -1.0}, {1e-24, 0.0, 0.0, 1e-24}));
    RandomSource rng(10);
    const auto g = efficiency_gain(model, 1000, rng);
    EXPECT_NEAR(g.context_free.value, g.contextual.value, 1e-9);
}

TEST(EfficiencyGain, StrictGainOnSyntheticModel) {
    for (std::uint64_t seed : {11u, 12u}) {
        const auto model = testing::synthetic(2, 0.8, seed);
        RandomSource rng(seed);
        const auto g = efficiency_gain(model, 200000, rng);
        EXPECT_GT(g.squared_gap.value, 3.0 * g.squared_gap.std_error);
        EXPECT_GT(g.context_free.value, g.contextual.value);
    }
}

TEST(EfficiencyGain, ContextFreeAllocationHasLargerVariance) {
    // Context-free design: allocation and variance proxy from the marginal Var(Y^a).
    const auto model = testing::synthetic(2, 0.8, 13);
    RandomSource pre(14);
    const auto s0 = moment_summary(model, 0, 200000, pre);
    const auto s1 = moment_summary(model, 1, 200000, pre);
    const auto w_free = target_allocation(std::vector<double>{s0.total_variance(), s1.total_variance()});
    const double v_free = s0.total_variance() / w_free[0] + s1.total_variance() / w_free[1];
    RandomSource rng(15);
    const auto v_ctx = optimal_variance_functional(model, 0, 1, 200000, rng);
    EXPECT_GT(v_free, v_ctx.value + 3.0 * v_ctx.std_error);
}

}  // namespace
}  // namespace bai
