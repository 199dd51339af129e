#include <gtest/gtest.h>

#include <string>

#include "test_util.hpp"

namespace bai {
namespace {

constexpr const char* kBasic = R"(
# two-arm design
[model]
kind = synthetic
K = 2
mu_sub = 0.9          # runner-up mean
variances = 5, 0.1
seed = 3
moment_draws = 5000

[experiment]
T_max = 1000
checkpoints = 100, 500, 1000
n_trials = 20
master_seed = 99
worst_case_mode = false
parallel = 2
n_mc = 5000

[strategies]
names = rs-aipw, uniform-eba
ugapeb_c = 0.25
k_neighbors = 7
)";

TEST(Config, ParsesAllSections) {
    const auto cfg = parse_experiment_config(kBasic);
    EXPECT_EQ(cfg.model.kind, "synthetic");
    EXPECT_EQ(cfg.model.num_arms, 2u);
    EXPECT_EQ(cfg.model.mu_best, 1.0);
    EXPECT_EQ(cfg.model.mu_sub, 0.9);
    ASSERT_TRUE(cfg.model.variances.has_value());
    EXPECT_EQ(*cfg.model.variances, (std::vector<double>{5.0, 0.1}));
    EXPECT_EQ(cfg.model.seed, 3u);
    EXPECT_EQ(cfg.model.moment_draws, 5000u);
    EXPECT_EQ(cfg.t_max, 1000u);
    EXPECT_EQ(cfg.checkpoints, (std::vector<std::size_t>{100, 500, 1000}));
    EXPECT_EQ(cfg.n_trials, 20u);
    EXPECT_EQ(cfg.master_seed, 99u);
    EXPECT_FALSE(cfg.worst_case_mode);
    EXPECT_EQ(cfg.parallel, 2u);
    EXPECT_EQ(cfg.n_mc, 5000u);
    EXPECT_EQ(cfg.strategies, (std::vector<std::string>{"rs-aipw", "uniform-eba"}));
    EXPECT_EQ(cfg.strategy_options.ugapeb_exploration, 0.25);
    EXPECT_EQ(cfg.strategy_options.k_neighbors, 7u);

    const auto model = build_model(cfg.model);
    EXPECT_EQ(model.arm(0).marginal_variance, 5.0);
    EXPECT_EQ(model.arm(1).marginal_mean, 0.9);
}

TEST(Config, DefaultsCheckpointsToTmax) {
    const auto cfg = parse_experiment_config("[model]\nK = 3\n[experiment]\nT_max = 50\n");
    EXPECT_EQ(cfg.checkpoints, (std::vector<std::size_t>{50}));
    EXPECT_TRUE(cfg.strategies.empty());
}

TEST(Config, Rejections) {
    const auto bad = [](const std::string& text) { return [text] { parse_experiment_config(text); }; };
    EXPECT_THROW(bad("[model]\nbudget = 10\n")(), ConfigError);
    EXPECT_THROW(bad("[runs]\nx = 1\n")(), ConfigError);
    EXPECT_THROW(bad("K = 2\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\nK = 2\nK = 3\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\n[model]\n")(), ConfigError);
    EXPECT_THROW(bad("[model\nK = 2\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\nK two\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\nK = two\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\nK = -2\n")(), ConfigError);
    EXPECT_THROW(bad("[experiment]\nT_max = 100\ncheckpoints = 50, 50\n")(), ConfigError);
    EXPECT_THROW(bad("[experiment]\nT_max = 100\ncheckpoints = 50, 200\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\nK = 5\n[experiment]\nT_max = 100\ncheckpoints = 3, 100\n")(), ConfigError);
    EXPECT_THROW(bad("[experiment]\nn_trials = 0\n")(), ConfigError);
    EXPECT_THROW(bad("[experiment]\nworst_case_mode = maybe\n")(), ConfigError);
    EXPECT_THROW(bad("[strategies]\nnames = rs-aipw, thompson\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\nkind = synthetic\n[model.arm.0]\nmean_intercept = 1\n")(), ConfigError);
    EXPECT_THROW(bad("[model]\nD = 3\n")(), ConfigError);
}

TEST(Config, UnknownModelKindAtBuild) {
    const auto cfg = parse_experiment_config("[model]\nkind = mixture\n");
    EXPECT_THROW(build_model(cfg.model), ConfigError);
}

TEST(Config, ConstantModel) {
    const auto cfg = parse_experiment_config(
        "[model]\nkind = constant\nK = 3\nmeans = 1, 0.5, 0.25\nvariances = 1, 2, 3\n[experiment]\nT_max = 10\n");
    const auto model = build_model(cfg.model);
    EXPECT_EQ(model.num_arms(), 3u);
    EXPECT_EQ(model.conditional_variance(2, Context{4.0, -2.0}), 3.0);
    EXPECT_EQ(model.conditional_mean(1, Context{4.0, -2.0}), 0.5);

    auto short_means = cfg.model;
    short_means.means.pop_back();
    EXPECT_THROW(build_model(short_means), ConfigError);
}

TEST(Config, ExplicitModelSections) {
    const auto cfg = parse_experiment_config(R"(
[model]
kind = explicit
K = 2
context_mean = 0, 0
context_cov = 1, 0, 0, 1
[model.arm.0]
marginal_mean = 1
mean_intercept = 0.5
mean_coefs = 0.25, 0.25
var_intercept = 2
[model.arm.1]
marginal_mean = 0.5
mean_intercept = 0.5
)");
    const auto model = build_model(cfg.model);
    EXPECT_EQ(model.num_arms(), 2u);
    EXPECT_DOUBLE_EQ(model.conditional_mean(0, Context{2.0, 0.0}), 1.5);
    EXPECT_DOUBLE_EQ(model.conditional_variance(0, Context{2.0, 0.0}), 2.0);
    EXPECT_DOUBLE_EQ(model.conditional_variance(1, Context{2.0, 0.0}), 1.0);

    EXPECT_THROW(parse_experiment_config("[model]\nkind = explicit\nK = 3\n[model.arm.0]\n[model.arm.1]\n"),
                 ConfigError);
    EXPECT_THROW(parse_experiment_config("[model]\nkind = explicit\n[model.arm.0]\nnoise = laplace\n"), ConfigError);
}

TEST(Config, ModelRoundTripIsExact) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto model = testing::synthetic(4, 0.85, seed);
        const auto text = model_to_config(model, seed);
        const auto back = model_from_config(text);
        EXPECT_TRUE(back == model) << text;
        EXPECT_EQ(model_to_config(back, seed), text);
    }
}

TEST(Config, FormatExactRoundTrips) {
    RandomSource rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-20.0, 20.0));
        const std::string s = detail::format_exact(v);
        EXPECT_EQ(std::stod(s), v);
    }
    EXPECT_EQ(detail::format_exact(0.1), "0.1");
}

TEST(Config, LoadFromFile) {
    EXPECT_THROW(load_experiment_config("/nonexistent/file.cfg"), ConfigError);
}

}  // namespace
}  // namespace bai
