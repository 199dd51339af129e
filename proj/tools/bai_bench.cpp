// bai-bench: command-line front end for the experiment harness.
//
//   bai-bench run    --config exp.cfg --out curves.csv [--plot-data long.csv]
//   bai-bench bounds --config exp.cfg
//   bai-bench diag   --config exp.cfg
//   bai-bench model  --config exp.cfg [--out model.cfg]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime or trial error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "bai/bai.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
    std::string config;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallel;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "experiment config file")->required();
    cmd->add_option("--trials", o.trials, "override [experiment] n_trials");
    cmd->add_option("--seed", o.seed, "override [experiment] master_seed");
    cmd->add_option("--parallel", o.parallel, "worker threads");
}

bai::ExperimentConfig load(const Overrides& o) {
    auto cfg = bai::load_experiment_config(o.config);
    if (o.trials) cfg.n_trials = *o.trials;
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.parallel) cfg.parallel = *o.parallel;
    cfg.validate();
    return cfg;
}

void print_bound(const bai::BoundReport& b) {
    std::printf("%-28s value=%.10g scaling=%s mc_stderr=%.3g", b.name.c_str(), b.value, bai::to_string(b.scaling),
                b.std_error);
    for (const auto& [k, v] : b.inputs) std::printf(" %s=%.10g", k.c_str(), v);
    std::printf("\n");
}

int cmd_run(const Overrides& o, const std::string& out, const std::string& plot) {
    const auto cfg = load(o);
    const auto result = bai::run_experiment(cfg, {.keep_trials = false, .diagnostics = false});
    bai::emit_csv(result.curves, out);
    if (!plot.empty()) bai::detail::write_file(plot, bai::curves_to_plot_data(result.curves));
    for (const auto& c : result.curves) {
        const auto& last = c.points.back();
        std::printf("%-20s T=%zu mean_regret=%.6g misid=%.4f\n", c.strategy.c_str(), last.budget, last.mean_regret,
                    last.misid_freq);
    }
    return 0;
}

int cmd_bounds(const Overrides& o) {
    const auto cfg = load(o);
    const auto model = bai::build_model(cfg.model);
    const std::size_t k = model.num_arms();
    bai::RandomSource rng(bai::derive_seed(cfg.master_seed, "bounds", 0));
    print_bound(bai::minimax_lower_multi(model, cfg.n_mc, rng));
    if (k == 2) print_bound(bai::minimax_lower_two(model, cfg.n_mc, rng));
    print_bound(bai::rs_aipw_upper(model, cfg.n_mc, rng));
    const auto gain = bai::efficiency_gain(model, cfg.n_mc, rng);
    std::printf("%-28s context_free=%.10g contextual=%.10g squared_gap=%.10g (stderr %.3g)\n", "efficiency_gain",
                gain.context_free.value, gain.contextual.value, gain.squared_gap.value, gain.squared_gap.std_error);
    const std::size_t best = bai::best_arm(model);
    bai::RandomSource v_rng(bai::derive_seed(cfg.master_seed, "variance-functional", 0));
    const auto pairs = bai::make_diagnostic_pairs(model, cfg.n_mc, v_rng);
    for (std::size_t t : cfg.checkpoints) {
        std::printf("T=%zu bubeck_lower=%.10g uniform_eba_upper=%.10g", t, bai::bubeck_lower(k, t),
                    bai::uniform_eba_upper(k, t));
        for (std::size_t p = 0; p < pairs.pairs.size(); ++p)
            std::printf(" worst_case_gap(%zu,%zu)=%.10g", best, pairs.pairs[p].second,
                        bai::worst_case_gap_from_variance(pairs.variances[p], t));
        std::printf("\n");
    }
    return 0;
}

int cmd_diag(const Overrides& o) {
    auto cfg = load(o);
    std::vector<std::string> aipw;
    for (const auto& s : cfg.strategies)
        if (s.rfind("rs-", 0) == 0) aipw.push_back(s);
    if (aipw.empty()) aipw = {"rs-aipw"};
    cfg.strategies = aipw;
    cfg.worst_case_mode = false;
    const auto result = bai::run_experiment(cfg, {.keep_trials = true, .diagnostics = true});
    for (const auto& c : result.curves) {
        for (const auto& d : bai::martingale_diagnostic(c.trials, *result.diagnostics)) {
            std::printf("%-20s pair=(%zu,%zu) mean_sum_xi=%.6g stderr=%.3g mean_variance_process=%.6g stderr=%.3g\n",
                        c.strategy.c_str(), d.arm_a, d.arm_b, d.xi_sum.value, d.xi_sum.std_error,
                        d.variance_process.value, d.variance_process.std_error);
        }
    }
    return 0;
}

int cmd_model(const Overrides& o, const std::string& out) {
    const auto cfg = load(o);
    const auto model = bai::build_model(cfg.model);
    const auto text = bai::model_to_config(model, cfg.model.seed);
    if (out.empty())
        std::cout << text;
    else
        bai::detail::write_file(out, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-budget best-arm identification benchmark"};
    app.require_subcommand(1);

    Overrides run_o, bounds_o, diag_o, model_o;
    std::string run_out, plot_out, model_out;

    auto* run = app.add_subcommand("run", "simulate strategies and write regret curves");
    add_common(run, run_o);
    run->add_option("--out", run_out, "CSV output path")->required();
    run->add_option("--plot-data", plot_out, "long-format CSV for plotting");

    auto* bounds = app.add_subcommand("bounds", "print theoretical bounds for the configured model");
    add_common(bounds, bounds_o);

    auto* diag = app.add_subcommand("diag", "martingale diagnostics of the AIPW terms");
    add_common(diag, diag_o);

    auto* model = app.add_subcommand("model", "write the materialized model as an explicit config");
    add_common(model, model_o);
    model->add_option("--out", model_out, "output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_o, run_out, plot_out);
        if (*bounds) return cmd_bounds(bounds_o);
        if (*diag) return cmd_diag(diag_o);
        if (*model) return cmd_model(model_o, model_out);
    } catch (const bai::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
