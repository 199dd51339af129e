#pragma once
// Experiment orchestration: independent trials per strategy, aggregated into
// simple-regret curves with theoretical bounds attached.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bai/bounds.hpp"
#include "bai/config.hpp"
#include "bai/errors.hpp"
#include "bai/estimators.hpp"
#include "bai/model.hpp"
#include "bai/random.hpp"
#include "bai/strategies.hpp"

namespace bai {

// Oracle quantities for the martingale diagnostic of pairs (a, b):
//   xi_t = (phi^a_t - phi^b_t - Delta^{a,b}) / sqrt(T V^{a,b*})
struct DiagnosticPairs {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<double> gaps;       // Delta^{a,b}
    std::vector<double> variances;  // V^{a,b*}
};

// (best, b) for every other arm b, with V^{a,b*} by Monte Carlo.
inline DiagnosticPairs make_diagnostic_pairs(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    DiagnosticPairs d;
    const std::size_t best = best_arm(model);
    for (std::size_t b = 0; b < model.num_arms(); ++b) {
        if (b == best) continue;
        d.pairs.emplace_back(best, b);
        d.gaps.push_back(model.arm(best).marginal_mean - model.arm(b).marginal_mean);
        d.variances.push_back(optimal_variance_functional(model, best, b, n_mc, rng).value);
    }
    return d;
}

struct TrialResult {
    std::vector<std::size_t> recommendations;  // one per checkpoint
    std::vector<std::size_t> draw_counts;      // over all T rounds
    std::vector<std::size_t> late_draw_counts; // rounds t > T/2
    // Per diagnostic pair; empty unless pairs were supplied and the strategy exposes AIPW terms.
    std::vector<double> xi_sum;
    std::vector<double> xi_sq_sum;

    bool operator==(const TrialResult&) const = default;
};

struct TrialOptions {
    StrategyOptions strategy{};
    const DiagnosticPairs* diagnostics{nullptr};
};

// Runs one strategy to T = checkpoints.back(), querying the recommendation at
// every checkpoint without disturbing the state.
inline TrialResult run_trial(const LocationShiftBandit& model, std::string_view strategy_name,
                             std::span<const std::size_t> checkpoints, std::uint64_t seed,
                             const TrialOptions& opts = {}) {
    if (checkpoints.empty()) throw ConfigError("run_trial needs at least one checkpoint");
    const std::size_t budget = checkpoints.back();
    auto strategy = make_strategy(strategy_name, model, budget, opts.strategy);
    RandomSource rng(seed);
    const std::size_t k = model.num_arms();

    TrialResult out;
    out.draw_counts.assign(k, 0);
    out.late_draw_counts.assign(k, 0);
    const DiagnosticPairs* diag = opts.diagnostics;
    std::vector<double> xi_norm;
    if (diag != nullptr) {
        out.xi_sum.assign(diag->pairs.size(), 0.0);
        out.xi_sq_sum.assign(diag->pairs.size(), 0.0);
        for (double v : diag->variances) xi_norm.push_back(std::sqrt(static_cast<double>(budget) * v));
    }

    std::size_t next_cp = 0;
    Observation obs;
    for (std::size_t t = 1; t <= budget; ++t) {
        obs.context = sample_context(model, rng);
        const Draw d = strategy->select_arm(t, obs.context, rng);
        obs.round = t;
        obs.arm = d.arm;
        obs.propensity = d.propensity;
        obs.outcome = sample_outcome(model, d.arm, obs.context, rng);
        strategy->observe(obs);

        ++out.draw_counts[d.arm];
        if (2 * t > budget) ++out.late_draw_counts[d.arm];
        if (diag != nullptr) {
            const auto phi = strategy->last_aipw_terms();
            if (!phi.empty()) {
                for (std::size_t p = 0; p < diag->pairs.size(); ++p) {
                    const auto [a, b] = diag->pairs[p];
                    const double xi = (phi[a] - phi[b] - diag->gaps[p]) / xi_norm[p];
                    out.xi_sum[p] += xi;
                    out.xi_sq_sum[p] += xi * xi;
                }
            }
        }
        while (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
            out.recommendations.push_back(strategy->current_recommendation());
            ++next_cp;
        }
    }
    if (next_cp != checkpoints.size()) throw ConfigError("checkpoints must be strictly increasing");
    return out;
}

// Runs fn(i) for i in [0, n) on `threads` workers. Results are written by
// index, so the outcome does not depend on scheduling. The error of the
// lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) body(i);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct CheckpointStats {
    std::size_t budget{0};
    double mean_regret{0.0};
    std::optional<double> std_error;  // absent for a single trial
    double misid_freq{0.0};
    std::vector<std::size_t> recommendation_counts;
};

struct BoundOverlay {
    std::string name;
    double value{0.0};
};

struct RegretCurve {
    std::string strategy;
    std::vector<CheckpointStats> points;
    std::vector<std::vector<BoundOverlay>> bounds;  // aligned with points
    std::vector<TrialResult> trials;                // per trial, by trial index
};

struct ExperimentResult {
    LocationShiftBandit model;
    std::vector<BoundReport> bounds;
    std::vector<RegretCurve> curves;
    std::optional<DiagnosticPairs> diagnostics;
};

// Regret statistics of one checkpoint from recommended arms.
inline CheckpointStats summarize_checkpoint(const LocationShiftBandit& model, std::size_t budget,
                                           std::span<const std::size_t> recommended) {
    CheckpointStats s;
    s.budget = budget;
    s.recommendation_counts.assign(model.num_arms(), 0);
    const std::size_t best = best_arm(model);
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    std::size_t misses = 0;
    for (std::size_t rec : recommended) {
        const double r = simple_regret(model, rec);
        sum += r;
        sum_sq += static_cast<long double>(r) * r;
        ++s.recommendation_counts.at(rec);
        if (model.arm(rec).marginal_mean < model.arm(best).marginal_mean) ++misses;
    }
    const std::size_t n = recommended.size();
    const long double nn = static_cast<long double>(n);
    s.mean_regret = static_cast<double>(sum / nn);
    s.misid_freq = static_cast<double>(misses) / static_cast<double>(n);
    if (n > 1) {
        const long double var = std::max(0.0L, (sum_sq - sum * sum / nn) / (nn - 1));
        s.std_error = static_cast<double>(std::sqrt(var / nn));
    }
    return s;
}

inline std::vector<BoundOverlay> overlays_at(const std::vector<BoundReport>& reports, std::size_t k, std::size_t t) {
    std::vector<BoundOverlay> out;
    if (t >= k) out.push_back({"bubeck_lower", bubeck_lower(k, t)});
    out.push_back({"uniform_eba_upper", uniform_eba_upper(k, t)});
    for (const auto& r : reports) out.push_back({r.name, r.at(t)});
    return out;
}

inline std::uint64_t trial_seed(std::uint64_t master, const std::string& strategy, std::size_t trial) {
    return derive_seed(master, strategy, trial);
}

// Model whose best-vs-runner-up gap equals the worst-case gap at budget T.
inline LocationShiftBandit worst_case_model(const LocationShiftBandit& base, double variance, std::size_t t) {
    const std::size_t best = best_arm(base);
    std::size_t runner = best == 0 ? 1 : 0;
    for (std::size_t a = 0; a < base.num_arms(); ++a)
        if (a != best && base.arm(a).marginal_mean > base.arm(runner).marginal_mean) runner = a;
    const double gap = worst_case_gap_from_variance(variance, t);
    const double shift = base.arm(runner).marginal_mean + gap - base.arm(best).marginal_mean;
    return with_mean_shift(base, best, shift);
}

struct RunOptions {
    bool keep_trials{true};
    bool diagnostics{false};  // collect martingale terms (needs V^{a,b*})
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& run = {}) {
    cfg.validate();
    ExperimentResult result{build_model(cfg.model), {}, {}, std::nullopt};
    const auto& model = result.model;
    const std::size_t k = model.num_arms();

    RandomSource bound_rng(derive_seed(cfg.master_seed, "bounds", 0));
    result.bounds.push_back(minimax_lower(model, cfg.n_mc, bound_rng));
    result.bounds.push_back(rs_aipw_upper(model, cfg.n_mc, bound_rng));

    const bool need_v = run.diagnostics || cfg.worst_case_mode;
    if (need_v) {
        RandomSource v_rng(derive_seed(cfg.master_seed, "variance-functional", 0));
        result.diagnostics = make_diagnostic_pairs(model, cfg.n_mc, v_rng);
    }

    for (const auto& name : cfg.strategies) {
        RegretCurve curve;
        curve.strategy = name;
        if (!cfg.worst_case_mode) {
            std::vector<TrialResult> trials(cfg.n_trials);
            TrialOptions topts{cfg.strategy_options, run.diagnostics ? &*result.diagnostics : nullptr};
            parallel_for(cfg.n_trials, cfg.parallel, [&](std::size_t i) {
                try {
                    trials[i] = run_trial(model, name, cfg.checkpoints, trial_seed(cfg.master_seed, name, i), topts);
                } catch (const std::exception& e) {
                    throw TrialError(name, i, e.what());
                }
            });
            for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
                std::vector<std::size_t> recs(cfg.n_trials);
                for (std::size_t i = 0; i < cfg.n_trials; ++i) recs[i] = trials[i].recommendations[c];
                curve.points.push_back(summarize_checkpoint(model, cfg.checkpoints[c], recs));
                curve.bounds.push_back(overlays_at(result.bounds, k, cfg.checkpoints[c]));
            }
            if (run.keep_trials) curve.trials = std::move(trials);
        } else {
            // Gap of best vs runner-up; the pair with the smallest gap drives the worst case.
            const auto& d = *result.diagnostics;
            std::size_t pick = 0;
            for (std::size_t p = 1; p < d.gaps.size(); ++p)
                if (d.gaps[p] < d.gaps[pick]) pick = p;
            for (std::size_t t : cfg.checkpoints) {
                const auto shifted = worst_case_model(model, d.variances[pick], t);
                const std::string stream = name + "@" + std::to_string(t);
                const std::size_t cp[] = {t};
                std::vector<TrialResult> trials(cfg.n_trials);
                TrialOptions topts{cfg.strategy_options, nullptr};
                parallel_for(cfg.n_trials, cfg.parallel, [&](std::size_t i) {
                    try {
                        trials[i] = run_trial(shifted, name, cp, trial_seed(cfg.master_seed, stream, i), topts);
                    } catch (const std::exception& e) {
                        throw TrialError(name, i, e.what());
                    }
                });
                std::vector<std::size_t> recs(cfg.n_trials);
                for (std::size_t i = 0; i < cfg.n_trials; ++i) recs[i] = trials[i].recommendations[0];
                curve.points.push_back(summarize_checkpoint(shifted, t, recs));
                curve.bounds.push_back(overlays_at(result.bounds, k, t));
                if (run.keep_trials)
                    curve.trials.insert(curve.trials.end(), std::make_move_iterator(trials.begin()),
                                        std::make_move_iterator(trials.end()));
            }
        }
        result.curves.push_back(std::move(curve));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Martingale diagnostic

struct PairDiagnostic {
    std::size_t arm_a{0};
    std::size_t arm_b{0};
    McEstimate xi_sum;              // cross-trial mean of sum_t xi_t, should straddle 0
    McEstimate variance_process;    // cross-trial mean of sum_t xi_t^2, should approach 1
};

inline std::vector<PairDiagnostic> martingale_diagnostic(std::span<const TrialResult> trials,
                                                         const DiagnosticPairs& pairs) {
    std::vector<PairDiagnostic> out;
    auto estimate = [](const std::vector<double>& v) {
        McEstimate m;
        if (v.empty()) return m;
        long double s = 0.0L, ss = 0.0L;
        for (double x : v) {
            s += x;
            ss += static_cast<long double>(x) * x;
        }
        const long double n = static_cast<long double>(v.size());
        m.value = static_cast<double>(s / n);
        if (v.size() > 1) m.std_error = static_cast<double>(std::sqrt(std::max(0.0L, (ss - s * s / n) / (n - 1)) / n));
        return m;
    };
    for (std::size_t p = 0; p < pairs.pairs.size(); ++p) {
        std::vector<double> sums, squares;
        for (const auto& t : trials) {
            if (t.xi_sum.size() != pairs.pairs.size()) continue;
            if (!std::isfinite(t.xi_sum[p]) || !std::isfinite(t.xi_sq_sum[p])) continue;
            sums.push_back(t.xi_sum[p]);
            squares.push_back(t.xi_sq_sum[p]);
        }
        out.push_back({pairs.pairs[p].first, pairs.pairs[p].second, estimate(sums), estimate(squares)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string format_g10(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace detail

inline const char* kCsvHeader = "strategy,T,mean_regret,stderr,misid_freq,bounds";

// One row per (strategy, checkpoint); bounds as name=value pairs joined by ';'.
inline std::string curves_to_csv(std::span<const RegretCurve> curves) {
    using detail::format_g10;
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            const auto& p = c.points[i];
            out += c.strategy + "," + std::to_string(p.budget) + "," + format_g10(p.mean_regret) + "," +
                   (p.std_error ? format_g10(*p.std_error) : std::string("NA")) + "," + format_g10(p.misid_freq) + ",";
            if (i < c.bounds.size()) {
                for (std::size_t b = 0; b < c.bounds[i].size(); ++b)
                    out += (b ? ";" : "") + c.bounds[i][b].name + "=" + format_g10(c.bounds[i][b].value);
            }
            out += "\n";
        }
    }
    return out;
}

inline void emit_csv(std::span<const RegretCurve> curves, const std::string& path) {
    detail::write_file(path, curves_to_csv(curves));
}

// Long format: strategy,T,series,value.
inline std::string curves_to_plot_data(std::span<const RegretCurve> curves) {
    using detail::format_g10;
    std::string out = "strategy,T,series,value\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            const auto& p = c.points[i];
            const std::string prefix = c.strategy + "," + std::to_string(p.budget) + ",";
            out += prefix + "mean_regret," + format_g10(p.mean_regret) + "\n";
            if (p.std_error) out += prefix + "stderr," + format_g10(*p.std_error) + "\n";
            out += prefix + "misid_freq," + format_g10(p.misid_freq) + "\n";
            if (i < c.bounds.size())
                for (const auto& b : c.bounds[i]) out += prefix + b.name + "," + format_g10(b.value) + "\n";
        }
    }
    return out;
}

}  // namespace bai
