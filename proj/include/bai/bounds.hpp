#pragma once
// Closed-form regret bounds. The asymptotic ones are leading factors of
// sqrt(T) * E[r_T] and carry Monte Carlo context integrals:
//
//   S_sum = sum_a E_x[sigma_a(x)^2]          S_two = E_x[(sigma_1(x) + sigma_2(x))^2]
//
//   minimax lower, K arms   (1/12) sqrt(S_sum)
//   minimax lower, 2 arms   (1/12) sqrt(S_two)
//   RS-AIPW upper, K >= 3   ((K-1)/1.6) sqrt(S_sum)
//   RS-AIPW upper, K = 2    (1/2.2) sqrt(S_two)
//
// Bubeck et al. bounds for bounded outcomes are absolute at a given T.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "bai/errors.hpp"
#include "bai/estimators.hpp"
#include "bai/model.hpp"

namespace bai {

enum class Scaling { per_sqrt_t, absolute };

inline const char* to_string(Scaling s) { return s == Scaling::per_sqrt_t ? "per_sqrtT" : "absolute"; }

struct BoundReport {
    std::string name;
    double value{0.0};
    Scaling scaling{Scaling::absolute};
    double std_error{0.0};  // Monte Carlo error of `value`, 0 for exact formulas
    std::map<std::string, double> inputs;

    // Regret-scale value at budget T.
    double at(std::size_t t) const {
        return scaling == Scaling::per_sqrt_t ? value / std::sqrt(static_cast<double>(t)) : value;
    }
};

inline double bubeck_lower(std::size_t k, std::size_t t) {
    if (k < 2 || t < k) throw DomainError("bubeck_lower requires T >= K >= 2");
    return std::sqrt(static_cast<double>(k) / static_cast<double>(t)) / 20.0;
}

// Natural logarithm in K log K.
inline double uniform_eba_upper(std::size_t k, std::size_t t) {
    if (k < 2 || t < 1) throw DomainError("uniform_eba_upper requires K >= 2 and T >= 1");
    const double kk = static_cast<double>(k);
    return 2.0 * std::sqrt(kk * std::log(kk) / (static_cast<double>(t) + kk));
}

namespace detail {

inline McEstimate sqrt_of(const McEstimate& m) {
    const double v = std::sqrt(std::max(0.0, m.value));
    return {v, v > 0.0 ? m.std_error / (2.0 * v) : 0.0};
}

inline McEstimate sum_conditional_variances(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    return context_expectation(model.context(), n_mc, rng, [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t a = 0; a < model.num_arms(); ++a) s += model.conditional_variance(a, x);
        return s;
    });
}

inline McEstimate squared_sd_sum(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    if (model.num_arms() != 2) throw DomainError("two-arm functional needs K = 2");
    return context_expectation(model.context(), n_mc, rng, [&](std::span<const double> x) {
        const double s = std::sqrt(model.conditional_variance(0, x)) + std::sqrt(model.conditional_variance(1, x));
        return s * s;
    });
}

inline BoundReport scaled_report(std::string name, double factor, const McEstimate& integral, std::size_t k,
                                 std::size_t n_mc) {
    const McEstimate root = sqrt_of(integral);
    BoundReport r;
    r.name = std::move(name);
    r.value = factor * root.value;
    r.std_error = factor * root.std_error;
    r.scaling = Scaling::per_sqrt_t;
    r.inputs = {{"K", static_cast<double>(k)}, {"integral", integral.value}, {"n_mc", static_cast<double>(n_mc)}};
    return r;
}

}  // namespace detail

inline BoundReport minimax_lower_multi(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    const auto s = detail::sum_conditional_variances(model, n_mc, rng);
    return detail::scaled_report("minimax_lower_multi", 1.0 / 12.0, s, model.num_arms(), n_mc);
}

inline BoundReport minimax_lower_two(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    const auto s = detail::squared_sd_sum(model, n_mc, rng);
    return detail::scaled_report("minimax_lower_two", 1.0 / 12.0, s, 2, n_mc);
}

// The lower bound that applies to the model's arm count.
inline BoundReport minimax_lower(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    return model.num_arms() == 2 ? minimax_lower_two(model, n_mc, rng) : minimax_lower_multi(model, n_mc, rng);
}

inline BoundReport rs_aipw_upper(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    const std::size_t k = model.num_arms();
    if (k == 2) return detail::scaled_report("rs_aipw_upper", 1.0 / 2.2, detail::squared_sd_sum(model, n_mc, rng), k, n_mc);
    const double factor = static_cast<double>(k - 1) / 1.6;
    return detail::scaled_report("rs_aipw_upper", factor, detail::sum_conditional_variances(model, n_mc, rng), k, n_mc);
}

// Non-asymptotic upper bound on E[r_T] for a given CLT-rate constant A and
// moment exponent alpha. A is not estimated here; callers supply it.
//   K >= 3: ((K-1)/2.2) sqrt(4 S_sum / T) + A T^{-1/4} (log T)^{1 + 1/alpha}
//   K = 2:  ((K-1)/2.2) sqrt(2 S_two / T) + A T^{-1/4} (log T)^{1 + 1/alpha}
inline BoundReport nonasymptotic_upper(const LocationShiftBandit& model, std::size_t t, double a_const, double alpha,
                                       std::size_t n_mc, RandomSource& rng) {
    if (t < 2) throw DomainError("nonasymptotic_upper needs T >= 2");
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    const std::size_t k = model.num_arms();
    const double tt = static_cast<double>(t);
    const McEstimate integral =
        k == 2 ? detail::squared_sd_sum(model, n_mc, rng) : detail::sum_conditional_variances(model, n_mc, rng);
    const double mult = k == 2 ? 2.0 : 4.0;
    const double lead = static_cast<double>(k - 1) / 2.2 * std::sqrt(mult * integral.value / tt);
    const double rate = a_const * std::pow(tt, -0.25) * std::pow(std::log(tt), 1.0 + 1.0 / alpha);
    BoundReport r;
    r.name = "rs_aipw_nonasymptotic_upper";
    r.value = lead + rate;
    r.scaling = Scaling::absolute;
    r.inputs = {{"K", static_cast<double>(k)}, {"T", tt}, {"A", a_const}, {"alpha", alpha}, {"integral", integral.value}};
    return r;
}

// Gap at which the worst-case regret is attained: sqrt(V / (2T)).
inline double worst_case_gap_from_variance(double variance, std::size_t t) {
    if (t < 1) throw DomainError("worst_case_gap needs T >= 1");
    if (!(variance >= 0.0)) throw DomainError("variance must be non-negative");
    return std::sqrt(variance / (2.0 * static_cast<double>(t)));
}

inline double worst_case_gap(const LocationShiftBandit& model, std::size_t a, std::size_t b, std::size_t t,
                             std::size_t n_mc, RandomSource& rng) {
    return worst_case_gap_from_variance(optimal_variance_functional(model, a, b, n_mc, rng).value, t);
}

struct EfficiencyGain {
    McEstimate context_free;  // sqrt(sum_a Var(Y^a))
    McEstimate contextual;    // sqrt(sum_a E_x[sigma_a(x)^2])
    McEstimate squared_gap;   // sum_a Var_x(mu_a(x)) = context_free^2 - contextual^2, >= 0
};

// Both functionals on the same contexts. Var(Y^a) = E[sigma_a(x)^2] + Var_x(mu_a(x)).
inline EfficiencyGain efficiency_gain(const LocationShiftBandit& model, std::size_t n_mc, RandomSource& rng) {
    if (n_mc < 2) throw DomainError("efficiency_gain needs at least two draws");
    const std::size_t k = model.num_arms();
    RandomSource replay = rng;
    std::vector<long double> mean_mu(k, 0.0L);
    Context x(model.dimension());
    for (std::size_t i = 0; i < n_mc; ++i) {
        model.context().sample_into(rng, x);
        for (std::size_t a = 0; a < k; ++a) mean_mu[a] += model.conditional_mean(a, x);
    }
    for (auto& m : mean_mu) m /= static_cast<long double>(n_mc);

    struct Moments {
        long double sum{0.0L}, sum_sq{0.0L};
        void add(long double v) {
            sum += v;
            sum_sq += v * v;
        }
        McEstimate estimate(std::size_t n) const {
            const long double nn = static_cast<long double>(n);
            const long double mean = sum / nn;
            const long double var = std::max(0.0L, (sum_sq - sum * mean) / (nn - 1));
            return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / nn))};
        }
    } contextual, total, spread;

    for (std::size_t i = 0; i < n_mc; ++i) {
        model.context().sample_into(replay, x);
        long double v = 0.0L, s = 0.0L;
        for (std::size_t a = 0; a < k; ++a) {
            v += model.conditional_variance(a, x);
            const long double d = model.conditional_mean(a, x) - mean_mu[a];
            s += d * d;
        }
        contextual.add(v);
        spread.add(s);
        total.add(v + s);
    }
    EfficiencyGain g;
    g.context_free = detail::sqrt_of(total.estimate(n_mc));
    g.contextual = detail::sqrt_of(contextual.estimate(n_mc));
    g.squared_gap = spread.estimate(n_mc);
    return g;
}

}  // namespace bai
