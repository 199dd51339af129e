#pragma once
// Post-hoc estimators over a recorded history, and the asymptotic variance
// functional of the AIPW gap estimator.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "bai/allocation.hpp"
#include "bai/errors.hpp"
#include "bai/model.hpp"

namespace bai {

// Per-round AIPW contribution for one arm:
//   1[A_t = a] (Y_t - mu_hat) / w_hat + mu_hat
// Strategies and the post-hoc estimator both go through this function.
inline double aipw_term(bool pulled, double outcome, double mu_hat, double propensity) {
    return pulled ? (outcome - mu_hat) / propensity + mu_hat : mu_hat;
}

// Nuisance values used in one round, evaluated at that round's context from
// strictly earlier data.
struct RoundNuisance {
    std::vector<double> mean;        // mu_hat^a_t(x_t)
    std::vector<double> allocation;  // w_hat_t(a | x_t)
};

struct EstimateReport {
    std::vector<double> estimates;
    // Sample variance of phi^a_t - phi^b_t across rounds; symmetric, zero diagonal.
    std::vector<std::vector<double>> pairwise_variance;
    std::size_t sample_size{0};
};

namespace detail {

inline std::vector<std::vector<double>> aipw_terms(std::span<const Observation> history,
                                                   std::span<const RoundNuisance> trace) {
    if (history.size() != trace.size()) throw ProtocolError("nuisance trace must align with the history");
    if (history.empty()) throw ProtocolError("empty history");
    const std::size_t k = trace.front().mean.size();
    std::vector<std::vector<double>> phi(history.size(), std::vector<double>(k));
    for (std::size_t t = 0; t < history.size(); ++t) {
        const auto& r = trace[t];
        if (r.mean.size() != k || r.allocation.size() != k) throw ProtocolError("ragged nuisance trace");
        if (history[t].arm >= k) throw std::out_of_range("observed arm out of range");
        for (std::size_t a = 0; a < k; ++a) {
            if (!(r.allocation[a] > 0.0)) throw DomainError("propensities must be positive");
            phi[t][a] = aipw_term(history[t].arm == a, history[t].outcome, r.mean[a], r.allocation[a]);
        }
    }
    return phi;
}

}  // namespace detail

inline std::vector<double> aipw_estimate(std::span<const Observation> history, std::span<const RoundNuisance> trace) {
    const auto phi = detail::aipw_terms(history, trace);
    const std::size_t k = phi.front().size();
    std::vector<double> out(k);
    for (std::size_t a = 0; a < k; ++a) {
        long double s = 0.0L;
        for (const auto& row : phi) s += row[a];
        out[a] = static_cast<double>(s / static_cast<long double>(phi.size()));
    }
    return out;
}

inline EstimateReport estimate_report(std::span<const Observation> history, std::span<const RoundNuisance> trace) {
    const auto phi = detail::aipw_terms(history, trace);
    const std::size_t k = phi.front().size();
    const std::size_t n = phi.size();
    EstimateReport rep;
    rep.sample_size = n;
    rep.estimates.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        long double s = 0.0L;
        for (const auto& row : phi) s += row[a];
        rep.estimates[a] = static_cast<double>(s / static_cast<long double>(n));
    }
    rep.pairwise_variance.assign(k, std::vector<double>(k, 0.0));
    if (n < 2) return rep;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            const long double mean = static_cast<long double>(rep.estimates[a]) - rep.estimates[b];
            long double ss = 0.0L;
            for (const auto& row : phi) {
                const long double d = static_cast<long double>(row[a]) - row[b] - mean;
                ss += d * d;
            }
            const double v = static_cast<double>(ss / static_cast<long double>(n - 1));
            rep.pairwise_variance[a][b] = rep.pairwise_variance[b][a] = v;
        }
    }
    return rep;
}

// Per-arm sample means. Arms never pulled report -infinity so they rank last.
inline std::vector<double> sample_mean_estimate(std::span<const Observation> history, std::size_t k) {
    std::vector<long double> sum(k, 0.0L);
    std::vector<std::size_t> count(k, 0);
    for (const auto& obs : history) {
        if (obs.arm >= k) throw std::out_of_range("observed arm out of range");
        sum[obs.arm] += obs.outcome;
        ++count[obs.arm];
    }
    std::vector<double> out(k, -std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < k; ++a)
        if (count[a] > 0) out[a] = static_cast<double>(sum[a] / static_cast<long double>(count[a]));
    return out;
}

// V^{a,b}(w) = E_x[ sigma_a(x)^2 / w(a|x) + sigma_b(x)^2 / w(b|x) + (Delta^{a,b}(x) - Delta^{a,b})^2 ]
// by Monte Carlo over n_mc contexts. `alloc` maps a context to an AllocationRatio.
template <class AllocFn>
McEstimate variance_functional(const LocationShiftBandit& model, AllocFn&& alloc, std::size_t a, std::size_t b,
                               std::size_t n_mc, RandomSource& rng) {
    if (a == b) throw DomainError("variance functional needs two distinct arms");
    if (a >= model.num_arms() || b >= model.num_arms()) throw std::out_of_range("arm index out of range");
    const double gap = model.arm(a).marginal_mean - model.arm(b).marginal_mean;
    return context_expectation(model.context(), n_mc, rng, [&](std::span<const double> x) {
        const AllocationRatio w = alloc(x);
        const double dx = model.conditional_mean(a, x) - model.conditional_mean(b, x) - gap;
        return model.conditional_variance(a, x) / w[a] + model.conditional_variance(b, x) / w[b] + dx * dx;
    });
}

// V^{a,b*}: the functional at the target allocation w*.
inline McEstimate optimal_variance_functional(const LocationShiftBandit& model, std::size_t a, std::size_t b,
                                              std::size_t n_mc, RandomSource& rng) {
    return variance_functional(
        model, [&](std::span<const double> x) { return oracle_allocation(model, x); }, a, b, n_mc, rng);
}

}  // namespace bai
