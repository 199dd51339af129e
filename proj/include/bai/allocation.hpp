#pragma once
// Target allocation ratio w*(a|x) as a function of the conditional variances:
//
//   K = 2:  w*(a|x) = sigma_a(x) / (sigma_1(x) + sigma_2(x))
//   K >= 3: w*(a|x) = sigma_a(x)^2 / sum_b sigma_b(x)^2

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bai/errors.hpp"
#include "bai/nuisance.hpp"

namespace bai {

struct AllocationRatio {
    std::vector<double> probs;

    std::size_t size() const noexcept { return probs.size(); }
    double operator[](std::size_t a) const { return probs[a]; }
};

inline AllocationRatio target_allocation(std::span<const double> variances) {
    const std::size_t k = variances.size();
    if (k < 2) throw DomainError("target allocation needs at least two arms");
    std::vector<double> weights(k);
    long double total = 0.0L;
    for (std::size_t a = 0; a < k; ++a) {
        if (!(variances[a] > 0.0) || !std::isfinite(variances[a]))
            throw DomainError("variances must be positive and finite");
        weights[a] = k == 2 ? std::sqrt(variances[a]) : variances[a];
        total += weights[a];
    }
    AllocationRatio out;
    out.probs.resize(k);
    for (std::size_t a = 0; a < k; ++a) out.probs[a] = static_cast<double>(weights[a] / total);
    return out;
}

inline AllocationRatio target_allocation(const std::vector<double>& variances) {
    return target_allocation(std::span<const double>(variances));
}

// target_allocation over the clipped variance estimates at x.
inline AllocationRatio estimated_allocation(const NuisanceEstimator& est, std::size_t k, std::span<const double> x) {
    if (k < 2) throw DomainError("estimated allocation needs at least two arms");
    std::vector<double> v(k);
    for (std::size_t a = 0; a < k; ++a) v[a] = est.predict_variance(a, x);
    return target_allocation(v);
}

// Smallest entry any estimated allocation can produce given the variance clipping.
inline double allocation_floor(std::size_t k, double c_sigma2) {
    return (1.0 / c_sigma2) / (static_cast<double>(k) * c_sigma2);
}

inline bool allocation_lower_bound_floor(const AllocationRatio& w, std::size_t k, double c_sigma2) {
    const double floor = allocation_floor(k, c_sigma2) - 1e-12;
    for (double p : w.probs)
        if (p < floor) return false;
    return true;
}

// Inverse-CDF draw: arm a is chosen when gamma lies in (sum_{b<a} w_b, sum_{b<=a} w_b].
// Rounding slack above the last cumulative sum falls to the last arm.
inline std::size_t select_by_cumulative(std::span<const double> probs, double gamma) {
    double cum = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a) {
        cum += probs[a];
        if (gamma <= cum) return a;
    }
    return probs.size() - 1;
}

// w*(.|x) from the model's true conditional variances.
inline AllocationRatio oracle_allocation(const LocationShiftBandit& model, std::span<const double> x) {
    std::vector<double> v(model.num_arms());
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = model.conditional_variance(a, x);
    return target_allocation(v);
}

// Context-independent allocation; used for the uniform reference design.
inline AllocationRatio uniform_allocation(std::size_t k) {
    return {std::vector<double>(k, 1.0 / static_cast<double>(k))};
}

}  // namespace bai
