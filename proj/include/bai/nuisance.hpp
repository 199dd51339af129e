#pragma once
// Online k-nearest-neighbour estimates of the conditional mean, second moment
// and variance of each arm's outcome. All outputs are clipped:
//
//   mean            in [-C_mu, C_mu]
//   second moment   in [0, C_mu^2 + C_sigma2]
//   variance        in [1/C_sigma2, C_sigma2]
//
// An arm without samples predicts mean = second moment = 0, hence variance
// 1/C_sigma2 after clipping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bai/errors.hpp"
#include "bai/model.hpp"

namespace bai {

// Smallest k with k^3 >= n^2, i.e. ceil(n^(2/3)) without floating-point rounding.
inline std::size_t ceil_pow_two_thirds(std::size_t n) {
    if (n == 0) return 0;
    const double nn = static_cast<double>(n);
    auto k = static_cast<std::uint64_t>(std::llround(std::cbrt(nn * nn)));
    const auto n2 = static_cast<unsigned __int128>(n) * n;
    auto cube = [](std::uint64_t v) { return static_cast<unsigned __int128>(v) * v * v; };
    while (k > 0 && cube(k - 1) >= n2) --k;
    while (cube(k) < n2) ++k;
    return static_cast<std::size_t>(k);
}

struct NuisanceOptions {
    // 0 selects the ceil(n^(2/3)) schedule; otherwise a fixed neighbour count.
    std::size_t k_neighbors{0};
    double c_mu{20.0};
    double c_sigma2{10.0};
    // Ignore contexts: every sample of the arm is a neighbour (running moments).
    bool pooled{false};
};

struct NuisancePrediction {
    double mean{0.0};
    double second_moment{0.0};
    double variance{0.0};
};

class NuisanceEstimator {
public:
    NuisanceEstimator(std::size_t num_arms, std::size_t dim, NuisanceOptions opts = {})
        : dim_(dim), opts_(opts), arms_(num_arms) {
        if (num_arms == 0) throw ConfigError("nuisance estimator needs at least one arm");
        if (!(opts_.c_mu > 0.0) || !(opts_.c_sigma2 >= 1.0)) throw ConfigError("invalid clipping constants");
    }

    std::size_t num_arms() const noexcept { return arms_.size(); }
    std::size_t dimension() const noexcept { return dim_; }
    const NuisanceOptions& options() const noexcept { return opts_; }
    std::size_t store_size(std::size_t arm) const { return arms_.at(arm).outcomes.size(); }

    void update(std::size_t arm, std::span<const double> x, double y) {
        auto& s = arms_.at(arm);
        if (x.size() != dim_) throw DomainError("context has wrong dimension");
        s.contexts.insert(s.contexts.end(), x.begin(), x.end());
        s.outcomes.push_back(y);
        s.sum += y;
        s.sum_sq += static_cast<long double>(y) * y;
    }

    void update(const Observation& obs) { update(obs.arm, obs.context, obs.outcome); }

    std::size_t neighbors(std::size_t n) const noexcept {
        if (opts_.pooled) return n;
        const std::size_t k = opts_.k_neighbors == 0 ? ceil_pow_two_thirds(n) : opts_.k_neighbors;
        return std::min(k, n);
    }

    // One neighbour search serving all three outputs.
    NuisancePrediction predict(std::size_t arm, std::span<const double> x) const {
        const auto& s = arms_.at(arm);
        const std::size_t n = s.outcomes.size();
        long double sum = 0.0L;
        long double sum_sq = 0.0L;
        std::size_t k = neighbors(n);
        if (k == n) {
            sum = s.sum;
            sum_sq = s.sum_sq;
        } else {
            if (x.size() != dim_) throw DomainError("context has wrong dimension");
            scratch_.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double* c = &s.contexts[i * dim_];
                double d2 = 0.0;
                for (std::size_t d = 0; d < dim_; ++d) {
                    const double diff = c[d] - x[d];
                    d2 += diff * diff;
                }
                scratch_[i] = {d2, static_cast<std::uint32_t>(i)};
            }
            std::nth_element(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(k - 1),
                             scratch_.end());
            for (std::size_t j = 0; j < k; ++j) {
                const double y = s.outcomes[scratch_[j].second];
                sum += y;
                sum_sq += static_cast<long double>(y) * y;
            }
        }
        return finish(sum, sum_sq, k);
    }

    double predict_mean(std::size_t arm, std::span<const double> x) const { return predict(arm, x).mean; }
    double predict_second_moment(std::size_t arm, std::span<const double> x) const {
        return predict(arm, x).second_moment;
    }
    double predict_variance(std::size_t arm, std::span<const double> x) const { return predict(arm, x).variance; }

    double clip_variance(double v) const noexcept { return std::clamp(v, 1.0 / opts_.c_sigma2, opts_.c_sigma2); }

private:
    struct ArmStore {
        std::vector<double> contexts;  // row-major, dim_ per sample
        std::vector<double> outcomes;
        long double sum{0.0L};
        long double sum_sq{0.0L};
    };

    NuisancePrediction finish(long double sum, long double sum_sq, std::size_t k) const noexcept {
        NuisancePrediction p;
        if (k > 0) {
            const long double kk = static_cast<long double>(k);
            p.mean = std::clamp(static_cast<double>(sum / kk), -opts_.c_mu, opts_.c_mu);
            p.second_moment =
                std::clamp(static_cast<double>(sum_sq / kk), 0.0, opts_.c_mu * opts_.c_mu + opts_.c_sigma2);
        }
        p.variance = clip_variance(p.second_moment - p.mean * p.mean);
        return p;
    }

    std::size_t dim_;
    NuisanceOptions opts_;
    std::vector<ArmStore> arms_;
    // Reused distance buffer; makes concurrent predict() calls on one instance unsafe.
    mutable std::vector<std::pair<double, std::uint32_t>> scratch_;
};

}  // namespace bai
