#pragma once
// Location-shift contextual bandit environments.
//
// A model is K arms sharing one context distribution. Each arm's outcome given a
// context x is Gaussian with mean mu_a(x) and variance sigma_a(x)^2. Both
// conditional functions are parametric, so a model serializes exactly:
//
//   f(x) = intercept + sum_d coef_d * x_d^2
//
// and the model clamps mu_a(x) into [-C_mu, C_mu] and sigma_a(x)^2 into
// [1/C_sigma2, C_sigma2].

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bai/errors.hpp"
#include "bai/random.hpp"

namespace bai {

using Context = std::vector<double>;

// One round of bandit feedback. `propensity` is the probability with which
// `arm` was drawn given the context and the history before this round.
struct Observation {
    std::size_t round{1};  // 1-based
    Context context;
    std::size_t arm{0};
    double outcome{0.0};
    double propensity{1.0};
};

struct McEstimate {
    double value{0.0};
    double std_error{0.0};
};

// Gaussian context distribution N(mean, cov).
class ContextDistribution {
public:
    enum class Family { gaussian };

    ContextDistribution(std::vector<double> mean, std::vector<double> covariance)
        : mean_(std::move(mean)), cov_(std::move(covariance)) {
        const std::size_t d = mean_.size();
        if (d == 0) throw ConfigError("context dimension must be positive");
        if (cov_.size() != d * d) throw ConfigError("context covariance must be D x D");
        Eigen::MatrixXd m(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) m(i, j) = cov_[i * d + j];
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("context covariance must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success) throw ConfigError("context covariance must be positive-definite");
        const Eigen::MatrixXd l = llt.matrixL();
        chol_.resize(d * d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) chol_[i * d + j] = l(i, j);
    }

    static ContextDistribution standard(std::size_t dim) {
        std::vector<double> cov(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) cov[i * dim + i] = 1.0;
        return {std::vector<double>(dim, 0.0), std::move(cov)};
    }

    std::size_t dimension() const noexcept { return mean_.size(); }
    Family family() const noexcept { return Family::gaussian; }
    const std::vector<double>& mean() const noexcept { return mean_; }
    const std::vector<double>& covariance() const noexcept { return cov_; }

    void sample_into(RandomSource& rng, std::span<double> out) const {
        const std::size_t d = dimension();
        double z[16];
        std::vector<double> zbuf;
        double* zp = z;
        if (d > 16) {
            zbuf.resize(d);
            zp = zbuf.data();
        }
        for (std::size_t i = 0; i < d; ++i) zp[i] = rng.normal();
        for (std::size_t i = 0; i < d; ++i) {
            double v = mean_[i];
            for (std::size_t j = 0; j <= i; ++j) v += chol_[i * d + j] * zp[j];
            out[i] = v;
        }
    }

    Context sample(RandomSource& rng) const {
        Context x(dimension());
        sample_into(rng, x);
        return x;
    }

private:
    std::vector<double> mean_;
    std::vector<double> cov_;
    std::vector<double> chol_;  // lower factor, row-major
};

// intercept + sum_d coefs[d] * x[d]^2
struct QuadraticResponse {
    double intercept{0.0};
    std::vector<double> coefs;

    double operator()(std::span<const double> x) const noexcept {
        double v = intercept;
        for (std::size_t d = 0; d < coefs.size(); ++d) v += coefs[d] * x[d] * x[d];
        return v;
    }

    static QuadraticResponse constant(double value, std::size_t dim) {
        return {value, std::vector<double>(dim, 0.0)};
    }

    bool operator==(const QuadraticResponse&) const = default;
};

struct ArmSpec {
    enum class Noise { gaussian };

    double marginal_mean{0.0};
    // Target of E_x[sigma_a(x)^2]; the generator matches the conditional variance to it.
    double marginal_variance{1.0};
    QuadraticResponse mean_fn;
    QuadraticResponse var_fn;
    Noise noise{Noise::gaussian};

    bool operator==(const ArmSpec&) const = default;
};

struct ModelBounds {
    double c_mu{20.0};
    double c_sigma2{10.0};
};

class LocationShiftBandit {
public:
    LocationShiftBandit(std::vector<ArmSpec> arms, ContextDistribution context, ModelBounds bounds = {})
        : arms_(std::move(arms)), context_(std::move(context)), bounds_(bounds) {
        if (arms_.size() < 2) throw ConfigError("a bandit model needs at least two arms");
        if (!(bounds_.c_mu > 0.0)) throw ConfigError("C_mu must be positive");
        if (!(bounds_.c_sigma2 >= 1.0)) throw ConfigError("C_sigma2 must be at least 1");
        const std::size_t d = context_.dimension();
        for (const auto& arm : arms_) {
            if (arm.mean_fn.coefs.size() != d || arm.var_fn.coefs.size() != d)
                throw ConfigError("arm response coefficients must match the context dimension");
            if (!(arm.marginal_variance > 0.0)) throw ConfigError("arm marginal variance must be positive");
            if (!std::isfinite(arm.marginal_mean)) throw ConfigError("arm marginal mean must be finite");
        }
    }

    std::size_t num_arms() const noexcept { return arms_.size(); }
    std::size_t dimension() const noexcept { return context_.dimension(); }
    const ArmSpec& arm(std::size_t a) const { return arms_.at(a); }
    const std::vector<ArmSpec>& arms() const noexcept { return arms_; }
    const ContextDistribution& context() const noexcept { return context_; }
    const ModelBounds& bounds() const noexcept { return bounds_; }

    double conditional_mean(std::size_t a, std::span<const double> x) const {
        return std::clamp(arms_.at(a).mean_fn(x), -bounds_.c_mu, bounds_.c_mu);
    }

    double conditional_variance(std::size_t a, std::span<const double> x) const {
        return std::clamp(arms_.at(a).var_fn(x), 1.0 / bounds_.c_sigma2, bounds_.c_sigma2);
    }

    std::vector<double> marginal_means() const {
        std::vector<double> m;
        m.reserve(arms_.size());
        for (const auto& arm : arms_) m.push_back(arm.marginal_mean);
        return m;
    }

    bool operator==(const LocationShiftBandit& o) const {
        return arms_ == o.arms_ && context_.mean() == o.context_.mean() &&
               context_.covariance() == o.context_.covariance() && bounds_.c_mu == o.bounds_.c_mu &&
               bounds_.c_sigma2 == o.bounds_.c_sigma2;
    }

private:
    std::vector<ArmSpec> arms_;
    ContextDistribution context_;
    ModelBounds bounds_;
};

inline Context sample_context(const LocationShiftBandit& model, RandomSource& rng) {
    return model.context().sample(rng);
}

inline double sample_outcome(const LocationShiftBandit& model, std::size_t arm, std::span<const double> x,
                             RandomSource& rng) {
    if (arm >= model.num_arms()) throw std::out_of_range("arm index out of range");
    if (x.size() != model.dimension()) throw DomainError("context has wrong dimension");
    return rng.normal(model.conditional_mean(arm, x), std::sqrt(model.conditional_variance(arm, x)));
}

// argmax of marginal means; lowest index on ties.
inline std::size_t best_arm(const LocationShiftBandit& model) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < model.num_arms(); ++a)
        if (model.arm(a).marginal_mean > model.arm(best).marginal_mean) best = a;
    return best;
}

inline double simple_regret(const LocationShiftBandit& model, std::size_t recommended) {
    if (recommended >= model.num_arms()) throw std::out_of_range("recommended arm out of range");
    return model.arm(best_arm(model)).marginal_mean - model.arm(recommended).marginal_mean;
}

// Monte Carlo expectation of f(x) over the model's context distribution.
template <class F>
McEstimate context_expectation(const ContextDistribution& dist, std::size_t n, RandomSource& rng, F&& f) {
    if (n == 0) throw DomainError("Monte Carlo sample size must be positive");
    Context x(dist.dimension());
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        dist.sample_into(rng, x);
        const long double v = f(std::span<const double>(x));
        sum += v;
        sum_sq += v * v;
    }
    const long double mean = sum / static_cast<long double>(n);
    double se = 0.0;
    if (n > 1) {
        const long double var = std::max(0.0L, (sum_sq - sum * mean) / static_cast<long double>(n - 1));
        se = static_cast<double>(std::sqrt(var / static_cast<long double>(n)));
    }
    return {static_cast<double>(mean), se};
}

// Law of total variance for one arm: Var(Y) = E[sigma(x)^2] + Var(mu(x)).
struct MomentSummary {
    McEstimate mean_of_mean;       // E_x[mu_a(x)]
    double variance_of_mean{0.0};  // Var_x[mu_a(x)]
    McEstimate mean_of_variance;   // E_x[sigma_a(x)^2]
    double total_variance() const noexcept { return mean_of_variance.value + variance_of_mean; }
};

inline MomentSummary moment_summary(const LocationShiftBandit& model, std::size_t arm, std::size_t n,
                                    RandomSource& rng) {
    if (n < 2) throw DomainError("moment summary needs at least two draws");
    Context x(model.dimension());
    long double sm = 0, smm = 0, sv = 0, svv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        model.context().sample_into(rng, x);
        const long double m = model.conditional_mean(arm, x);
        const long double v = model.conditional_variance(arm, x);
        sm += m;
        smm += m * m;
        sv += v;
        svv += v * v;
    }
    const long double nn = static_cast<long double>(n);
    const long double mm = sm / nn;
    const long double mv = sv / nn;
    const long double var_m = std::max(0.0L, (smm - sm * mm) / (nn - 1));
    const long double var_v = std::max(0.0L, (svv - sv * mv) / (nn - 1));
    MomentSummary s;
    s.mean_of_mean = {static_cast<double>(mm), static_cast<double>(std::sqrt(var_m / nn))};
    s.variance_of_mean = static_cast<double>(var_m);
    s.mean_of_variance = {static_cast<double>(mv), static_cast<double>(std::sqrt(var_v / nn))};
    return s;
}

// Arms whose conditional mean and variance do not depend on the context.
inline LocationShiftBandit make_constant_model(const std::vector<double>& means, const std::vector<double>& variances,
                                               ContextDistribution context, ModelBounds bounds = {}) {
    if (means.size() != variances.size()) throw ConfigError("means and variances must have the same length");
    const std::size_t d = context.dimension();
    std::vector<ArmSpec> arms;
    for (std::size_t a = 0; a < means.size(); ++a) {
        if (!(variances[a] > 0.0)) throw ConfigError("arm variance must be positive");
        arms.push_back({means[a], variances[a], QuadraticResponse::constant(means[a], d),
                        QuadraticResponse::constant(variances[a], d)});
    }
    return {std::move(arms), std::move(context), bounds};
}

// Same model with arm's mean function shifted by delta everywhere.
inline LocationShiftBandit with_mean_shift(const LocationShiftBandit& model, std::size_t arm, double delta) {
    auto arms = model.arms();
    arms.at(arm).marginal_mean += delta;
    arms.at(arm).mean_fn.intercept += delta;
    return {std::move(arms), model.context(), model.bounds()};
}

struct SyntheticOptions {
    // When set, replaces the Uniform[0.1, 5] variance draws.
    std::optional<std::vector<double>> pinned_variances;
    ModelBounds bounds{};
    std::size_t moment_draws{100000};
    std::vector<double> context_mean{1.0, 1.0};
    std::vector<double> context_cov{1.0, 0.1, 0.1, 1.0};
};

namespace detail {

// Finds s >= 0 with mean_i clamp(s * q_i, lo, hi) == target. The left side is
// continuous and nondecreasing in s, so bisection on a bracketing interval works.
inline double solve_clamped_scale(const std::vector<double>& q, double target, double lo, double hi) {
    auto avg = [&](double s) {
        long double acc = 0.0L;
        for (double v : q) acc += std::clamp(s * v, lo, hi);
        return static_cast<double>(acc / static_cast<long double>(q.size()));
    };
    double s_lo = 0.0;
    double s_hi = 1.0;
    while (avg(s_hi) < target) {
        s_hi *= 2.0;
        if (s_hi > 1e300) throw ConfigError("cannot match target moment within clipping bounds");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (s_lo + s_hi);
        if (avg(mid) < target)
            s_lo = mid;
        else
            s_hi = mid;
    }
    return 0.5 * (s_lo + s_hi);
}

}  // namespace detail

// Synthetic design with D = 2 Gaussian contexts:
//   mu_a(x)      = (theta_1 x_1^2 + theta_2 x_2^2) / c_mu^a
//   sigma_a(x)^2 = (theta_1 x_1^2 + theta_2 x_2^2) / c_sigma^a
// theta ~ Uniform[0,1]^2 shared by all arms; the normalizers are fitted on
// `moment_draws` contexts so E_x[mu_a(x)] = mu^a and E_x[sigma_a(x)^2] = (sigma^a)^2.
// Arm 0 is the best arm with mean mu_best, the rest have mean mu_sub.
inline LocationShiftBandit make_synthetic_model(std::size_t k, std::size_t dim, double mu_best, double mu_sub,
                                                RandomSource& rng, const SyntheticOptions& opts = {}) {
    if (k < 2) throw ConfigError("synthetic model needs K >= 2");
    if (dim != 2) throw ConfigError("synthetic model is defined for D = 2 only");
    if (!(mu_best > mu_sub)) throw ConfigError("mu_best must exceed mu_sub");
    const ModelBounds bounds = opts.bounds;
    const double var_lo = 1.0 / bounds.c_sigma2;
    const double var_hi = bounds.c_sigma2;

    const double theta1 = rng.uniform();
    const double theta2 = rng.uniform();

    std::vector<double> variances;
    if (opts.pinned_variances) {
        variances = *opts.pinned_variances;
        if (variances.size() != k) throw ConfigError("pinned variances must have K entries");
    } else {
        for (std::size_t a = 0; a < k; ++a) variances.push_back(rng.uniform(0.1, 5.0));
    }
    for (double v : variances)
        if (!(v > 0.0) || v >= var_hi) throw ConfigError("arm variance must lie in (0, C_sigma2)");

    ContextDistribution context(opts.context_mean, opts.context_cov);
    if (context.dimension() != dim) throw ConfigError("context mean must have D entries");

    std::vector<double> q(opts.moment_draws);
    Context x(dim);
    for (auto& v : q) {
        context.sample_into(rng, x);
        v = theta1 * x[0] * x[0] + theta2 * x[1] * x[1];
    }

    std::vector<ArmSpec> arms;
    for (std::size_t a = 0; a < k; ++a) {
        const double mu = a == 0 ? mu_best : mu_sub;
        ArmSpec arm;
        arm.marginal_mean = mu;
        arm.marginal_variance = variances[a];
        if (mu == 0.0) {
            arm.mean_fn = QuadraticResponse::constant(0.0, dim);
        } else {
            // Clamping is symmetric, so a negative mean is the mirrored positive fit.
            const double s = detail::solve_clamped_scale(q, std::abs(mu), -bounds.c_mu, bounds.c_mu);
            const double sign = mu > 0.0 ? 1.0 : -1.0;
            arm.mean_fn = {0.0, {sign * s * theta1, sign * s * theta2}};
        }
        if (variances[a] <= var_lo) {
            arm.var_fn = QuadraticResponse::constant(variances[a], dim);
        } else {
            const double s = detail::solve_clamped_scale(q, variances[a], var_lo, var_hi);
            arm.var_fn = {0.0, {s * theta1, s * theta2}};
        }
        arms.push_back(std::move(arm));
    }
    return {std::move(arms), std::move(context), bounds};
}

}  // namespace bai
