#pragma once
// Fixed-budget BAI strategies: a sampling rule (select_arm / observe) and a
// recommendation rule (recommend), driven by the harness one round at a time:
//
//   for t = 1..T:  d = s.select_arm(t, x_t, rng);  s.observe({t, x_t, d.arm, y_t, d.propensity});
//   s.recommend();
//
// Arms are 0-based; rounds are 1-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bai/allocation.hpp"
#include "bai/errors.hpp"
#include "bai/estimators.hpp"
#include "bai/model.hpp"
#include "bai/nuisance.hpp"
#include "bai/random.hpp"

namespace bai {

struct Draw {
    std::size_t arm{0};
    double propensity{1.0};
};

namespace detail {

// argmax with ties to the lowest index
template <class Range>
std::size_t argmax_first(const Range& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < std::size(v); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace detail

class Strategy {
public:
    Strategy(std::size_t num_arms, std::size_t budget) : k_(num_arms), budget_(budget) {
        if (k_ < 2) throw ConfigError("a strategy needs at least two arms");
        if (budget_ < k_) throw ConfigError("budget T must be at least K");
    }
    virtual ~Strategy() = default;
    Strategy(const Strategy&) = delete;
    Strategy& operator=(const Strategy&) = delete;
    Strategy(Strategy&&) = default;
    Strategy& operator=(Strategy&&) = default;

    virtual std::string_view name() const = 0;

    // Chooses the arm for round t. May be called repeatedly for the same round
    // before observe(); the last call wins.
    virtual Draw select_arm(std::size_t t, std::span<const double> x, RandomSource& rng) = 0;

    virtual void observe(const Observation& obs) = 0;

    // Recommendation from the observations so far. Does not mutate state.
    virtual std::size_t current_recommendation() const = 0;

    // Final recommendation; only valid once all T rounds were observed.
    std::size_t recommend() const {
        if (observed_ != budget_) throw ProtocolError("recommend() called before the budget was spent");
        return current_recommendation();
    }

    // AIPW contributions phi^a_t of the most recent round; empty when the
    // strategy has no AIPW estimator.
    virtual std::span<const double> last_aipw_terms() const { return {}; }

    std::size_t num_arms() const noexcept { return k_; }
    std::size_t budget() const noexcept { return budget_; }
    std::size_t rounds_observed() const noexcept { return observed_; }

protected:
    void check_select(std::size_t t) const {
        if (t == 0 || t > budget_) throw ProtocolError("round outside [1, T]");
        if (t != observed_ + 1) throw ProtocolError("select_arm called out of order");
    }

    void check_observe(const Observation& obs) const {
        if (obs.round != observed_ + 1) throw ProtocolError("observation round mismatch");
        if (obs.round > budget_) throw ProtocolError("observation beyond the budget");
        if (obs.arm >= k_) throw std::out_of_range("observed arm out of range");
    }

    void advance() noexcept { ++observed_; }

private:
    std::size_t k_;
    std::size_t budget_;
    std::size_t observed_{0};
};

// ---------------------------------------------------------------------------
// RS-AIPW and its variants

struct RsAipwOptions {
    NuisanceOptions nuisance{};
    // Use the allocation re-estimated from the nuisance state at t-1 in the
    // AIPW denominator instead of the recorded propensity (the DR variant).
    bool reestimate_weights{false};
    // Non-null: true mu_a(x) and w*(x) replace the estimates and the
    // initialization rounds are skipped. Must outlive the strategy.
    const LocationShiftBandit* oracle{nullptr};
};

class RsAipw : public Strategy {
public:
    RsAipw(std::size_t num_arms, std::size_t dim, std::size_t budget, RsAipwOptions opts = {},
           std::string name = "rs-aipw")
        : Strategy(num_arms, budget),
          opts_(opts),
          name_(std::move(name)),
          nuisance_(num_arms, dim, opts.nuisance),
          sums_(num_arms, 0.0L),
          phi_(num_arms, 0.0) {
        pending_.mean.resize(num_arms);
        pending_.allocation.resize(num_arms);
        reestimated_.resize(num_arms);
    }

    std::string_view name() const override { return name_; }

    Draw select_arm(std::size_t t, std::span<const double> x, RandomSource& rng) override {
        check_select(t);
        const std::size_t k = num_arms();
        const bool init = opts_.oracle == nullptr && t <= k;
        if (opts_.oracle != nullptr) {
            for (std::size_t a = 0; a < k; ++a) pending_.mean[a] = opts_.oracle->conditional_mean(a, x);
            pending_.allocation = oracle_allocation(*opts_.oracle, x).probs;
            reestimated_ = pending_.allocation;
        } else {
            std::vector<double> var(k);
            for (std::size_t a = 0; a < k; ++a) {
                const auto p = nuisance_.predict(a, x);
                pending_.mean[a] = p.mean;
                var[a] = p.variance;
            }
            reestimated_ = target_allocation(var).probs;
            if (init) {
                std::fill(pending_.mean.begin(), pending_.mean.end(), 0.0);
                std::fill(pending_.allocation.begin(), pending_.allocation.end(), 1.0 / static_cast<double>(k));
            } else {
                pending_.allocation = reestimated_;
            }
        }
        Draw d;
        if (init) {
            d.arm = t - 1;
        } else {
            d.arm = select_by_cumulative(pending_.allocation, rng.uniform());
        }
        d.propensity = pending_.allocation[d.arm];
        pending_round_ = t;
        pending_draw_ = d;
        return d;
    }

    void observe(const Observation& obs) override {
        check_observe(obs);
        if (pending_round_ != obs.round) throw ProtocolError("observe() without a matching select_arm()");
        if (obs.arm != pending_draw_.arm || obs.propensity != pending_draw_.propensity)
            throw ProtocolError("observation does not match the drawn arm");
        const auto& weights = opts_.reestimate_weights ? reestimated_ : pending_.allocation;
        for (std::size_t a = 0; a < num_arms(); ++a) {
            phi_[a] = aipw_term(obs.arm == a, obs.outcome, pending_.mean[a], weights[a]);
            sums_[a] += phi_[a];
        }
        // Only after the AIPW terms: round t's nuisances must not see round t.
        if (opts_.oracle == nullptr) nuisance_.update(obs);
        pending_round_ = 0;
        advance();
    }

    std::size_t current_recommendation() const override { return detail::argmax_first(sums_); }

    std::span<const double> last_aipw_terms() const override { return phi_; }

    std::vector<double> aipw_estimates() const {
        std::vector<double> out(num_arms(), 0.0);
        if (rounds_observed() == 0) return out;
        for (std::size_t a = 0; a < num_arms(); ++a)
            out[a] = static_cast<double>(sums_[a] / static_cast<long double>(rounds_observed()));
        return out;
    }

    // Nuisance values of the round chosen by the last select_arm().
    const RoundNuisance& pending_nuisance() const noexcept { return pending_; }
    std::span<const double> reestimated_allocation() const noexcept { return reestimated_; }
    const NuisanceEstimator& nuisance() const noexcept { return nuisance_; }

private:
    RsAipwOptions opts_;
    std::string name_;
    NuisanceEstimator nuisance_;
    std::vector<long double> sums_;
    std::vector<double> phi_;
    RoundNuisance pending_;
    std::vector<double> reestimated_;
    std::size_t pending_round_{0};
    Draw pending_draw_{};
};

// ---------------------------------------------------------------------------
// Uniform sampling + empirical best arm. Round-robin, so after K*m rounds every
// arm has exactly m samples; the recorded propensity is 1/K.

class UniformEba : public Strategy {
public:
    UniformEba(std::size_t num_arms, std::size_t budget)
        : Strategy(num_arms, budget), sums_(num_arms, 0.0L), counts_(num_arms, 0) {}

    std::string_view name() const override { return "uniform-eba"; }

    Draw select_arm(std::size_t t, std::span<const double>, RandomSource&) override {
        check_select(t);
        return {(t - 1) % num_arms(), 1.0 / static_cast<double>(num_arms())};
    }

    void observe(const Observation& obs) override {
        check_observe(obs);
        sums_[obs.arm] += obs.outcome;
        ++counts_[obs.arm];
        advance();
    }

    std::vector<double> means() const {
        std::vector<double> m(num_arms(), -std::numeric_limits<double>::infinity());
        for (std::size_t a = 0; a < num_arms(); ++a)
            if (counts_[a] > 0) m[a] = static_cast<double>(sums_[a] / static_cast<long double>(counts_[a]));
        return m;
    }

    std::size_t current_recommendation() const override { return detail::argmax_first(means()); }

private:
    std::vector<long double> sums_;
    std::vector<std::size_t> counts_;
};

// ---------------------------------------------------------------------------
// Successive Rejects (Audibert, Bubeck and Munos 2010).
//
//   logbar(K) = 1/2 + sum_{i=2}^K 1/i
//   n_k = ceil( (T - K) / (logbar(K) (K + 1 - k)) ),  k = 1..K-1
//
// In phase k every surviving arm is topped up to n_k pulls, then the survivor
// with the lowest empirical mean is dropped (ties drop the higher index).
// Rounds left after the last phase go to the final survivor.

class SuccessiveRejects : public Strategy {
public:
    SuccessiveRejects(std::size_t num_arms, std::size_t budget)
        : Strategy(num_arms, budget),
          schedule_(phase_schedule(num_arms, budget)),
          sums_(num_arms, 0.0L),
          counts_(num_arms, 0),
          active_(num_arms, true) {
        close_finished_phases();
    }

    static double log_bar(std::size_t k) {
        double v = 0.5;
        for (std::size_t i = 2; i <= k; ++i) v += 1.0 / static_cast<double>(i);
        return v;
    }

    static std::vector<std::size_t> phase_schedule(std::size_t k, std::size_t budget) {
        if (budget < k) throw ConfigError("successive rejects needs T >= K");
        const long double lb = log_bar(k);
        std::vector<std::size_t> n(k - 1);
        for (std::size_t phase = 1; phase < k; ++phase) {
            const long double v = static_cast<long double>(budget - k) / (lb * static_cast<long double>(k + 1 - phase));
            // Guard against representation error pushing an exact integer over.
            n[phase - 1] = static_cast<std::size_t>(std::ceil(v - 1e-12L));
        }
        return n;
    }

    std::string_view name() const override { return "successive-rejects"; }

    Draw select_arm(std::size_t t, std::span<const double>, RandomSource&) override {
        check_select(t);
        if (phase_ >= schedule_.size()) return {survivor(), 1.0};
        const std::size_t target = schedule_[phase_];
        std::size_t pick = num_arms();
        for (std::size_t a = 0; a < num_arms(); ++a) {
            if (!active_[a] || counts_[a] >= target) continue;
            if (pick == num_arms() || counts_[a] < counts_[pick]) pick = a;
        }
        return {pick, 1.0};
    }

    void observe(const Observation& obs) override {
        check_observe(obs);
        sums_[obs.arm] += obs.outcome;
        ++counts_[obs.arm];
        advance();
        close_finished_phases();
    }

    // Mid-phase: best empirical mean among the surviving arms.
    std::size_t current_recommendation() const override {
        std::size_t best = num_arms();
        for (std::size_t a = 0; a < num_arms(); ++a) {
            if (!active_[a]) continue;
            if (best == num_arms() || mean(a) > mean(best)) best = a;
        }
        return best;
    }

    const std::vector<std::size_t>& schedule() const noexcept { return schedule_; }
    std::size_t active_count() const {
        return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
    }
    std::size_t pulls(std::size_t a) const { return counts_.at(a); }

private:
    double mean(std::size_t a) const {
        return counts_[a] == 0 ? -std::numeric_limits<double>::infinity()
                               : static_cast<double>(sums_[a] / static_cast<long double>(counts_[a]));
    }

    std::size_t survivor() const {
        for (std::size_t a = 0; a < num_arms(); ++a)
            if (active_[a]) return a;
        return 0;
    }

    void close_finished_phases() {
        while (phase_ < schedule_.size()) {
            const std::size_t target = schedule_[phase_];
            for (std::size_t a = 0; a < num_arms(); ++a)
                if (active_[a] && counts_[a] < target) return;
            std::size_t worst = num_arms();
            for (std::size_t a = 0; a < num_arms(); ++a) {
                if (!active_[a]) continue;
                if (worst == num_arms() || mean(a) <= mean(worst)) worst = a;
            }
            active_[worst] = false;
            ++phase_;
        }
    }

    std::vector<std::size_t> schedule_;
    std::vector<long double> sums_;
    std::vector<std::size_t> counts_;
    std::vector<bool> active_;
    std::size_t phase_{0};
};

// ---------------------------------------------------------------------------
// UGapEb (Gabillon, Ghavamzadeh and Lazaric 2012), single best arm.
//
//   beta_a = sqrt(c b^2 (T - K) / (H N_a)),   H = sum_a max(gap_a, eps)^-2
//   B_k    = max_{i != k} (mu_i + beta_i) - (mu_k - beta_k)
//
// J = argmin_k B_k, u = argmax_{j != J} (mu_j + beta_j); pull whichever of
// {J, u} has fewer samples. Recommends argmin_k B_k.

struct UgapebOptions {
    double exploration{0.5};  // c
    double range{1.0};        // b
    double gap_floor{1e-3};   // eps
};

class UgapEb : public Strategy {
public:
    UgapEb(std::size_t num_arms, std::size_t budget, UgapebOptions opts = {})
        : Strategy(num_arms, budget), opts_(opts), sums_(num_arms, 0.0L), counts_(num_arms, 0) {
        if (!(opts_.exploration > 0.0) || !(opts_.range > 0.0)) throw ConfigError("UGapEb constants must be positive");
    }

    std::string_view name() const override { return "ugapeb"; }

    Draw select_arm(std::size_t t, std::span<const double>, RandomSource&) override {
        check_select(t);
        if (t <= num_arms()) return {t - 1, 1.0};
        const auto idx = indices();
        const std::size_t j = idx.leader;
        const std::size_t u = idx.challenger;
        std::size_t pick;
        if (counts_[j] != counts_[u])
            pick = counts_[j] < counts_[u] ? j : u;
        else
            pick = std::min(j, u);
        return {pick, 1.0};
    }

    void observe(const Observation& obs) override {
        check_observe(obs);
        sums_[obs.arm] += obs.outcome;
        ++counts_[obs.arm];
        advance();
    }

    std::size_t current_recommendation() const override { return indices().leader; }

    std::vector<double> radii() const { return indices().beta; }

private:
    struct Indices {
        std::vector<double> beta;
        std::size_t leader{0};
        std::size_t challenger{0};
    };

    Indices indices() const {
        const std::size_t k = num_arms();
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<double> mu(k, 0.0);
        for (std::size_t a = 0; a < k; ++a)
            if (counts_[a] > 0) mu[a] = static_cast<double>(sums_[a] / static_cast<long double>(counts_[a]));

        const std::size_t best = detail::argmax_first(mu);
        double second = -inf;
        for (std::size_t a = 0; a < k; ++a)
            if (a != best) second = std::max(second, mu[a]);
        long double h = 0.0L;
        for (std::size_t a = 0; a < k; ++a) {
            const double gap = a == best ? mu[best] - second : mu[best] - mu[a];
            const double g = std::max(gap, opts_.gap_floor);
            h += 1.0L / (static_cast<long double>(g) * g);
        }

        Indices out;
        out.beta.resize(k);
        const double budget_term =
            opts_.exploration * opts_.range * opts_.range * static_cast<double>(budget() - k) / static_cast<double>(h);
        for (std::size_t a = 0; a < k; ++a)
            out.beta[a] = counts_[a] == 0 ? inf : std::sqrt(budget_term / static_cast<double>(counts_[a]));

        double best_b = inf;
        for (std::size_t c = 0; c < k; ++c) {
            double max_upper = -inf;
            for (std::size_t i = 0; i < k; ++i)
                if (i != c) max_upper = std::max(max_upper, mu[i] + out.beta[i]);
            const double b = max_upper - (mu[c] - out.beta[c]);
            if (c == 0 || b < best_b) {
                best_b = b;
                out.leader = c;
            }
        }
        double best_u = -inf;
        bool first = true;
        for (std::size_t i = 0; i < k; ++i) {
            if (i == out.leader) continue;
            const double upper = mu[i] + out.beta[i];
            if (first || upper > best_u) {
                best_u = upper;
                out.challenger = i;
                first = false;
            }
        }
        return out;
    }

    UgapebOptions opts_;
    std::vector<long double> sums_;
    std::vector<std::size_t> counts_;
};

// ---------------------------------------------------------------------------

struct StrategyOptions {
    std::size_t k_neighbors{0};  // 0: ceil(n^(2/3)) schedule
    double ugapeb_exploration{0.5};
};

inline const std::vector<std::string>& strategy_names() {
    static const std::vector<std::string> names{"rs-aipw",     "rs-dr",  "rs-aipw-nocontext", "uniform-eba",
                                                "successive-rejects", "ugapeb", "rs-aipw-oracle"};
    return names;
}

// `model` must outlive the returned strategy (the oracle variant keeps a pointer).
inline std::unique_ptr<Strategy> make_strategy(std::string_view name, const LocationShiftBandit& model,
                                               std::size_t budget, const StrategyOptions& opts = {}) {
    const std::size_t k = model.num_arms();
    const std::size_t dim = model.dimension();
    if (budget < k) throw ConfigError("budget T must be at least K");
    RsAipwOptions rs;
    rs.nuisance.k_neighbors = opts.k_neighbors;
    rs.nuisance.c_mu = model.bounds().c_mu;
    rs.nuisance.c_sigma2 = model.bounds().c_sigma2;
    if (name == "rs-aipw") return std::make_unique<RsAipw>(k, dim, budget, rs, "rs-aipw");
    if (name == "rs-dr") {
        rs.reestimate_weights = true;
        return std::make_unique<RsAipw>(k, dim, budget, rs, "rs-dr");
    }
    if (name == "rs-aipw-nocontext") {
        rs.nuisance.pooled = true;
        return std::make_unique<RsAipw>(k, dim, budget, rs, "rs-aipw-nocontext");
    }
    if (name == "rs-aipw-oracle") {
        rs.oracle = &model;
        return std::make_unique<RsAipw>(k, dim, budget, rs, "rs-aipw-oracle");
    }
    if (name == "uniform-eba") return std::make_unique<UniformEba>(k, budget);
    if (name == "successive-rejects") return std::make_unique<SuccessiveRejects>(k, budget);
    if (name == "ugapeb") {
        double max_sd = 0.0;
        for (const auto& arm : model.arms()) max_sd = std::max(max_sd, std::sqrt(arm.marginal_variance));
        return std::make_unique<UgapEb>(k, budget, UgapebOptions{opts.ugapeb_exploration, 4.0 * max_sd, 1e-3});
    }
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

}  // namespace bai
