#pragma once
// Experiment configuration files.
//
//   # comment
//   [model]
//   kind = synthetic          # synthetic | constant | explicit
//   K = 2
//   mu_sub = 0.9
//   variances = 5, 0.1
//
//   [model.arm.0]             # explicit models only, one section per arm
//   mean_coefs = 0.1, 0.2
//
//   [experiment]
//   T_max = 5000
//   checkpoints = 500, 1000, 5000
//
//   [strategies]
//   names = rs-aipw, uniform-eba
//
// Values are scalars or comma-separated lists. Unknown sections and keys are
// rejected with ConfigError.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bai/errors.hpp"
#include "bai/model.hpp"
#include "bai/strategies.hpp"

namespace bai {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

// Shortest representation that parses back to the same double.
inline std::string format_exact(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// One [section] of a config file. Every key must be read exactly once before
// finish(), otherwise it is reported as unknown.
class ConfigSection {
public:
    ConfigSection() = default;
    ConfigSection(std::string name, std::map<std::string, std::string> values)
        : name_(std::move(name)), values_(std::move(values)) {}

    const std::string& name() const noexcept { return name_; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> raw(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, std::string fallback) {
        auto v = raw(key);
        return v ? *v : std::move(fallback);
    }

    double get_double(const std::string& key, double fallback) {
        auto v = raw(key);
        return v ? parse_double(key, *v) : fallback;
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
        auto v = raw(key);
        return v ? parse_uint(key, *v) : fallback;
    }

    bool get_bool(const std::string& key, bool fallback) {
        auto v = raw(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw ConfigError(where(key) + "expected true or false, got '" + *v + "'");
    }

    std::optional<std::vector<double>> get_doubles(const std::string& key) {
        auto v = raw(key);
        if (!v) return std::nullopt;
        std::vector<double> out;
        for (const auto& item : detail::split_list(*v)) out.push_back(parse_double(key, item));
        return out;
    }

    std::optional<std::vector<std::uint64_t>> get_uints(const std::string& key) {
        auto v = raw(key);
        if (!v) return std::nullopt;
        std::vector<std::uint64_t> out;
        for (const auto& item : detail::split_list(*v)) out.push_back(parse_uint(key, item));
        return out;
    }

    std::optional<std::vector<std::string>> get_strings(const std::string& key) {
        auto v = raw(key);
        if (!v) return std::nullopt;
        return detail::split_list(*v);
    }

    void finish() const {
        for (const auto& [key, value] : values_)
            if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
    }

private:
    std::string where(const std::string& key) const { return "[" + name_ + "] " + key + ": "; }

    double parse_double(const std::string& key, std::string_view s) const {
        s = detail::trim(s);
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError(where(key) + "not a number: '" + std::string(s) + "'");
        return v;
    }

    std::uint64_t parse_uint(const std::string& key, std::string_view s) const {
        s = detail::trim(s);
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError(where(key) + "not a non-negative integer: '" + std::string(s) + "'");
        return v;
    }

    std::string name_;
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

class ConfigDocument {
public:
    static ConfigDocument parse(std::string_view text) {
        ConfigDocument doc;
        std::string current;
        std::size_t line_no = 0;
        std::istringstream in{std::string(text)};
        for (std::string line; std::getline(in, line);) {
            ++line_no;
            std::string_view l = line;
            if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
            l = detail::trim(l);
            if (l.empty()) continue;
            const std::string at = "line " + std::to_string(line_no) + ": ";
            if (l.front() == '[') {
                if (l.back() != ']') throw ConfigError(at + "unterminated section header");
                current = std::string(detail::trim(l.substr(1, l.size() - 2)));
                if (current.empty()) throw ConfigError(at + "empty section name");
                if (doc.sections_.count(current)) throw ConfigError(at + "duplicate section [" + current + "]");
                doc.sections_[current];
                doc.order_.push_back(current);
                continue;
            }
            const auto eq = l.find('=');
            if (eq == std::string_view::npos) throw ConfigError(at + "expected key = value");
            if (current.empty()) throw ConfigError(at + "key outside of any section");
            const std::string key(detail::trim(l.substr(0, eq)));
            std::string value(detail::trim(l.substr(eq + 1)));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
            if (key.empty()) throw ConfigError(at + "empty key");
            auto& sec = doc.sections_[current];
            if (sec.count(key)) throw ConfigError(at + "duplicate key '" + key + "'");
            sec[key] = std::move(value);
        }
        return doc;
    }

    bool has(const std::string& name) const { return sections_.count(name) != 0; }

    ConfigSection section(const std::string& name) const {
        const auto it = sections_.find(name);
        if (it == sections_.end()) return ConfigSection(name, {});
        return ConfigSection(name, it->second);
    }

    const std::vector<std::string>& section_names() const noexcept { return order_; }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------

struct ModelConfig {
    std::string kind{"synthetic"};
    std::size_t num_arms{2};
    std::size_t dimension{2};
    double mu_best{1.0};
    double mu_sub{0.8};
    std::uint64_t seed{0};
    std::optional<std::vector<double>> variances;  // pinned (synthetic) or required (constant)
    std::vector<double> means;                     // constant models
    ModelBounds bounds{};
    std::vector<double> context_mean{1.0, 1.0};
    std::vector<double> context_cov{1.0, 0.1, 0.1, 1.0};
    std::size_t moment_draws{100000};
    std::vector<ArmSpec> arms;  // explicit models
};

struct ExperimentConfig {
    ModelConfig model;
    std::size_t t_max{1000};
    std::vector<std::size_t> checkpoints;  // defaults to {t_max}
    std::size_t n_trials{100};
    std::vector<std::string> strategies;
    std::uint64_t master_seed{1};
    bool worst_case_mode{false};
    std::size_t parallel{1};
    std::size_t n_mc{1000000};
    StrategyOptions strategy_options{};

    void validate() const {
        if (n_trials < 1) throw ConfigError("n_trials must be at least 1");
        if (parallel < 1) throw ConfigError("parallel must be at least 1");
        if (n_mc < 2) throw ConfigError("n_mc must be at least 2");
        if (checkpoints.empty()) throw ConfigError("at least one checkpoint is required");
        const std::size_t k = model.kind == "explicit" ? model.arms.size() : model.num_arms;
        if (checkpoints.front() < k) throw ConfigError("first checkpoint must be at least K");
        for (std::size_t i = 1; i < checkpoints.size(); ++i)
            if (checkpoints[i] <= checkpoints[i - 1]) throw ConfigError("checkpoints must be strictly increasing");
        if (checkpoints.back() > t_max) throw ConfigError("checkpoints must not exceed T_max");
        for (const auto& s : strategies) {
            bool known = false;
            for (const auto& n : strategy_names()) known = known || n == s;
            if (!known) throw ConfigError("unknown strategy '" + s + "'");
        }
    }
};

inline LocationShiftBandit build_model(const ModelConfig& mc) {
    if (mc.kind == "explicit") {
        return {mc.arms, ContextDistribution(mc.context_mean, mc.context_cov), mc.bounds};
    }
    if (mc.kind == "constant") {
        if (!mc.variances) throw ConfigError("constant model needs variances");
        if (mc.means.size() != mc.num_arms || mc.variances->size() != mc.num_arms)
            throw ConfigError("constant model needs K means and K variances");
        return make_constant_model(mc.means, *mc.variances, ContextDistribution(mc.context_mean, mc.context_cov),
                                   mc.bounds);
    }
    if (mc.kind == "synthetic") {
        RandomSource rng(mc.seed);
        SyntheticOptions opts;
        opts.pinned_variances = mc.variances;
        opts.bounds = mc.bounds;
        opts.moment_draws = mc.moment_draws;
        opts.context_mean = mc.context_mean;
        opts.context_cov = mc.context_cov;
        return make_synthetic_model(mc.num_arms, mc.dimension, mc.mu_best, mc.mu_sub, rng, opts);
    }
    throw ConfigError("unknown model kind '" + mc.kind + "'");
}

namespace detail {

inline ModelConfig read_model(const ConfigDocument& doc) {
    ModelConfig mc;
    auto sec = doc.section("model");
    mc.kind = sec.get_string("kind", mc.kind);
    mc.bounds.c_mu = sec.get_double("C_mu", mc.bounds.c_mu);
    mc.bounds.c_sigma2 = sec.get_double("C_sigma2", mc.bounds.c_sigma2);
    if (auto v = sec.get_doubles("context_mean")) mc.context_mean = *v;
    if (auto v = sec.get_doubles("context_cov")) mc.context_cov = *v;
    mc.dimension = sec.get_uint("D", mc.context_mean.size());
    if (mc.dimension != mc.context_mean.size()) throw ConfigError("[model] D must match context_mean");
    mc.seed = sec.get_uint("seed", mc.seed);

    if (mc.kind == "explicit") {
        mc.num_arms = sec.get_uint("K", 0);
        sec.finish();
        for (std::size_t a = 0;; ++a) {
            const std::string name = "model.arm." + std::to_string(a);
            if (!doc.has(name)) break;
            auto arm_sec = doc.section(name);
            ArmSpec arm;
            arm.marginal_mean = arm_sec.get_double("marginal_mean", 0.0);
            arm.marginal_variance = arm_sec.get_double("marginal_variance", 1.0);
            arm.mean_fn.intercept = arm_sec.get_double("mean_intercept", 0.0);
            arm.mean_fn.coefs = arm_sec.get_doubles("mean_coefs").value_or(std::vector<double>(mc.dimension, 0.0));
            arm.var_fn.intercept = arm_sec.get_double("var_intercept", arm.marginal_variance);
            arm.var_fn.coefs = arm_sec.get_doubles("var_coefs").value_or(std::vector<double>(mc.dimension, 0.0));
            if (arm_sec.get_string("noise", "gaussian") != "gaussian") throw ConfigError("only gaussian noise is supported");
            arm_sec.finish();
            mc.arms.push_back(std::move(arm));
        }
        if (mc.num_arms != 0 && mc.num_arms != mc.arms.size())
            throw ConfigError("[model] K does not match the number of [model.arm.N] sections");
        mc.num_arms = mc.arms.size();
        return mc;
    }

    mc.num_arms = sec.get_uint("K", mc.num_arms);
    mc.variances = sec.get_doubles("variances");
    if (mc.kind == "constant") {
        mc.means = sec.get_doubles("means").value_or(std::vector<double>{});
    } else {
        mc.mu_best = sec.get_double("mu_best", mc.mu_best);
        mc.mu_sub = sec.get_double("mu_sub", mc.mu_sub);
        mc.moment_draws = sec.get_uint("moment_draws", mc.moment_draws);
    }
    sec.finish();
    return mc;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::string_view text) {
    const auto doc = ConfigDocument::parse(text);
    for (const auto& name : doc.section_names()) {
        const bool arm_section = name.rfind("model.arm.", 0) == 0;
        if (name != "model" && name != "experiment" && name != "strategies" && !arm_section)
            throw ConfigError("unknown section [" + name + "]");
    }
    ExperimentConfig cfg;
    cfg.model = detail::read_model(doc);
    for (const auto& name : doc.section_names())
        if (name.rfind("model.arm.", 0) == 0 && cfg.model.kind != "explicit")
            throw ConfigError("[" + name + "] is only valid for explicit models");

    auto ex = doc.section("experiment");
    cfg.t_max = ex.get_uint("T_max", cfg.t_max);
    if (auto v = ex.get_uints("checkpoints")) cfg.checkpoints.assign(v->begin(), v->end());
    if (cfg.checkpoints.empty()) cfg.checkpoints = {cfg.t_max};
    cfg.n_trials = ex.get_uint("n_trials", cfg.n_trials);
    cfg.master_seed = ex.get_uint("master_seed", cfg.master_seed);
    cfg.worst_case_mode = ex.get_bool("worst_case_mode", cfg.worst_case_mode);
    cfg.parallel = ex.get_uint("parallel", cfg.parallel);
    cfg.n_mc = ex.get_uint("n_mc", cfg.n_mc);
    ex.finish();

    auto st = doc.section("strategies");
    cfg.strategies = st.get_strings("names").value_or(std::vector<std::string>{});
    cfg.strategy_options.ugapeb_exploration = st.get_double("ugapeb_c", cfg.strategy_options.ugapeb_exploration);
    cfg.strategy_options.k_neighbors = st.get_uint("k_neighbors", cfg.strategy_options.k_neighbors);
    st.finish();

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

// [model] + [model.arm.N] sections describing `model` exactly (kind = explicit).
inline std::string model_to_config(const LocationShiftBandit& model, std::optional<std::uint64_t> seed = std::nullopt) {
    using detail::format_exact;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_exact(v[i]);
        return s;
    };
    std::ostringstream out;
    out << "[model]\n";
    out << "kind = explicit\n";
    out << "K = " << model.num_arms() << "\n";
    out << "D = " << model.dimension() << "\n";
    if (seed) out << "seed = " << *seed << "\n";
    out << "C_mu = " << format_exact(model.bounds().c_mu) << "\n";
    out << "C_sigma2 = " << format_exact(model.bounds().c_sigma2) << "\n";
    out << "context_mean = " << list(model.context().mean()) << "\n";
    out << "context_cov = " << list(model.context().covariance()) << "\n";
    for (std::size_t a = 0; a < model.num_arms(); ++a) {
        const auto& arm = model.arm(a);
        out << "\n[model.arm." << a << "]\n";
        out << "marginal_mean = " << format_exact(arm.marginal_mean) << "\n";
        out << "marginal_variance = " << format_exact(arm.marginal_variance) << "\n";
        out << "mean_intercept = " << format_exact(arm.mean_fn.intercept) << "\n";
        out << "mean_coefs = " << list(arm.mean_fn.coefs) << "\n";
        out << "var_intercept = " << format_exact(arm.var_fn.intercept) << "\n";
        out << "var_coefs = " << list(arm.var_fn.coefs) << "\n";
        out << "noise = gaussian\n";
    }
    return out.str();
}

inline LocationShiftBandit model_from_config(std::string_view text) {
    const auto doc = ConfigDocument::parse(text);
    return build_model(detail::read_model(doc));
}

}  // namespace bai
