#include "hcb/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace hcb {

namespace {
constexpr long kEnumerationBound = 1'000'000;
constexpr int kGenerationAttempts = 1000;
constexpr int kWitnessSampleCount = 10'000;
}  // namespace

long EnvironmentSpec::num_composite_actions() const {
    long n = 1;
    for (int k : actions_per_level) n *= k;
    return n;
}

long EnvironmentSpec::num_prefixes(int level) const {
    long n = 1;
    for (int h = 0; h <= level; ++h) n *= actions_per_level[h];
    return n;
}

long EnvironmentSpec::flat_action_index(const CompositeAction& a) const {
    long idx = 0;
    for (int h = 0; h < levels; ++h) idx = idx * actions_per_level[h] + a.indices[h];
    return idx;
}

long EnvironmentSpec::prefix_index(const CompositeAction& a, int level) const {
    long idx = 0;
    for (int h = 0; h <= level; ++h) idx = idx * actions_per_level[h] + a.indices[h];
    return idx;
}

CompositeAction EnvironmentSpec::action_from_flat(long flat) const {
    CompositeAction a;
    a.indices.assign(levels, 0);
    for (int h = levels - 1; h >= 0; --h) {
        a.indices[h] = static_cast<int>(flat % actions_per_level[h]);
        flat /= actions_per_level[h];
    }
    return a;
}

std::vector<int> EnvironmentSpec::allowed_at(int level, long parent_prefix) const {
    auto it = action_mask.find({level, parent_prefix});
    if (it != action_mask.end()) return it->second;
    std::vector<int> all(actions_per_level[level]);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

bool EnvironmentSpec::action_allowed(const CompositeAction& a) const {
    if (action_mask.empty()) return true;
    long parent = 0;
    for (int h = 0; h < levels; ++h) {
        auto allowed = allowed_at(h, parent);
        if (std::find(allowed.begin(), allowed.end(), a.indices[h]) == allowed.end()) return false;
        parent = parent * actions_per_level[h] + a.indices[h];
    }
    return true;
}

void EnvironmentSpec::validate() const {
    if (dim < 1) throw ConfigError("EnvironmentSpec: dim must be >= 1");
    if (levels < 1) throw ConfigError("EnvironmentSpec: levels must be >= 1");
    if (static_cast<int>(actions_per_level.size()) != levels)
        throw ConfigError("EnvironmentSpec: actions_per_level size must equal levels");
    for (int k : actions_per_level)
        if (k < 1) throw ConfigError("EnvironmentSpec: every level needs at least one action");
    if (static_cast<int>(thresholds.size()) != levels)
        throw ConfigError("EnvironmentSpec: thresholds size must equal levels");
    if (noise_sigma < 0.0) throw ConfigError("EnvironmentSpec: noise_sigma must be nonnegative");
    if (static_cast<long>(reward_params.size()) != num_composite_actions())
        throw ConfigError("EnvironmentSpec: reward_params must cover every composite action");
    if (static_cast<int>(cost_params.size()) != levels)
        throw ConfigError("EnvironmentSpec: cost_params must have one block per level");
    for (int h = 0; h < levels; ++h)
        if (static_cast<long>(cost_params[h].size()) != num_prefixes(h))
            throw ConfigError("EnvironmentSpec: cost_params must cover every prefix");
    for (const auto& th : reward_params)
        if (th.size() != dim || th.norm() > 1.0 + 1e-9)
            throw ConfigError("EnvironmentSpec: reward parameter outside the unit ball");
    for (const auto& block : cost_params)
        for (const auto& th : block)
            if (th.size() != dim || th.norm() > 1.0 + 1e-9)
                throw ConfigError("EnvironmentSpec: cost parameter outside the unit ball");
    if (context_distribution == ContextDistribution::FixedSet && fixed_contexts.empty())
        throw ConfigError("EnvironmentSpec: fixed-set distribution needs at least one context");
}

Eigen::VectorXd draw_context(const EnvironmentSpec& spec, CounterRng& rng) {
    switch (spec.context_distribution) {
        case ContextDistribution::UniformBall:
            return rng.unit_ball(spec.dim);
        case ContextDistribution::FixedSet: {
            const auto i = rng.uniform_index(spec.fixed_contexts.size());
            return spec.fixed_contexts[i];
        }
        case ContextDistribution::GaussianClipped: {
            Eigen::VectorXd x(spec.dim);
            for (int i = 0; i < spec.dim; ++i) x[i] = spec.gaussian_scale * rng.normal();
            const double norm = x.norm();
            if (norm > 1.0) x /= norm;
            return x;
        }
    }
    throw std::logic_error("unreachable");
}

namespace {

double shift(const EnvironmentSpec& spec, double v) {
    return spec.shift_to_unit_interval ? 0.5 * (v + 1.0) : v;
}

void check_action(const EnvironmentSpec& spec, const CompositeAction& a) {
    if (static_cast<int>(a.indices.size()) != spec.levels)
        throw ConfigError("CompositeAction: wrong number of levels");
    for (int h = 0; h < spec.levels; ++h)
        if (a.indices[h] < 0 || a.indices[h] >= spec.actions_per_level[h])
            throw ConfigError("CompositeAction: index out of range");
}

double draw_noise(const EnvironmentSpec& spec, CounterRng& rng) {
    if (spec.noise_sigma == 0.0) {
        // Keep the draw so noiseless and noisy runs consume the same stream.
        (void)rng.next_u64();
        return 0.0;
    }
    switch (spec.noise_kind) {
        case NoiseKind::Gaussian:
            return spec.noise_sigma * rng.normal();
        case NoiseKind::BoundedUniform:
            return spec.noise_sigma * std::sqrt(3.0) * rng.uniform(-1.0, 1.0);
    }
    throw std::logic_error("unreachable");
}

}  // namespace

double expected_reward_of(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                          const CompositeAction& action) {
    check_action(spec, action);
    return shift(spec, spec.reward_params[spec.flat_action_index(action)].dot(context));
}

double expected_cost_of(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                        const CompositeAction& action, int level) {
    check_action(spec, action);
    return shift(spec, spec.cost_params[level][spec.prefix_index(action, level)].dot(context));
}

bool action_feasible(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                     const CompositeAction& action) {
    for (int h = 0; h < spec.levels; ++h)
        if (expected_cost_of(spec, context, action, h) > spec.thresholds[h]) return false;
    return true;
}

RoundObservation pull(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                      const CompositeAction& action, CounterRng& rng) {
    check_action(spec, action);
    RoundObservation obs;
    obs.context = context;
    obs.expected_reward = expected_reward_of(spec, context, action);
    obs.reward = obs.expected_reward + draw_noise(spec, rng);
    obs.expected_costs.resize(spec.levels);
    obs.costs.resize(spec.levels);
    for (int h = 0; h < spec.levels; ++h) {
        obs.expected_costs[h] = expected_cost_of(spec, context, action, h);
        obs.costs[h] = obs.expected_costs[h] + draw_noise(spec, rng);
    }
    return obs;
}

std::optional<BestFeasible> best_feasible(const EnvironmentSpec& spec,
                                          const Eigen::VectorXd& context) {
    const long n = spec.num_composite_actions();
    if (n > kEnumerationBound)
        throw std::runtime_error("best_feasible: composite action count exceeds enumeration bound");
    std::optional<BestFeasible> best;
    for (long flat = 0; flat < n; ++flat) {
        CompositeAction a = spec.action_from_flat(flat);
        if (!spec.action_allowed(a)) continue;
        if (!action_feasible(spec, context, a)) continue;
        const double v = expected_reward_of(spec, context, a);
        // Flat order is lexicographic, so strict > keeps the smallest tuple on ties.
        if (!best || v > best->value) best = BestFeasible{a, v};
    }
    return best;
}

std::optional<BestFeasible> best_feasible_given_first(const EnvironmentSpec& spec,
                                                      const Eigen::VectorXd& context,
                                                      int first_action) {
    const long n = spec.num_composite_actions();
    if (n > kEnumerationBound)
        throw std::runtime_error("best_feasible: composite action count exceeds enumeration bound");
    std::optional<BestFeasible> best;
    for (long flat = 0; flat < n; ++flat) {
        CompositeAction a = spec.action_from_flat(flat);
        if (a.indices[0] != first_action) continue;
        if (!spec.action_allowed(a)) continue;
        if (!action_feasible(spec, context, a)) continue;
        const double v = expected_reward_of(spec, context, a);
        if (!best || v > best->value) best = BestFeasible{a, v};
    }
    return best;
}

namespace {

// Max over sampled contexts of min over actions of max over levels of
// (cost - threshold); <= 0 means every sampled context has a witness.
double worst_feasibility_deficit(const EnvironmentSpec& spec) {
    std::vector<Eigen::VectorXd> contexts;
    if (spec.context_distribution == ContextDistribution::FixedSet) {
        contexts = spec.fixed_contexts;
    } else {
        CounterRng rng(spec.seed ^ 0x5eedc0dec0ffeeULL, Stream::Generation, 1);
        contexts.reserve(kWitnessSampleCount);
        for (int i = 0; i < kWitnessSampleCount; ++i) contexts.push_back(draw_context(spec, rng));
    }
    const long n = spec.num_composite_actions();
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& x : contexts) {
        double best_action = std::numeric_limits<double>::infinity();
        for (long flat = 0; flat < n; ++flat) {
            CompositeAction a = spec.action_from_flat(flat);
            if (!spec.action_allowed(a)) continue;
            double worst_level = -std::numeric_limits<double>::infinity();
            for (int h = 0; h < spec.levels; ++h) {
                const double deficit = expected_cost_of(spec, x, a, h) - spec.thresholds[h];
                worst_level = std::max(worst_level, deficit);
            }
            best_action = std::min(best_action, worst_level);
            if (best_action <= 0.0) break;
        }
        worst = std::max(worst, best_action);
    }
    return worst;
}

}  // namespace

EnvironmentSpec generate_spec(int dim, int levels, const std::vector<int>& actions_per_level,
                              const std::vector<double>& thresholds, double noise_sigma,
                              std::uint64_t seed, ContextDistribution context_dist) {
    EnvironmentSpec spec;
    spec.dim = dim;
    spec.levels = levels;
    spec.actions_per_level = actions_per_level;
    spec.thresholds = thresholds;
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    spec.context_distribution = context_dist;
    for (double tau : thresholds)
        if (std::isnan(tau)) throw ConfigError("generate_spec: thresholds must not be NaN");

    CounterRng rng(seed, Stream::Generation, 0);

    spec.reward_params.clear();
    const long n_actions = [&] {
        long n = 1;
        for (int k : actions_per_level) {
            if (k < 1) throw ConfigError("generate_spec: action counts must be positive");
            n *= k;
        }
        return n;
    }();
    if (dim < 1 || levels < 1) throw ConfigError("generate_spec: dim and levels must be positive");
    if (static_cast<int>(actions_per_level.size()) != levels)
        throw ConfigError("generate_spec: actions_per_level size must equal levels");
    if (static_cast<int>(thresholds.size()) != levels)
        throw ConfigError("generate_spec: thresholds size must equal levels");

    for (long i = 0; i < n_actions; ++i) spec.reward_params.push_back(rng.unit_ball(dim));

    // Rejection-sample cost parameters until a feasibility witness exists on
    // the sampled context support; failing that, inflate thresholds minimally.
    double deficit = 0.0;
    for (int attempt = 0; attempt < kGenerationAttempts; ++attempt) {
        spec.cost_params.assign(levels, {});
        for (int h = 0; h < levels; ++h) {
            const long n_pref = spec.num_prefixes(h);
            for (long p = 0; p < n_pref; ++p) spec.cost_params[h].push_back(rng.unit_ball(dim));
        }
        deficit = worst_feasibility_deficit(spec);
        if (deficit <= 0.0) {
            spec.validate();
            return spec;
        }
    }
    if (!std::isfinite(deficit))
        throw std::runtime_error("generate_spec: feasibility repair failed after 1000 attempts");
    for (double& tau : spec.thresholds) tau += deficit + 1e-9;
    spec.validate();
    return spec;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vec_to_json(const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vec_from_json(const ordered_json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

ordered_json threshold_to_json(double tau) {
    if (std::isinf(tau)) return tau > 0 ? "inf" : "-inf";
    return tau;
}

double threshold_from_json(const ordered_json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ConfigError("spec_from_json: bad threshold string");
    }
    return j.get<double>();
}

}  // namespace

std::string spec_to_json(const EnvironmentSpec& spec) {
    ordered_json j;
    j["format"] = "hcb-environment-spec";
    j["version"] = 1;
    j["dim"] = spec.dim;
    j["levels"] = spec.levels;
    j["actions_per_level"] = spec.actions_per_level;
    j["thresholds"] = ordered_json::array();
    for (double tau : spec.thresholds) j["thresholds"].push_back(threshold_to_json(tau));
    j["noise_sigma"] = spec.noise_sigma;
    j["noise_kind"] = spec.noise_kind == NoiseKind::Gaussian ? "gaussian" : "bounded-uniform";
    switch (spec.context_distribution) {
        case ContextDistribution::UniformBall: j["context_distribution"] = "uniform-ball"; break;
        case ContextDistribution::FixedSet: j["context_distribution"] = "fixed-set"; break;
        case ContextDistribution::GaussianClipped: j["context_distribution"] = "gaussian-clipped"; break;
    }
    j["gaussian_scale"] = spec.gaussian_scale;
    j["fixed_contexts"] = ordered_json::array();
    for (const auto& v : spec.fixed_contexts) j["fixed_contexts"].push_back(vec_to_json(v));
    j["shift_to_unit_interval"] = spec.shift_to_unit_interval;
    j["seed"] = spec.seed;
    j["reward_params"] = ordered_json::array();
    for (const auto& v : spec.reward_params) j["reward_params"].push_back(vec_to_json(v));
    j["cost_params"] = ordered_json::array();
    for (const auto& block : spec.cost_params) {
        ordered_json b = ordered_json::array();
        for (const auto& v : block) b.push_back(vec_to_json(v));
        j["cost_params"].push_back(b);
    }
    j["action_mask"] = ordered_json::array();
    for (const auto& [key, allowed] : spec.action_mask) {
        ordered_json e;
        e["level"] = key.first;
        e["parent_prefix"] = key.second;
        e["allowed"] = allowed;
        j["action_mask"].push_back(e);
    }
    return j.dump(2) + "\n";
}

EnvironmentSpec spec_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    if (j.value("format", "") != "hcb-environment-spec")
        throw ConfigError("spec_from_json: not an environment spec document");
    if (j.value("version", 0) != 1) throw ConfigError("spec_from_json: unsupported version");
    EnvironmentSpec spec;
    spec.dim = j.at("dim").get<int>();
    spec.levels = j.at("levels").get<int>();
    spec.actions_per_level = j.at("actions_per_level").get<std::vector<int>>();
    for (const auto& t : j.at("thresholds")) spec.thresholds.push_back(threshold_from_json(t));
    spec.noise_sigma = j.at("noise_sigma").get<double>();
    spec.noise_kind = j.at("noise_kind").get<std::string>() == "gaussian"
                          ? NoiseKind::Gaussian
                          : NoiseKind::BoundedUniform;
    const auto dist = j.at("context_distribution").get<std::string>();
    if (dist == "uniform-ball") spec.context_distribution = ContextDistribution::UniformBall;
    else if (dist == "fixed-set") spec.context_distribution = ContextDistribution::FixedSet;
    else if (dist == "gaussian-clipped") spec.context_distribution = ContextDistribution::GaussianClipped;
    else throw ConfigError("spec_from_json: unknown context distribution");
    spec.gaussian_scale = j.at("gaussian_scale").get<double>();
    for (const auto& v : j.at("fixed_contexts")) spec.fixed_contexts.push_back(vec_from_json(v));
    spec.shift_to_unit_interval = j.at("shift_to_unit_interval").get<bool>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& v : j.at("reward_params")) spec.reward_params.push_back(vec_from_json(v));
    for (const auto& block : j.at("cost_params")) {
        std::vector<Eigen::VectorXd> b;
        for (const auto& v : block) b.push_back(vec_from_json(v));
        spec.cost_params.push_back(std::move(b));
    }
    for (const auto& e : j.at("action_mask")) {
        spec.action_mask[{e.at("level").get<int>(), e.at("parent_prefix").get<long>()}] =
            e.at("allowed").get<std::vector<int>>();
    }
    spec.validate();
    return spec;
}

}  // namespace hcb
