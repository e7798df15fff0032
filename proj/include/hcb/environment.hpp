#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hcb/linear_model.hpp"
#include "hcb/rng.hpp"

namespace hcb {

enum class ContextDistribution { UniformBall, FixedSet, GaussianClipped };
enum class NoiseKind { Gaussian, BoundedUniform };

// The per-level choices of one round. indices[h] indexes into A_h.
struct CompositeAction {
    std::vector<int> indices;

    bool operator==(const CompositeAction& o) const { return indices == o.indices; }
    bool operator<(const CompositeAction& o) const { return indices < o.indices; }
};

// Ground-truth hierarchical constrained linear bandit instance. Reward
// parameters are keyed by the full composite action; cost parameters at
// level h by the length-(h+1) prefix. Immutable after generation.
struct EnvironmentSpec {
    int dim = 1;
    int levels = 1;
    std::vector<int> actions_per_level;
    std::vector<Eigen::VectorXd> reward_params;               // by flat full-action index
    std::vector<std::vector<Eigen::VectorXd>> cost_params;    // [level][flat prefix index]
    std::vector<double> thresholds;
    double noise_sigma = 0.0;
    NoiseKind noise_kind = NoiseKind::Gaussian;
    ContextDistribution context_distribution = ContextDistribution::UniformBall;
    double gaussian_scale = 0.5;                              // gaussian-clipped only
    std::vector<Eigen::VectorXd> fixed_contexts;              // fixed-set only
    bool shift_to_unit_interval = false;                      // map means from [-1,1] to [0,1]
    std::uint64_t seed = 0;
    // Optional context-dependent action mask: (level, parent prefix index) ->
    // allowed action indices at that level. Absent entry means all allowed.
    std::map<std::pair<int, long>, std::vector<int>> action_mask;

    long num_composite_actions() const;
    long num_prefixes(int level) const;                       // prefixes of length level+1
    long flat_action_index(const CompositeAction& a) const;
    long prefix_index(const CompositeAction& a, int level) const;
    CompositeAction action_from_flat(long flat) const;
    std::vector<int> allowed_at(int level, long parent_prefix) const;
    bool action_allowed(const CompositeAction& a) const;
    void validate() const;
};

struct RoundObservation {
    Eigen::VectorXd context;
    double reward = 0.0;
    std::vector<double> costs;
    double expected_reward = 0.0;
    std::vector<double> expected_costs;
};

EnvironmentSpec generate_spec(int dim, int levels, const std::vector<int>& actions_per_level,
                              const std::vector<double>& thresholds, double noise_sigma,
                              std::uint64_t seed,
                              ContextDistribution context_dist = ContextDistribution::UniformBall);

Eigen::VectorXd draw_context(const EnvironmentSpec& spec, CounterRng& rng);

RoundObservation pull(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                      const CompositeAction& action, CounterRng& rng);

double expected_reward_of(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                          const CompositeAction& action);
double expected_cost_of(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                        const CompositeAction& action, int level);
bool action_feasible(const EnvironmentSpec& spec, const Eigen::VectorXd& context,
                     const CompositeAction& action);

struct BestFeasible {
    CompositeAction action;
    double value = 0.0;
};

// Exhaustive constrained optimum; nullopt when no action is feasible.
// Ties broken by lexicographically smallest index tuple.
std::optional<BestFeasible> best_feasible(const EnvironmentSpec& spec,
                                          const Eigen::VectorXd& context);

// Constrained optimum restricted to actions sharing the given level-0 choice.
std::optional<BestFeasible> best_feasible_given_first(const EnvironmentSpec& spec,
                                                      const Eigen::VectorXd& context,
                                                      int first_action);

// Canonical, versioned, human-readable serialization.
std::string spec_to_json(const EnvironmentSpec& spec);
EnvironmentSpec spec_from_json(const std::string& text);

}  // namespace hcb
