#pragma once

#include <string>
#include <vector>

#include "hcb/environment.hpp"
#include "hcb/linear_model.hpp"
#include "hcb/rng.hpp"

namespace hcb {

// Cost screen used during selection. OptimisticLcb is the literal
// estimate - bonus <= tau rule; ConservativeUcb screens with
// estimate + bonus <= tau and is the default.
enum class ConstraintMode { OptimisticLcb, ConservativeUcb };

// What to do when the screen empties a level's action set.
enum class FallbackPolicy { LeastLcbCost, AbstainUniform };

enum class AgentKind { HcUcb, UniformRandom, EpsilonGreedy, UnconstrainedUcb, Oracle };

struct AgentConfig {
    AgentKind kind = AgentKind::HcUcb;
    double delta = 0.1;
    double lambda = 1.0;
    double s_bound = 1.0;
    double sigma_factor = 1.0;
    ConstraintMode constraint_mode = ConstraintMode::ConservativeUcb;
    FallbackPolicy fallback_policy = FallbackPolicy::LeastLcbCost;
    double epsilon = 0.1;
    // Split delta as delta/(H+1) across the reward model and the H cost levels.
    bool split_delta = false;

    void validate() const;
};

struct Decision {
    CompositeAction action;
    std::vector<double> per_level_ucb_reward;
    std::vector<double> per_level_cost_bound;
    bool fallback_used = false;
};

// One agent trajectory: a reward model per composite action, a cost model per
// (level, prefix), and the selection logic for HC-UCB and the baselines.
// Single writer per instance.
class AgentState {
public:
    // `structure` provides dimensions, action counts, and the mask. Only the
    // oracle kind reads the true parameters; constructing an oracle therefore
    // requires with_truth = true.
    AgentState(const EnvironmentSpec& structure, const AgentConfig& cfg, bool with_truth = false);

    Decision select(const Eigen::VectorXd& context, const std::vector<double>& thresholds,
                    CounterRng& rng) const;

    void update(const Eigen::VectorXd& context, const Decision& decision,
                const RoundObservation& obs);

    long round() const { return round_; }
    const AgentConfig& config() const { return cfg_; }
    const LinearModel& reward_model(long flat_action) const { return reward_models_[flat_action]; }
    const LinearModel& cost_model(int level, long prefix) const { return cost_models_[level][prefix]; }
    long num_reward_models() const { return static_cast<long>(reward_models_.size()); }

    double reward_beta(const LinearModel& m) const;
    double cost_beta(const LinearModel& m) const;

private:
    Decision select_ucb(const Eigen::VectorXd& context, const std::vector<double>& thresholds,
                        CounterRng& rng, bool reward_bonus) const;
    Decision select_uniform(CounterRng& rng) const;
    Decision select_oracle(const Eigen::VectorXd& context) const;
    double completion_ucb(const Eigen::VectorXd& context, int level, long prefix_flat) const;

    EnvironmentSpec structure_;
    AgentConfig cfg_;
    ConfidenceConfig reward_conf_;
    ConfidenceConfig cost_conf_;
    std::vector<LinearModel> reward_models_;
    std::vector<std::vector<LinearModel>> cost_models_;
    long round_ = 0;
};

AgentKind agent_kind_from_string(const std::string& s);
std::string agent_kind_to_string(AgentKind k);

}  // namespace hcb
