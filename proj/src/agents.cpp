#include "hcb/agents.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hcb {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void AgentConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("agent.delta must lie strictly in (0,1)");
    if (!(lambda > 0.0)) throw ConfigError("agent: lambda must be positive");
    if (!(s_bound > 0.0)) throw ConfigError("agent: s_bound must be positive");
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("agent: epsilon must lie in [0,1]");
}

AgentState::AgentState(const EnvironmentSpec& structure, const AgentConfig& cfg, bool with_truth)
    : structure_(structure), cfg_(cfg) {
    cfg_.validate();
    structure_.validate();
    if (cfg_.kind == AgentKind::Oracle && !with_truth)
        throw ConfigError("agent: oracle kind requires access to the true spec");

    const double delta_eff =
        cfg_.split_delta ? cfg_.delta / static_cast<double>(structure_.levels + 1) : cfg_.delta;
    reward_conf_ = {delta_eff, cfg_.s_bound, cfg_.lambda, structure_.dim, cfg_.sigma_factor};
    cost_conf_ = reward_conf_;

    const long n_actions = structure_.num_composite_actions();
    reward_models_.reserve(n_actions);
    for (long i = 0; i < n_actions; ++i) reward_models_.emplace_back(structure_.dim, cfg_.lambda);
    cost_models_.reserve(structure_.levels);
    for (int h = 0; h < structure_.levels; ++h) {
        std::vector<LinearModel> block;
        const long n_pref = structure_.num_prefixes(h);
        block.reserve(n_pref);
        for (long p = 0; p < n_pref; ++p) block.emplace_back(structure_.dim, cfg_.lambda);
        cost_models_.push_back(std::move(block));
    }
}

double AgentState::reward_beta(const LinearModel& m) const {
    return compute_beta(reward_conf_, m.count());
}

double AgentState::cost_beta(const LinearModel& m) const {
    return compute_beta(cost_conf_, m.count());
}

// Reward UCB of the best mask-allowed completion of the given prefix.
// -inf when the mask leaves no completion.
double AgentState::completion_ucb(const Eigen::VectorXd& context, int level,
                                  long prefix_flat) const {
    long suffix_count = 1;
    for (int h = level + 1; h < structure_.levels; ++h) suffix_count *= structure_.actions_per_level[h];
    double best = -kInf;
    for (long s = 0; s < suffix_count; ++s) {
        const long flat = prefix_flat * suffix_count + s;
        if (!structure_.action_mask.empty() &&
            !structure_.action_allowed(structure_.action_from_flat(flat)))
            continue;
        const auto& m = reward_models_[flat];
        const double ucb = m.predict(context) + reward_beta(m) * m.mahalanobis_bonus(context);
        best = std::max(best, ucb);
    }
    return best;
}

Decision AgentState::select_ucb(const Eigen::VectorXd& context,
                                const std::vector<double>& thresholds, CounterRng& rng,
                                bool reward_bonus) const {
    Decision d;
    d.per_level_ucb_reward.assign(structure_.levels, 0.0);
    d.per_level_cost_bound.assign(structure_.levels, 0.0);

    long parent = 0;
    for (int h = 0; h < structure_.levels; ++h) {
        const auto allowed = structure_.allowed_at(h, parent);
        if (allowed.empty()) throw std::runtime_error("agent: empty action set at a level");
        const int radix = structure_.actions_per_level[h];

        int best_a = -1;
        double best_score = -kInf;
        double best_bound = 0.0;
        for (int a : allowed) {
            const long pidx = parent * radix + a;
            const auto& cm = cost_models_[h][pidx];
            const double est = cm.predict(context);
            const double bonus = cost_beta(cm) * cm.mahalanobis_bonus(context);
            const double bound =
                cfg_.constraint_mode == ConstraintMode::ConservativeUcb ? est + bonus : est - bonus;
            if (bound > thresholds[h]) continue;
            double score = completion_ucb(context, h, pidx);
            if (score == -kInf) continue;
            if (!reward_bonus) {
                // Greedy exploitation scores by the plain estimate of the
                // best completion instead of its UCB.
                long suffix_count = 1;
                for (int g = h + 1; g < structure_.levels; ++g)
                    suffix_count *= structure_.actions_per_level[g];
                score = -kInf;
                for (long s = 0; s < suffix_count; ++s)
                    score = std::max(score, reward_models_[pidx * suffix_count + s].predict(context));
            }
            if (best_a < 0 || score > best_score) {
                best_a = a;
                best_score = score;
                best_bound = bound;
            }
        }

        if (best_a < 0) {
            d.fallback_used = true;
            if (cfg_.fallback_policy == FallbackPolicy::LeastLcbCost) {
                double best_lcb = kInf;
                for (int a : allowed) {
                    const long pidx = parent * radix + a;
                    const auto& cm = cost_models_[h][pidx];
                    const double lcb =
                        cm.predict(context) - cost_beta(cm) * cm.mahalanobis_bonus(context);
                    if (lcb < best_lcb) {
                        best_lcb = lcb;
                        best_a = a;
                    }
                }
                best_bound = best_lcb;
            } else {
                best_a = allowed[rng.uniform_index(allowed.size())];
                const auto& cm = cost_models_[h][parent * radix + best_a];
                best_bound = cm.predict(context) - cost_beta(cm) * cm.mahalanobis_bonus(context);
            }
            best_score = completion_ucb(context, h, parent * radix + best_a);
        }

        d.action.indices.push_back(best_a);
        d.per_level_ucb_reward[h] = best_score;
        d.per_level_cost_bound[h] = best_bound;
        parent = parent * radix + best_a;
    }
    return d;
}

Decision AgentState::select_uniform(CounterRng& rng) const {
    Decision d;
    d.per_level_ucb_reward.assign(structure_.levels, 0.0);
    d.per_level_cost_bound.assign(structure_.levels, 0.0);
    long parent = 0;
    for (int h = 0; h < structure_.levels; ++h) {
        const auto allowed = structure_.allowed_at(h, parent);
        if (allowed.empty()) throw std::runtime_error("agent: empty action set at a level");
        const int a = allowed[rng.uniform_index(allowed.size())];
        d.action.indices.push_back(a);
        parent = parent * structure_.actions_per_level[h] + a;
    }
    return d;
}

Decision AgentState::select_oracle(const Eigen::VectorXd& context) const {
    Decision d;
    d.per_level_ucb_reward.assign(structure_.levels, 0.0);
    d.per_level_cost_bound.assign(structure_.levels, 0.0);
    const auto best = best_feasible(structure_, context);
    if (best) {
        d.action = best->action;
        for (int h = 0; h < structure_.levels; ++h)
            d.per_level_cost_bound[h] = expected_cost_of(structure_, context, best->action, h);
        d.per_level_ucb_reward.back() = best->value;
        return d;
    }
    // No feasible action: pick the smallest worst-level deficit.
    d.fallback_used = true;
    const long n = structure_.num_composite_actions();
    double best_deficit = kInf;
    CompositeAction pick;
    for (long flat = 0; flat < n; ++flat) {
        CompositeAction a = structure_.action_from_flat(flat);
        if (!structure_.action_allowed(a)) continue;
        double worst = -kInf;
        for (int h = 0; h < structure_.levels; ++h)
            worst = std::max(worst,
                             expected_cost_of(structure_, context, a, h) - structure_.thresholds[h]);
        if (worst < best_deficit) {
            best_deficit = worst;
            pick = a;
        }
    }
    d.action = pick;
    for (int h = 0; h < structure_.levels; ++h)
        d.per_level_cost_bound[h] = expected_cost_of(structure_, context, pick, h);
    return d;
}

Decision AgentState::select(const Eigen::VectorXd& context, const std::vector<double>& thresholds,
                            CounterRng& rng) const {
    if (context.size() != structure_.dim) throw ConfigError("agent: context dimension mismatch");
    if (context.norm() > 1.0 + 1e-12) throw ConfigError("agent: context norm exceeds 1");
    switch (cfg_.kind) {
        case AgentKind::HcUcb:
            return select_ucb(context, thresholds, rng, true);
        case AgentKind::UnconstrainedUcb: {
            const std::vector<double> open(structure_.levels, kInf);
            return select_ucb(context, open, rng, true);
        }
        case AgentKind::UniformRandom:
            return select_uniform(rng);
        case AgentKind::EpsilonGreedy:
            if (rng.uniform() < cfg_.epsilon) return select_uniform(rng);
            return select_ucb(context, thresholds, rng, false);
        case AgentKind::Oracle:
            return select_oracle(context);
    }
    throw std::logic_error("unreachable");
}

void AgentState::update(const Eigen::VectorXd& context, const Decision& decision,
                        const RoundObservation& obs) {
    if (context.size() != structure_.dim) throw ConfigError("agent: context dimension mismatch");
    if (static_cast<int>(obs.costs.size()) != structure_.levels)
        throw ConfigError("agent: observation cost count mismatch");
    const long flat = structure_.flat_action_index(decision.action);
    reward_models_[flat].absorb(context, obs.reward);
    for (int h = 0; h < structure_.levels; ++h)
        cost_models_[h][structure_.prefix_index(decision.action, h)].absorb(context, obs.costs[h]);
    ++round_;
}

AgentKind agent_kind_from_string(const std::string& s) {
    if (s == "hcucb") return AgentKind::HcUcb;
    if (s == "uniform-random") return AgentKind::UniformRandom;
    if (s == "epsilon-greedy") return AgentKind::EpsilonGreedy;
    if (s == "unconstrained-ucb") return AgentKind::UnconstrainedUcb;
    if (s == "oracle") return AgentKind::Oracle;
    throw ConfigError("unknown agent kind: " + s);
}

std::string agent_kind_to_string(AgentKind k) {
    switch (k) {
        case AgentKind::HcUcb: return "hcucb";
        case AgentKind::UniformRandom: return "uniform-random";
        case AgentKind::EpsilonGreedy: return "epsilon-greedy";
        case AgentKind::UnconstrainedUcb: return "unconstrained-ucb";
        case AgentKind::Oracle: return "oracle";
    }
    throw std::logic_error("unreachable");
}

}  // namespace hcb
