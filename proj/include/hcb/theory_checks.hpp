#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hcb/environment.hpp"
#include "hcb/rng.hpp"

namespace hcb {

// Small discrete MDP, |S| <= 64, |A| <= 16. transition[a](s, s') = P(s'|s,a).
struct SmallMdp {
    int n_states = 1;
    int n_actions = 1;
    std::vector<Eigen::MatrixXd> transition;
    Eigen::MatrixXd reward;  // (s, a)
    double gamma = 0.9;

    void validate() const;
};

struct ValueFunctions {
    Eigen::VectorXd v;  // per state
    Eigen::MatrixXd q;  // (s, a)
    int sweeps = 0;
};

ValueFunctions value_iteration(const SmallMdp& mdp, double tolerance);

// One high-level action: a group of ground actions plus its fixed low-level
// policy (a ground action per state, drawn from the group).
struct HighAction {
    std::vector<int> actions;
    std::vector<int> policy;  // size n_states
};

struct HierarchicalDecomposition {
    std::vector<int> state_group;        // ground state -> abstract state
    std::vector<HighAction> high_actions;  // partition of ground actions

    int num_abstract_states() const;
    int group_of_action(int action) const;
    void validate(const SmallMdp& mdp) const;
};

struct HierarchicalValues {
    Eigen::VectorXd v;  // per abstract state
    Eigen::MatrixXd q;  // (abstract state, high action)
};

// Optimal value over policies that pick one high-level action per abstract
// state and follow its fixed low-level policy. v(x) is the best guaranteed
// value over the member states of x, so v(x) <= V*(s) for every s in x.
HierarchicalValues hierarchical_value(const SmallMdp& mdp,
                                      const HierarchicalDecomposition& decomp,
                                      double tolerance);

struct GapReport {
    double epsilon = 0.0;       // max |Q*(s,a) - Q^H(x(s), group(a))|
    double min_gap = 0.0;       // min over states of V*(s) - V^H(x(s))
    double max_gap = 0.0;
    double bound_stated = 0.0;  // epsilon / (1 - gamma)
    double bound_proved = 0.0;  // 2 epsilon / (1 - gamma)
    std::vector<double> per_state_gap;
};

GapReport gap_check(const SmallMdp& mdp, const HierarchicalDecomposition& decomp,
                    double tolerance = 1e-10);

// The two-action construction where the decomposition hides the better
// action behind a fixed policy; at gamma = 0 the measured gap equals
// epsilon/(1-gamma) exactly.
struct TightnessInstance {
    SmallMdp mdp;
    HierarchicalDecomposition decomp;
};
TightnessInstance tightness_instance(double eps = 0.25);

SmallMdp random_mdp(CounterRng& rng, int max_states = 10, int max_actions = 4);
HierarchicalDecomposition random_decomposition(const SmallMdp& mdp, CounterRng& rng);

// Packed hard-instance parameter family: N instances, each with one
// parameter vector per level, pairwise separated by at least `separation`
// at every level and all inside the unit ball.
struct HardInstanceFamily {
    int dim = 1;
    int levels = 1;
    long horizon = 1;
    int count = 2;           // N = min(2^(d*H), 256)
    double sigma = 1.0;
    double c_constant = 1.0; // sigma * sqrt(1/(H d))
    double separation = 0.0; // c * sqrt(d/T)
    std::uint64_t seed = 0;
    std::vector<std::vector<Eigen::VectorXd>> parameter_sets;  // [instance][level]

    // Exhaustive norm + pairwise-distance audit; returns the minimum
    // pairwise level distance found.
    double audit() const;
};

HardInstanceFamily generate_hard_family(int dim, int levels, long horizon, double sigma,
                                        std::uint64_t seed);

// Family member as an environment instance: single action per level,
// level parameters stored as cost parameters, thresholds +inf.
EnvironmentSpec family_member_spec(const HardInstanceFamily& family, int member);

}  // namespace hcb
