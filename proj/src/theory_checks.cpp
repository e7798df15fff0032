#include "hcb/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hcb {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long kAbstractPolicyBound = 2'000'000;
constexpr long kPackingProposalBound = 100'000;
}  // namespace

void SmallMdp::validate() const {
    if (n_states < 1 || n_states > 64) throw ConfigError("SmallMdp: states must be in [1,64]");
    if (n_actions < 1 || n_actions > 16) throw ConfigError("SmallMdp: actions must be in [1,16]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("SmallMdp: gamma must be in [0,1)");
    if (static_cast<int>(transition.size()) != n_actions)
        throw ConfigError("SmallMdp: one transition matrix per action required");
    if (reward.rows() != n_states || reward.cols() != n_actions)
        throw ConfigError("SmallMdp: reward must be |S| x |A|");
    for (const auto& p : transition) {
        if (p.rows() != n_states || p.cols() != n_states)
            throw ConfigError("SmallMdp: transition matrix must be |S| x |S|");
        for (int s = 0; s < n_states; ++s) {
            if (p.row(s).minCoeff() < -1e-12)
                throw ConfigError("SmallMdp: negative transition probability");
            if (std::abs(p.row(s).sum() - 1.0) > 1e-12)
                throw ConfigError("SmallMdp: transition row does not sum to 1");
        }
    }
}

ValueFunctions value_iteration(const SmallMdp& mdp, double tolerance) {
    mdp.validate();
    if (!(tolerance > 0.0)) throw ConfigError("value_iteration: tolerance must be positive");
    ValueFunctions out;
    out.v = Eigen::VectorXd::Zero(mdp.n_states);
    out.q = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
    double prev_residual = kInf;
    for (;;) {
        for (int a = 0; a < mdp.n_actions; ++a)
            out.q.col(a) = mdp.reward.col(a) + mdp.gamma * (mdp.transition[a] * out.v);
        Eigen::VectorXd v_next = out.q.rowwise().maxCoeff();
        const double residual = (v_next - out.v).cwiseAbs().maxCoeff();
        out.v = v_next;
        ++out.sweeps;
        if (residual > prev_residual * mdp.gamma + 1e-13)
            throw std::runtime_error("value_iteration: contraction violated");
        prev_residual = residual;
        if (residual <= tolerance || residual == 0.0) break;
    }
    for (int a = 0; a < mdp.n_actions; ++a)
        out.q.col(a) = mdp.reward.col(a) + mdp.gamma * (mdp.transition[a] * out.v);
    return out;
}

int HierarchicalDecomposition::num_abstract_states() const {
    return state_group.empty() ? 0 : *std::max_element(state_group.begin(), state_group.end()) + 1;
}

int HierarchicalDecomposition::group_of_action(int action) const {
    for (int g = 0; g < static_cast<int>(high_actions.size()); ++g)
        for (int a : high_actions[g].actions)
            if (a == action) return g;
    throw ConfigError("HierarchicalDecomposition: action not in any group");
}

void HierarchicalDecomposition::validate(const SmallMdp& mdp) const {
    if (static_cast<int>(state_group.size()) != mdp.n_states)
        throw ConfigError("HierarchicalDecomposition: state grouping must be total");
    const int nx = num_abstract_states();
    std::vector<bool> seen_x(nx, false);
    for (int x : state_group) {
        if (x < 0 || x >= nx) throw ConfigError("HierarchicalDecomposition: bad abstract state");
        seen_x[x] = true;
    }
    for (bool s : seen_x)
        if (!s) throw ConfigError("HierarchicalDecomposition: empty abstract state");
    if (high_actions.empty()) throw ConfigError("HierarchicalDecomposition: no high-level actions");
    std::vector<int> covered(mdp.n_actions, 0);
    for (const auto& g : high_actions) {
        if (g.actions.empty()) throw ConfigError("HierarchicalDecomposition: empty action group");
        for (int a : g.actions) {
            if (a < 0 || a >= mdp.n_actions)
                throw ConfigError("HierarchicalDecomposition: action out of range");
            ++covered[a];
        }
        if (static_cast<int>(g.policy.size()) != mdp.n_states)
            throw ConfigError("HierarchicalDecomposition: policy must cover every state");
        for (int a : g.policy)
            if (std::find(g.actions.begin(), g.actions.end(), a) == g.actions.end())
                throw ConfigError("HierarchicalDecomposition: policy leaves its group");
    }
    for (int c : covered)
        if (c != 1) throw ConfigError("HierarchicalDecomposition: groups must partition the actions");
}

namespace {

// Exact evaluation of the ground policy induced by abstract choice phi.
Eigen::VectorXd evaluate_induced_policy(const SmallMdp& mdp,
                                        const HierarchicalDecomposition& decomp,
                                        const std::vector<int>& phi) {
    const int n = mdp.n_states;
    Eigen::MatrixXd p_pi(n, n);
    Eigen::VectorXd r_pi(n);
    for (int s = 0; s < n; ++s) {
        const int a = decomp.high_actions[phi[decomp.state_group[s]]].policy[s];
        p_pi.row(s) = mdp.transition[a].row(s);
        r_pi[s] = mdp.reward(s, a);
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p_pi;
    return m.partialPivLu().solve(r_pi);
}

}  // namespace

HierarchicalValues hierarchical_value(const SmallMdp& mdp,
                                      const HierarchicalDecomposition& decomp,
                                      double /*tolerance*/) {
    mdp.validate();
    decomp.validate(mdp);
    const int nx = decomp.num_abstract_states();
    const int ng = static_cast<int>(decomp.high_actions.size());

    long n_policies = 1;
    for (int x = 0; x < nx; ++x) {
        n_policies *= ng;
        if (n_policies > kAbstractPolicyBound)
            throw std::runtime_error("hierarchical_value: abstract policy space too large");
    }

    HierarchicalValues out;
    out.v = Eigen::VectorXd::Constant(nx, -kInf);
    std::vector<int> phi(nx, 0);
    for (long code = 0; code < n_policies; ++code) {
        long c = code;
        for (int x = 0; x < nx; ++x) {
            phi[x] = static_cast<int>(c % ng);
            c /= ng;
        }
        const Eigen::VectorXd v_pi = evaluate_induced_policy(mdp, decomp, phi);
        // Guaranteed value per abstract state: worst member state.
        Eigen::VectorXd guaranteed = Eigen::VectorXd::Constant(nx, kInf);
        for (int s = 0; s < mdp.n_states; ++s) {
            const int x = decomp.state_group[s];
            guaranteed[x] = std::min(guaranteed[x], v_pi[s]);
        }
        out.v = out.v.cwiseMax(guaranteed);
    }

    out.q = Eigen::MatrixXd::Zero(nx, ng);
    for (int x = 0; x < nx; ++x) {
        for (int g = 0; g < ng; ++g) {
            double worst = kInf;
            for (int s = 0; s < mdp.n_states; ++s) {
                if (decomp.state_group[s] != x) continue;
                const int a = decomp.high_actions[g].policy[s];
                double backup = mdp.reward(s, a);
                for (int s2 = 0; s2 < mdp.n_states; ++s2)
                    backup += mdp.gamma * mdp.transition[a](s, s2) * out.v[decomp.state_group[s2]];
                worst = std::min(worst, backup);
            }
            out.q(x, g) = worst;
        }
    }
    return out;
}

GapReport gap_check(const SmallMdp& mdp, const HierarchicalDecomposition& decomp,
                    double tolerance) {
    const auto flat = value_iteration(mdp, tolerance);
    const auto hier = hierarchical_value(mdp, decomp, tolerance);

    GapReport rep;
    rep.per_state_gap.resize(mdp.n_states);
    rep.min_gap = kInf;
    rep.max_gap = -kInf;
    for (int s = 0; s < mdp.n_states; ++s) {
        const double gap = flat.v[s] - hier.v[decomp.state_group[s]];
        rep.per_state_gap[s] = gap;
        rep.min_gap = std::min(rep.min_gap, gap);
        rep.max_gap = std::max(rep.max_gap, gap);
    }
    rep.epsilon = 0.0;
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double diff =
                std::abs(flat.q(s, a) - hier.q(decomp.state_group[s], decomp.group_of_action(a)));
            rep.epsilon = std::max(rep.epsilon, diff);
        }
    rep.bound_stated = rep.epsilon / (1.0 - mdp.gamma);
    rep.bound_proved = 2.0 * rep.epsilon / (1.0 - mdp.gamma);
    return rep;
}

TightnessInstance tightness_instance(double eps) {
    if (!(eps > 0.0)) throw ConfigError("tightness_instance: eps must be positive");
    TightnessInstance t;
    t.mdp.n_states = 1;
    t.mdp.n_actions = 2;
    t.mdp.gamma = 0.0;  // the per-step loss then equals the total loss
    t.mdp.transition = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    t.mdp.reward = Eigen::MatrixXd(1, 2);
    t.mdp.reward << 1.0, 1.0 - eps;
    t.decomp.state_group = {0};
    // Both actions share one group whose fixed policy picks the worse one,
    // hiding the optimal action from the hierarchy.
    t.decomp.high_actions = {HighAction{{0, 1}, {1}}};
    return t;
}

SmallMdp random_mdp(CounterRng& rng, int max_states, int max_actions) {
    SmallMdp mdp;
    mdp.n_states = 2 + static_cast<int>(rng.uniform_index(max_states - 1));
    mdp.n_actions = 2 + static_cast<int>(rng.uniform_index(max_actions - 1));
    mdp.gamma = rng.uniform(0.3, 0.9);
    mdp.reward = Eigen::MatrixXd(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) mdp.reward(s, a) = rng.uniform();
    for (int a = 0; a < mdp.n_actions; ++a) {
        Eigen::MatrixXd p(mdp.n_states, mdp.n_states);
        for (int s = 0; s < mdp.n_states; ++s) {
            double sum = 0.0;
            for (int s2 = 0; s2 < mdp.n_states; ++s2) {
                p(s, s2) = -std::log(1.0 - rng.uniform());
                sum += p(s, s2);
            }
            p.row(s) /= sum;
            // Renormalize exactly so the stochasticity check holds at 1e-12.
            p(s, mdp.n_states - 1) = 1.0 - p.row(s).head(mdp.n_states - 1).sum();
        }
        mdp.transition.push_back(std::move(p));
    }
    return mdp;
}

HierarchicalDecomposition random_decomposition(const SmallMdp& mdp, CounterRng& rng) {
    HierarchicalDecomposition d;
    const int nx = 1 + static_cast<int>(rng.uniform_index(mdp.n_states));
    d.state_group.resize(mdp.n_states);
    // Cover every abstract state, then fill the rest at random.
    for (int x = 0; x < nx; ++x) d.state_group[x] = x;
    for (int s = nx; s < mdp.n_states; ++s)
        d.state_group[s] = static_cast<int>(rng.uniform_index(nx));

    const int ng = 1 + static_cast<int>(rng.uniform_index(mdp.n_actions));
    d.high_actions.assign(ng, {});
    for (int g = 0; g < ng; ++g) d.high_actions[g].actions.push_back(g);
    for (int a = ng; a < mdp.n_actions; ++a)
        d.high_actions[rng.uniform_index(ng)].actions.push_back(a);
    for (auto& g : d.high_actions) {
        g.policy.resize(mdp.n_states);
        for (int s = 0; s < mdp.n_states; ++s)
            g.policy[s] = g.actions[rng.uniform_index(g.actions.size())];
    }
    return d;
}

double HardInstanceFamily::audit() const {
    for (const auto& inst : parameter_sets)
        for (const auto& th : inst)
            if (th.norm() > 1.0 + 1e-12)
                throw std::runtime_error("hard family audit: parameter outside the unit ball");
    double min_dist = kInf;
    for (std::size_t i = 0; i < parameter_sets.size(); ++i)
        for (std::size_t j = i + 1; j < parameter_sets.size(); ++j)
            for (int h = 0; h < levels; ++h)
                min_dist = std::min(min_dist, (parameter_sets[i][h] - parameter_sets[j][h]).norm());
    if (min_dist < separation - 1e-12)
        throw std::runtime_error("hard family audit: separation invariant violated");
    return min_dist;
}

HardInstanceFamily generate_hard_family(int dim, int levels, long horizon, double sigma,
                                        std::uint64_t seed) {
    if (dim < 1 || levels < 1) throw ConfigError("generate_hard_family: dim and levels must be positive");
    if (horizon < 1) throw ConfigError("generate_hard_family: horizon must be positive");
    if (!(sigma > 0.0)) throw ConfigError("generate_hard_family: sigma must be positive");

    HardInstanceFamily fam;
    fam.dim = dim;
    fam.levels = levels;
    fam.horizon = horizon;
    fam.sigma = sigma;
    fam.seed = seed;
    fam.c_constant = sigma * std::sqrt(1.0 / (static_cast<double>(levels) * dim));
    fam.separation = fam.c_constant * std::sqrt(static_cast<double>(dim) / horizon);
    const double log2_n = static_cast<double>(dim) * levels;
    fam.count = log2_n >= 8.0 ? 256 : static_cast<int>(std::llround(std::pow(2.0, log2_n)));

    CounterRng rng(seed, Stream::Generation, 0);
    long proposals = 0;
    while (static_cast<int>(fam.parameter_sets.size()) < fam.count) {
        if (++proposals > kPackingProposalBound)
            throw std::runtime_error(
                "generate_hard_family: packing failed after 100000 proposals; "
                "reduce the instance count or increase the horizon");
        std::vector<Eigen::VectorXd> candidate;
        candidate.reserve(levels);
        for (int h = 0; h < levels; ++h) candidate.push_back(rng.unit_ball(dim));
        bool ok = true;
        for (const auto& other : fam.parameter_sets) {
            for (int h = 0; h < levels && ok; ++h)
                if ((candidate[h] - other[h]).norm() < fam.separation) ok = false;
            if (!ok) break;
        }
        if (ok) fam.parameter_sets.push_back(std::move(candidate));
    }
    return fam;
}

EnvironmentSpec family_member_spec(const HardInstanceFamily& family, int member) {
    if (member < 0 || member >= static_cast<int>(family.parameter_sets.size()))
        throw ConfigError("family_member_spec: member index out of range");
    EnvironmentSpec spec;
    spec.dim = family.dim;
    spec.levels = family.levels;
    spec.actions_per_level.assign(family.levels, 1);
    spec.thresholds.assign(family.levels, kInf);
    spec.noise_sigma = family.sigma;
    spec.seed = family.seed + static_cast<std::uint64_t>(member);
    spec.reward_params = {family.parameter_sets[member][0]};
    spec.cost_params.resize(family.levels);
    for (int h = 0; h < family.levels; ++h)
        spec.cost_params[h] = {family.parameter_sets[member][h]};
    spec.validate();
    return spec;
}

}  // namespace hcb
