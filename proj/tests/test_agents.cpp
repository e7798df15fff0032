#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "hcb/agents.hpp"

using namespace hcb;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

AgentConfig base_config(AgentKind kind = AgentKind::HcUcb) {
    AgentConfig cfg;
    cfg.kind = kind;
    cfg.delta = 0.1;
    return cfg;
}

}  // namespace

TEST_CASE("single action per level with open thresholds") {
    const auto spec = generate_spec(2, 3, {1, 1, 1}, {kInf, kInf, kInf}, 0.0, 4);
    AgentState agent(spec, base_config());
    CounterRng rng(1, Stream::Agent);
    Eigen::VectorXd x(2);
    x << 0.4, 0.1;
    const auto d = agent.select(x, spec.thresholds, rng);
    CHECK(d.action.indices == std::vector<int>{0, 0, 0});
    CHECK_FALSE(d.fallback_used);
}

TEST_CASE("untrained optimistic screen passes any tau >= -beta*bonus") {
    const auto spec = generate_spec(2, 1, {2}, {0.0}, 0.0, 8);
    auto cfg = base_config();
    cfg.constraint_mode = ConstraintMode::OptimisticLcb;
    AgentState agent(spec, cfg);
    CounterRng rng(1, Stream::Agent);
    Eigen::VectorXd x(2);
    x << 1.0, 0.0;
    // theta_hat = 0, so the LCB is -beta*||x||_{V^-1} < 0 <= tau = 0.
    const auto d = agent.select(x, {0.0}, rng);
    CHECK_FALSE(d.fallback_used);
    const double beta = agent.cost_beta(agent.cost_model(0, 0));
    CHECK(d.per_level_cost_bound[0] == doctest::Approx(-beta).epsilon(1e-12));
}

TEST_CASE("impossible thresholds trigger the least-lcb-cost fallback") {
    // generate_spec inflates thresholds until every context is feasible, so
    // the impossible thresholds are supplied at selection time instead.
    const auto spec = generate_spec(2, 2, {3, 2}, {0.5, 0.5}, 0.0, 15);
    const std::vector<double> impossible = {-10.0, -10.0};
    auto cfg = base_config();
    AgentState agent(spec, cfg);
    CounterRng noise(3, Stream::Noise);
    CounterRng arng(3, Stream::Agent);
    CounterRng crng(3, Stream::Context);

    // Train the cost models a little so LCBs differ across actions.
    for (int t = 1; t <= 60; ++t) {
        crng.set_round(t);
        noise.set_round(t);
        arng.set_round(t);
        const auto x = draw_context(spec, crng);
        const auto d = agent.select(x, impossible, arng);
        CHECK(d.fallback_used);
        agent.update(x, d, pull(spec, x, d.action, noise));
    }

    Eigen::VectorXd x(2);
    x << 0.6, -0.3;
    const auto d = agent.select(x, impossible, arng);
    CHECK(d.fallback_used);
    // Brute-force the level-0 minimum cost LCB.
    int best_a = -1;
    double best_lcb = kInf;
    for (int a = 0; a < 3; ++a) {
        const auto& m = agent.cost_model(0, a);
        const double lcb = m.predict(x) - agent.cost_beta(m) * m.mahalanobis_bonus(x);
        if (lcb < best_lcb) {
            best_lcb = lcb;
            best_a = a;
        }
    }
    CHECK(d.action.indices[0] == best_a);
    CHECK(d.per_level_cost_bound[0] == doctest::Approx(best_lcb));
}

TEST_CASE("non-fallback decisions respect the screen bound invariant") {
    const auto spec = generate_spec(3, 2, {2, 3}, {0.6, 0.6}, 0.1, 33);
    AgentState agent(spec, base_config());
    CounterRng crng(9, Stream::Context), nrng(9, Stream::Noise), arng(9, Stream::Agent);
    for (int t = 1; t <= 300; ++t) {
        crng.set_round(t);
        nrng.set_round(t);
        arng.set_round(t);
        const auto x = draw_context(spec, crng);
        const auto d = agent.select(x, spec.thresholds, arng);
        if (!d.fallback_used)
            for (int h = 0; h < spec.levels; ++h)
                CHECK(d.per_level_cost_bound[h] <= spec.thresholds[h] + 1e-12);
        agent.update(x, d, pull(spec, x, d.action, nrng));
    }
}

TEST_CASE("update touches exactly the chosen models") {
    const auto spec = generate_spec(2, 2, {2, 2}, {kInf, kInf}, 0.0, 6);
    AgentState agent(spec, base_config());
    CounterRng nrng(2, Stream::Noise), arng(2, Stream::Agent);
    Eigen::VectorXd x(2);
    x << 0.3, 0.3;
    const auto d = agent.select(x, spec.thresholds, arng);
    const long flat = spec.flat_action_index(d.action);
    agent.update(x, d, pull(spec, x, d.action, nrng));
    for (long i = 0; i < agent.num_reward_models(); ++i)
        CHECK(agent.reward_model(i).count() == (i == flat ? 1 : 0));
    CHECK(agent.round() == 1);
}

TEST_CASE("noiseless single-action spec: theta_hat converges to truth") {
    const auto spec = generate_spec(3, 1, {1}, {kInf}, 0.0, 27);
    AgentState agent(spec, base_config());
    CounterRng crng(4, Stream::Context), nrng(4, Stream::Noise), arng(4, Stream::Agent);
    for (int t = 1; t <= 500; ++t) {
        crng.set_round(t);
        nrng.set_round(t);
        arng.set_round(t);
        const auto x = draw_context(spec, crng);
        const auto d = agent.select(x, spec.thresholds, arng);
        agent.update(x, d, pull(spec, x, d.action, nrng));
    }
    CHECK((agent.reward_model(0).theta_hat() - spec.reward_params[0]).norm() <= 1e-2);
}

TEST_CASE("replaying a trajectory reproduces identical decisions") {
    const auto spec = generate_spec(3, 2, {2, 2}, {0.5, 0.5}, 0.1, 64);
    auto run = [&] {
        AgentState agent(spec, base_config());
        CounterRng crng(7, Stream::Context), nrng(7, Stream::Noise), arng(7, Stream::Agent);
        std::vector<std::vector<int>> actions;
        for (int t = 1; t <= 100; ++t) {
            crng.set_round(t);
            nrng.set_round(t);
            arng.set_round(t);
            const auto x = draw_context(spec, crng);
            const auto d = agent.select(x, spec.thresholds, arng);
            agent.update(x, d, pull(spec, x, d.action, nrng));
            actions.push_back(d.action.indices);
        }
        return actions;
    };
    CHECK(run() == run());
}

TEST_CASE("unconstrained-ucb equals hcucb under open thresholds") {
    const auto spec = generate_spec(3, 2, {2, 3}, {kInf, kInf}, 0.1, 90);
    AgentState hcucb(spec, base_config(AgentKind::HcUcb));
    AgentState open_ucb(spec, base_config(AgentKind::UnconstrainedUcb));
    CounterRng crng(5, Stream::Context), nrng(5, Stream::Noise);
    CounterRng arng1(5, Stream::Agent), arng2(5, Stream::Agent);
    for (int t = 1; t <= 200; ++t) {
        crng.set_round(t);
        nrng.set_round(t);
        arng1.set_round(t);
        arng2.set_round(t);
        const auto x = draw_context(spec, crng);
        const auto d1 = hcucb.select(x, spec.thresholds, arng1);
        const auto d2 = open_ucb.select(x, spec.thresholds, arng2);
        CHECK(d1.action.indices == d2.action.indices);
        const auto obs = pull(spec, x, d1.action, nrng);
        hcucb.update(x, d1, obs);
        open_ucb.update(x, d2, obs);
    }
}

TEST_CASE("uniform-random frequencies match the multinomial oracle") {
    const auto spec = generate_spec(2, 2, {2, 3}, {kInf, kInf}, 0.0, 44);
    AgentState agent(spec, base_config(AgentKind::UniformRandom));
    CounterRng arng(6, Stream::Agent);
    Eigen::VectorXd x(2);
    x << 0.1, 0.2;
    std::map<std::vector<int>, long> counts;
    const int n = 100000;
    for (int t = 1; t <= n; ++t) {
        arng.set_round(t);
        ++counts[agent.select(x, spec.thresholds, arng).action.indices];
    }
    const double p = 1.0 / 6.0;
    const double margin = 4.0 * std::sqrt(p * (1.0 - p) / n);
    CHECK(counts.size() == 6);
    for (const auto& [a, c] : counts)
        CHECK(std::abs(static_cast<double>(c) / n - p) <= margin);
}

TEST_CASE("oracle delegates to best_feasible") {
    EnvironmentSpec spec;
    spec.dim = 1;
    spec.levels = 1;
    spec.actions_per_level = {2};
    spec.thresholds = {1.0};
    Eigen::VectorXd hi(1), lo(1), z(1);
    hi << 0.9;
    lo << 0.5;
    z << 0.0;
    spec.reward_params = {hi, lo};
    spec.cost_params = {{z, z}};
    spec.validate();
    AgentState oracle(spec, base_config(AgentKind::Oracle), true);
    CounterRng arng(1, Stream::Agent);
    Eigen::VectorXd x(1);
    x << 1.0;
    CHECK(oracle.select(x, spec.thresholds, arng).action.indices == std::vector<int>{0});
}

TEST_CASE("oracle without truth access is a configuration error") {
    const auto spec = generate_spec(2, 1, {2}, {kInf}, 0.0, 1);
    CHECK_THROWS_AS(AgentState(spec, base_config(AgentKind::Oracle), false), ConfigError);
}

TEST_CASE("screen soundness and optimism when truth is inside the ellipsoids") {
    const auto spec = generate_spec(3, 2, {2, 2}, {0.5, 0.5}, 0.1, 202);
    auto cfg = base_config();
    cfg.constraint_mode = ConstraintMode::ConservativeUcb;
    AgentState agent(spec, cfg);
    CounterRng crng(12, Stream::Context), nrng(12, Stream::Noise), arng(12, Stream::Agent);

    auto truth_inside = [&](const Eigen::VectorXd&) {
        for (long f = 0; f < agent.num_reward_models(); ++f) {
            const auto& m = agent.reward_model(f);
            const Eigen::VectorXd diff = m.theta_hat() - spec.reward_params[f];
            if (std::sqrt(diff.dot(m.v_matrix() * diff)) > agent.reward_beta(m)) return false;
        }
        for (int h = 0; h < spec.levels; ++h)
            for (long p = 0; p < spec.num_prefixes(h); ++p) {
                const auto& m = agent.cost_model(h, p);
                const Eigen::VectorXd diff = m.theta_hat() - spec.cost_params[h][p];
                if (std::sqrt(diff.dot(m.v_matrix() * diff)) > agent.cost_beta(m)) return false;
            }
        return true;
    };

    for (int t = 1; t <= 400; ++t) {
        crng.set_round(t);
        nrng.set_round(t);
        arng.set_round(t);
        const auto x = draw_context(spec, crng);
        const auto d = agent.select(x, spec.thresholds, arng);
        if (truth_inside(x)) {
            if (!d.fallback_used) {
                // Conservative screen soundness: true costs satisfy thresholds.
                for (int h = 0; h < spec.levels; ++h)
                    CHECK(expected_cost_of(spec, x, d.action, h) <= spec.thresholds[h] + 1e-9);
            }
            // Optimism: if the true best feasible action passes the screen,
            // the selected reward UCB dominates the optimal feasible value.
            const auto best = best_feasible(spec, x);
            if (best && !d.fallback_used) {
                bool best_passes = true;
                for (int h = 0; h < spec.levels && best_passes; ++h) {
                    const auto& m = agent.cost_model(h, spec.prefix_index(best->action, h));
                    const double bound =
                        m.predict(x) + agent.cost_beta(m) * m.mahalanobis_bonus(x);
                    best_passes = bound <= spec.thresholds[h];
                }
                if (best_passes) CHECK(d.per_level_ucb_reward[0] >= best->value - 1e-9);
            }
        }
        agent.update(x, d, pull(spec, x, d.action, nrng));
    }
}
