// Acceptance gate: every release-blocking criterion in one binary, one
// verdict line each. Exit status is nonzero when any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hcb/agents.hpp"
#include "hcb/environment.hpp"
#include "hcb/harness.hpp"
#include "hcb/linear_model.hpp"
#include "hcb/metrics.hpp"
#include "hcb/rng.hpp"
#include "hcb/theory_checks.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace hcb;

namespace {

int g_failures = 0;

void report(int n, const std::string& description, bool ok) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n, description.c_str());
    if (!ok) ++g_failures;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return "<missing:" + path + ">";
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Snapshots embed the output directory, which differs between the two runs
// by construction; every other byte must agree.
std::string without_output_dir(const std::string& doc) {
    std::istringstream in(doc);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("\"output_dir\"") == std::string::npos) out << line << '\n';
    return out.str();
}

// Criterion 1: the incremental estimator matches an independent dense batch
// solve to 1e-8 relative error on 100 random sequences.
void criterion_1() {
    bool ok = true;
    for (int seq = 0; seq < 100 && ok; ++seq) {
        CounterRng rng(9000 + seq, Stream::Generation);
        const int d = 2 + static_cast<int>(rng.uniform_index(6));
        const double lambda = rng.uniform(0.5, 2.0);
        const long n = 20 + static_cast<long>(rng.uniform_index(300));
        LinearModel model(d, lambda);
        Eigen::MatrixXd v = lambda * Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
        for (long t = 0; t < n; ++t) {
            const Eigen::VectorXd x = rng.unit_ball(d);
            const double y = rng.uniform(-1.0, 1.0);
            model.absorb(x, y);
            v += x * x.transpose();
            b += y * x;
        }
        const Eigen::VectorXd ref = v.ldlt().solve(b);
        const double err = (model.theta_hat() - ref).norm() / std::max(1.0, ref.norm());
        ok = ok && err <= 1e-8;
    }
    report(1, "incremental estimator matches dense batch solve to 1e-8 on 100 sequences", ok);
}

// Criterion 2: confidence-set coverage. 500 independent regression runs at
// delta = 0.1; the fraction where the truth ever leaves the ellipsoid must
// stay at or below 0.14.
void criterion_2() {
    const int runs = 500;
    const long horizon = 300;
    int ever_exit = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : ever_exit)
    for (int r = 0; r < runs; ++r) {
        CounterRng rng(20000 + r, Stream::Generation);
        const int d = 2 + static_cast<int>(rng.uniform_index(4));
        const Eigen::VectorXd theta = rng.unit_ball(d);
        const double sigma = rng.uniform(0.2, 1.0);
        LinearModel model(d, 1.0);
        ConfidenceConfig conf{0.1, 1.0, 1.0, d, 1.0};
        bool exited = false;
        for (long t = 0; t < horizon && !exited; ++t) {
            const Eigen::VectorXd x = rng.unit_ball(d);
            model.absorb(x, theta.dot(x) + sigma * rng.normal());
            const Eigen::VectorXd diff = model.theta_hat() - theta;
            const double radius = std::sqrt(diff.dot(model.v_matrix() * diff));
            exited = radius > compute_beta(conf, model.count());
        }
        ever_exit += exited ? 1 : 0;
    }
    const double fraction = static_cast<double>(ever_exit) / runs;
    std::printf("       coverage ever-exit fraction = %.4f (limit 0.14)\n", fraction);
    report(2, "confidence ellipsoid coverage at delta = 0.1 over 500 runs", fraction <= 0.14);
}

// Criterion 3: constraint satisfaction of the conservative screen. On the
// default instance shape (d = 5, two levels), over 200 seeds at T = 2000,
// at most 14% of runs may contain any screened (non-fallback) round whose
// true expected cost exceeds a threshold.
long g_potential_violations = 0;

void criterion_3() {
    const auto spec = generate_spec(5, 2, {3, 4}, {0.5, 0.5}, 0.1, 42);
    AgentConfig acfg;
    acfg.kind = AgentKind::HcUcb;
    acfg.delta = 0.1;
    acfg.constraint_mode = ConstraintMode::ConservativeUcb;
    const int seeds = 200;
    const long horizon = 2000;
    int violating_runs = 0;
    long potential = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : violating_runs, potential)
    for (int s = 1; s <= seeds; ++s) {
        AgentState agent(spec, acfg);
        CounterRng crng(s, Stream::Context), nrng(s, Stream::Noise), arng(s, Stream::Agent);
        bool violated = false;
        for (long t = 1; t <= horizon; ++t) {
            crng.set_round(t);
            nrng.set_round(t);
            arng.set_round(t);
            const auto x = draw_context(spec, crng);
            const auto d = agent.select(x, spec.thresholds, arng);
            if (!d.fallback_used)
                for (int h = 0; h < spec.levels; ++h)
                    if (expected_cost_of(spec, x, d.action, h) > spec.thresholds[h] + 1e-12)
                        violated = true;
            agent.update(x, d, pull(spec, x, d.action, nrng));
        }
        violating_runs += violated ? 1 : 0;
        for (long f = 0; f < agent.num_reward_models(); ++f) {
            const auto& m = agent.reward_model(f);
            if (m.elliptical_potential() >
                2.0 * spec.dim * std::log1p(static_cast<double>(m.count()) / spec.dim))
                ++potential;
        }
    }
    g_potential_violations += potential;
    const double fraction = static_cast<double>(violating_runs) / seeds;
    std::printf("       violating-run fraction = %.4f (limit 0.14)\n", fraction);
    report(3, "conservative screen keeps true costs under thresholds (200 seeds, T = 2000)",
           fraction <= 0.14);
}

// Criterion 4: sublinear regret on the default instance. Mean R_t / t over
// 20 seeds must strictly decrease across the checkpoint grid and fit a
// log-log slope below 0.85; the uniform baseline must stay near-linear
// (slope >= 0.95) with at least twice the final regret.
void criterion_4() {
    const auto spec = generate_spec(5, 2, {3, 4}, {1.5, 1.5}, 0.1, 42);
    const std::vector<long> grid = {128, 256, 512, 1024, 2048, 4096, 8192, 10000};
    const int seeds = 20;
    const long horizon = 10000;

    auto mean_curve = [&](AgentKind kind, long& potential_out) {
        AgentConfig acfg;
        acfg.kind = kind;
        acfg.delta = 0.1;
        std::vector<double> mean_regret(grid.size(), 0.0);
        long potential = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : potential)
        for (int s = 1; s <= seeds; ++s) {
            const auto result = run_single(spec, acfg, s, horizon, grid);
            potential += result.potential_violations;
            const auto& cps = result.metrics.checkpoints();
#pragma omp critical
            for (std::size_t i = 0; i < grid.size(); ++i) mean_regret[i] += cps[i].regret;
        }
        potential_out += potential;
        for (double& r : mean_regret) r /= seeds;
        return mean_regret;
    };

    long potential = 0;
    const auto hcucb = mean_curve(AgentKind::HcUcb, potential);
    const auto uniform = mean_curve(AgentKind::UniformRandom, potential);
    g_potential_violations += potential;

    bool decreasing = true;
    for (std::size_t i = 1; i < grid.size(); ++i)
        decreasing = decreasing &&
                     hcucb[i] / static_cast<double>(grid[i]) <
                         hcucb[i - 1] / static_cast<double>(grid[i - 1]);

    auto fit_kappa = [&](const std::vector<double>& regret) {
        std::vector<Checkpoint> cps(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            cps[i].t = grid[i];
            cps[i].regret = regret[i];
            cps[i].avg_regret = regret[i] / static_cast<double>(grid[i]);
        }
        const auto rep = sublinearity_summary(cps);
        return rep.exponent.value_or(0.0);
    };
    const double kappa_hcucb = fit_kappa(hcucb);
    const double kappa_uniform = fit_kappa(uniform);
    std::printf("       kappa(hcucb) = %.4f (< 0.85), kappa(uniform) = %.4f (>= 0.95)\n",
                kappa_hcucb, kappa_uniform);
    std::printf("       final regret: hcucb = %.2f, uniform = %.2f (>= 2x)\n", hcucb.back(),
                uniform.back());
    const bool ok = decreasing && kappa_hcucb < 0.85 && kappa_uniform >= 0.95 &&
                    uniform.back() >= 2.0 * hcucb.back();
    report(4, "sublinear regret on the default instance vs a near-linear uniform baseline", ok);
}

// Criterion 5: the elliptical potential bound holds on every trace touched
// above, plus 100 dedicated random traces checked directly.
void criterion_5() {
    bool ok = g_potential_violations == 0;
    for (int trace = 0; trace < 100 && ok; ++trace) {
        CounterRng rng(5000 + trace, Stream::Generation);
        const int d = 1 + static_cast<int>(rng.uniform_index(8));
        const long n = 100 + static_cast<long>(rng.uniform_index(900));
        LinearModel m(d, 1.0);
        for (long t = 0; t < n; ++t) m.absorb(rng.unit_ball(d), rng.uniform(-1.0, 1.0));
        ok = m.elliptical_potential() <= 2.0 * d * std::log1p(static_cast<double>(n) / d);
    }
    report(5, "elliptical potential bound holds on every recorded trace", ok);
}

// Criterion 6: hierarchical value gaps on 200 random MDP/decomposition
// pairs stay within [−1e-9, 2 eps/(1−gamma) + 1e-6], and the dedicated
// tightness instance meets the stated bound with ratio 1 +/- 1e-6.
void criterion_6() {
    CounterRng rng(606060, Stream::Generation);
    bool ok = true;
    for (int rep = 0; rep < 200 && ok; ++rep) {
        const auto mdp = random_mdp(rng);
        const auto decomp = random_decomposition(mdp, rng);
        const auto rp = gap_check(mdp, decomp);
        ok = rp.min_gap >= -1e-9 && rp.max_gap <= rp.bound_proved + 1e-6;
    }
    const auto inst = tightness_instance(0.25);
    const auto rp = gap_check(inst.mdp, inst.decomp);
    const double ratio = rp.max_gap / rp.bound_stated;
    std::printf("       tightness ratio = %.9f (target 1 +/- 1e-6)\n", ratio);
    ok = ok && std::abs(ratio - 1.0) <= 1e-6;
    report(6, "value gap bounds on 200 random pairs and exact tightness instance", ok);
}

// Criterion 7: hard-family construction. The (d=1, H=1, T=100, sigma=1)
// family must separate at exactly 0.1, and audits must pass on a spread of
// shapes.
void criterion_7() {
    bool ok = true;
    const auto base = generate_hard_family(1, 1, 100, 1.0, 1);
    ok = ok && std::abs(base.separation - 0.1) <= 1e-12;
    ok = ok && base.audit() >= base.separation - 1e-12;
    struct Shape {
        int d, h;
        long t;
        double sigma;
    };
    for (const Shape& s : {Shape{2, 2, 400, 0.5}, Shape{3, 2, 2000, 1.0}, Shape{4, 1, 500, 0.8}}) {
        const auto fam = generate_hard_family(s.d, s.h, s.t, s.sigma, 17);
        ok = ok && fam.audit() >= fam.separation - 1e-12;
        for (const auto& inst : fam.parameter_sets)
            for (const auto& theta : inst) ok = ok && theta.norm() <= 1.0 + 1e-12;
    }
    report(7, "hard-family packing audits, separation 0.1 at (d=1, H=1, T=100, sigma=1)", ok);
}

// Criterion 8: artifact determinism. Two full harness runs with the same
// configuration must produce byte-identical CSV, summary, snapshot, and SVG.
void criterion_8() {
    const fs::path root = fs::temp_directory_path() / "hcb_acceptance_c8";
    fs::remove_all(root);
    RunConfig cfg;
    cfg.generation.dim = 4;
    cfg.generation.actions_per_level = {2, 3};
    cfg.generation.seed = 11;
    cfg.agent.kind = AgentKind::HcUcb;
    cfg.horizon = 500;
    cfg.seeds = {1, 2, 3};
    cfg.write_trace = true;

    cfg.output_dir = (root / "a").string();
    const auto a = run(cfg);
    cfg.output_dir = (root / "b").string();
    const auto b = run(cfg);

    bool ok = a.invariant_violations == 0 && b.invariant_violations == 0;
    ok = ok && slurp(a.metrics_csv_path) == slurp(b.metrics_csv_path);
    ok = ok && slurp(a.summary_json_path) == slurp(b.summary_json_path);
    ok = ok && without_output_dir(slurp(a.config_snapshot_path)) ==
                   without_output_dir(slurp(b.config_snapshot_path));
    ok = ok && slurp(a.svg_path) == slurp(b.svg_path);
    for (const std::string seed : {"1", "2", "3"})
        ok = ok && slurp((fs::path(a.metrics_csv_path).parent_path() / ("trace_" + seed + ".csv"))
                             .string()) ==
                       slurp((fs::path(b.metrics_csv_path).parent_path() /
                              ("trace_" + seed + ".csv"))
                                 .string());
    fs::remove_all(root);
    report(8, "repeated runs emit byte-identical CSV, JSON, and SVG artifacts", ok);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("acceptance gate (OpenMP, %d threads available)\n", omp_get_max_threads());
#else
    std::printf("acceptance gate (serial build)\n");
#endif
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
