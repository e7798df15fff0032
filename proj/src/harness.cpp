#include "hcb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hcb/svg.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hcb {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void RunConfig::validate() const {
    if (horizon < 1) throw ConfigError("run config: horizon must be >= 1");
    if (seeds.empty()) throw ConfigError("run config: seeds must be non-empty");
    if (output_dir.empty()) throw ConfigError("run config: output_dir must be set");
    agent.validate();
    for (long t : explicit_checkpoints)
        if (t < 1 || t > horizon)
            throw ConfigError("run config: explicit checkpoints must lie in [1, horizon]");
    if (environment) environment->validate();
}

EnvironmentSpec RunConfig::resolve_environment() const {
    if (environment) return *environment;
    return generate_spec(generation.dim, generation.levels, generation.actions_per_level,
                         generation.thresholds, generation.noise_sigma, generation.seed,
                         generation.context_distribution);
}

std::vector<long> RunConfig::checkpoint_times() const {
    if (!explicit_checkpoints.empty()) {
        auto cps = explicit_checkpoints;
        std::sort(cps.begin(), cps.end());
        cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
        return cps;
    }
    std::vector<long> cps;
    for (long t = 1; t <= horizon; t *= 2) cps.push_back(t);
    if (cps.empty() || cps.back() != horizon) cps.push_back(horizon);
    return cps;
}

SingleRunResult run_single(const EnvironmentSpec& spec, const AgentConfig& agent_cfg,
                           std::uint64_t seed, long horizon,
                           const std::vector<long>& checkpoints, bool trace) {
    SingleRunResult result{seed, RunMetrics(spec.levels)};
    AgentState agent(spec, agent_cfg, agent_cfg.kind == AgentKind::Oracle);
    CounterRng context_rng(seed, Stream::Context);
    CounterRng noise_rng(seed, Stream::Noise);
    CounterRng agent_rng(seed, Stream::Agent);

    std::ostringstream trace_os;
    if (trace) trace_os << "# hcb-trace-csv v1\nt,action,reward,expected_reward,fallback\n";

    std::size_t next_cp = 0;
    for (long t = 1; t <= horizon; ++t) {
        context_rng.set_round(t);
        noise_rng.set_round(t);
        agent_rng.set_round(t);

        const Eigen::VectorXd x = draw_context(spec, context_rng);
        const Decision d = agent.select(x, spec.thresholds, agent_rng);
        const RoundObservation obs = pull(spec, x, d.action, noise_rng);
        agent.update(x, d, obs);

        RoundRecord rec;
        rec.context = x;
        rec.action = d.action;
        rec.expected_reward = obs.expected_reward;
        rec.expected_costs = obs.expected_costs;
        rec.fallback_used = d.fallback_used;
        result.metrics.accumulate(spec, rec);

        if (trace) {
            trace_os << t << ',';
            for (std::size_t h = 0; h < d.action.indices.size(); ++h) {
                if (h) trace_os << '-';
                trace_os << d.action.indices[h];
            }
            char buf[96];
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%d\n", obs.reward, obs.expected_reward,
                          d.fallback_used ? 1 : 0);
            trace_os << buf;
        }

        while (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
            result.metrics.take_checkpoint();
            ++next_cp;
        }
    }

    // Elliptical potential audit over every model the run touched.
    auto check = [&](const LinearModel& m) {
        if (m.count() == 0) return;
        const double bound = 2.0 * spec.dim *
                             std::log1p(static_cast<double>(m.count()) /
                                        (agent_cfg.lambda * spec.dim));
        if (m.elliptical_potential() > bound) ++result.potential_violations;
    };
    for (long i = 0; i < agent.num_reward_models(); ++i) check(agent.reward_model(i));
    for (int h = 0; h < spec.levels; ++h)
        for (long p = 0; p < spec.num_prefixes(h); ++p) check(agent.cost_model(h, p));

    if (trace) result.trace_csv = trace_os.str();
    return result;
}

std::string resolve_output_dir(const std::string& configured) {
    const char* root = std::getenv("HCB_OUTPUT_ROOT");
    if (root && *root) return (fs::path(root) / configured).string();
    return configured;
}

namespace {

ordered_json agent_to_json(const AgentConfig& a) {
    ordered_json j;
    j["kind"] = agent_kind_to_string(a.kind);
    j["delta"] = a.delta;
    j["lambda"] = a.lambda;
    j["s_bound"] = a.s_bound;
    j["sigma_factor"] = a.sigma_factor;
    j["mode"] = a.constraint_mode == ConstraintMode::ConservativeUcb ? "conservative-ucb"
                                                                     : "optimistic-lcb";
    j["fallback"] = a.fallback_policy == FallbackPolicy::LeastLcbCost ? "least-lcb-cost"
                                                                      : "abstain-uniform";
    j["epsilon"] = a.epsilon;
    j["split_delta"] = a.split_delta;
    return j;
}

AgentConfig agent_from_json(const ordered_json& j) {
    AgentConfig a;
    if (j.contains("kind")) a.kind = agent_kind_from_string(j.at("kind").get<std::string>());
    a.delta = j.value("delta", a.delta);
    a.lambda = j.value("lambda", a.lambda);
    a.s_bound = j.value("s_bound", a.s_bound);
    a.sigma_factor = j.value("sigma_factor", a.sigma_factor);
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "conservative-ucb") a.constraint_mode = ConstraintMode::ConservativeUcb;
        else if (m == "optimistic-lcb") a.constraint_mode = ConstraintMode::OptimisticLcb;
        else throw ConfigError("agent.mode must be conservative-ucb or optimistic-lcb");
    }
    if (j.contains("fallback")) {
        const auto f = j.at("fallback").get<std::string>();
        if (f == "least-lcb-cost") a.fallback_policy = FallbackPolicy::LeastLcbCost;
        else if (f == "abstain-uniform") a.fallback_policy = FallbackPolicy::AbstainUniform;
        else throw ConfigError("agent.fallback must be least-lcb-cost or abstain-uniform");
    }
    a.epsilon = j.value("epsilon", a.epsilon);
    a.split_delta = j.value("split_delta", a.split_delta);
    if (!(a.delta > 0.0 && a.delta < 1.0))
        throw ConfigError("agent.delta must lie strictly in (0,1)");
    a.validate();
    return a;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["format"] = "hcb-run-config";
    j["version"] = 1;
    // Always embed the resolved environment so the snapshot alone reproduces
    // every artifact.
    j["environment"] = ordered_json::parse(spec_to_json(cfg.resolve_environment()));
    j["agent"] = agent_to_json(cfg.agent);
    j["horizon"] = cfg.horizon;
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir;
    if (cfg.explicit_checkpoints.empty()) j["checkpoints"] = "powers-of-two";
    else j["checkpoints"] = cfg.explicit_checkpoints;
    j["write_trace"] = cfg.write_trace;
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    if (j.value("format", "") != "hcb-run-config")
        throw ConfigError("run config: missing format tag hcb-run-config");
    RunConfig cfg;
    if (!j.contains("environment"))
        throw ConfigError("run config: environment block is required");
    const auto& env = j.at("environment");
    if (env.is_object() && env.contains("generate")) {
        const auto& g = env.at("generate");
        cfg.generation.dim = g.at("dim").get<int>();
        cfg.generation.levels = g.at("levels").get<int>();
        cfg.generation.actions_per_level = g.at("actions_per_level").get<std::vector<int>>();
        cfg.generation.thresholds = g.at("thresholds").get<std::vector<double>>();
        cfg.generation.noise_sigma = g.at("noise_sigma").get<double>();
        cfg.generation.seed = g.value("seed", cfg.generation.seed);
    } else if (env.is_object() && env.contains("spec_file")) {
        std::ifstream in(env.at("spec_file").get<std::string>());
        if (!in) throw ConfigError("run config: environment.spec_file is not readable");
        std::stringstream ss;
        ss << in.rdbuf();
        cfg.environment = spec_from_json(ss.str());
    } else if (env.is_object()) {
        cfg.environment = spec_from_json(env.dump());
    } else {
        throw ConfigError("run config: environment must be a spec, generate block, or spec_file");
    }
    if (j.contains("agent")) cfg.agent = agent_from_json(j.at("agent"));
    cfg.horizon = j.value("horizon", cfg.horizon);
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("checkpoints") && j.at("checkpoints").is_array())
        cfg.explicit_checkpoints = j.at("checkpoints").get<std::vector<long>>();
    cfg.write_trace = j.value("write_trace", cfg.write_trace);
    cfg.validate();
    return cfg;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace

RunArtifact run(const RunConfig& config) {
    config.validate();
    const EnvironmentSpec spec = config.resolve_environment();
    const auto checkpoints = config.checkpoint_times();
    const fs::path out_dir = resolve_output_dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
        throw std::runtime_error("run: output_dir is not writable: " + out_dir.string());
    {
        // Probe writability before any simulation starts.
        std::ofstream probe(out_dir / ".write-probe", std::ios::binary);
        if (!probe) throw std::runtime_error("run: output_dir is not writable: " + out_dir.string());
    }
    fs::remove(out_dir / ".write-probe", ec);

    RunArtifact artifact;
    artifact.config_snapshot_path = (out_dir / "config_snapshot.json").string();
    write_file(artifact.config_snapshot_path, run_config_to_json(config));

    const std::string run_id = agent_kind_to_string(config.agent.kind);
    std::ostringstream csv;
    csv << metrics_csv_header(spec.levels);
    ordered_json summary;
    summary["format"] = "hcb-run-summary";
    summary["version"] = 1;
    summary["run_id"] = run_id;
    summary["per_seed"] = ordered_json::array();
    std::vector<SvgSeries> series;

    for (std::uint64_t seed : config.seeds) {
        auto res = run_single(spec, config.agent, seed, config.horizon, checkpoints,
                              config.write_trace);
        artifact.invariant_violations += res.potential_violations;
        SvgSeries s;
        s.label = "seed " + std::to_string(seed);
        for (const auto& cp : res.metrics.checkpoints()) {
            csv << metrics_csv_row(run_id, seed, cp);
            s.x.push_back(static_cast<double>(cp.t));
            s.y.push_back(cp.regret);
        }
        series.push_back(std::move(s));

        ordered_json js;
        js["seed"] = seed;
        js["final_regret"] = res.metrics.cumulative_regret();
        js["regret_high"] = res.metrics.regret_high();
        js["regret_low"] = res.metrics.regret_low();
        js["violations"] = res.metrics.violations();
        js["fallback_rounds"] = res.metrics.fallback_rounds();
        js["infeasible_rounds"] = res.metrics.infeasible_rounds();
        js["potential_violations"] = res.potential_violations;
        summary["per_seed"].push_back(js);

        if (config.write_trace)
            write_file(out_dir / ("trace_" + std::to_string(seed) + ".csv"), res.trace_csv);
    }

    artifact.metrics_csv_path = (out_dir / "metrics.csv").string();
    write_file(artifact.metrics_csv_path, csv.str());
    artifact.summary_json_path = (out_dir / "summary.json").string();
    summary["invariant_violations"] = artifact.invariant_violations;
    write_file(artifact.summary_json_path, summary.dump(2) + "\n");
    artifact.svg_path = (out_dir / "regret_curve.svg").string();
    write_file(artifact.svg_path, svg_line_chart("Cumulative regret (" + run_id + ")", "t",
                                                 "regret", series, true));
    return artifact;
}

namespace {

SweepCellResult run_cell(const EnvironmentSpec& spec, const RunConfig& base,
                         const SweepCell& cell) {
    SweepCellResult r;
    r.label = cell.label;
    const auto checkpoints = base.checkpoint_times();
    r.checkpoint_t = checkpoints;
    r.mean_avg_regret_at_checkpoints.assign(checkpoints.size(), 0.0);
    r.mean_violations.assign(spec.levels, 0.0);
    std::vector<double> finals;
    for (std::uint64_t seed : base.seeds) {
        try {
            auto res = run_single(spec, cell.agent, seed, base.horizon, checkpoints, false);
            finals.push_back(res.metrics.cumulative_regret());
            for (int h = 0; h < spec.levels; ++h)
                r.mean_violations[h] += static_cast<double>(res.metrics.violations()[h]);
            const auto& cps = res.metrics.checkpoints();
            for (std::size_t i = 0; i < cps.size(); ++i)
                r.mean_avg_regret_at_checkpoints[i] += cps[i].avg_regret;
        } catch (const std::exception& e) {
            ++r.failed_seeds;
            if (r.error.empty()) r.error = e.what();
        }
    }
    const auto n = static_cast<double>(finals.size());
    if (n > 0) {
        double mean = 0.0;
        for (double f : finals) mean += f;
        mean /= n;
        r.mean_final_regret = mean;
        if (n > 1) {
            double ss = 0.0;
            for (double f : finals) ss += (f - mean) * (f - mean);
            r.stderr_final_regret = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
        for (auto& v : r.mean_violations) v /= n;
        for (auto& v : r.mean_avg_regret_at_checkpoints) v /= n;
    }
    return r;
}

}  // namespace

std::vector<SweepCellResult> sweep_cells_serial(const EnvironmentSpec& spec, const RunConfig& base,
                                                const std::vector<SweepCell>& cells) {
    std::vector<SweepCellResult> results(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(spec, base, cells[i]);
    return results;
}

std::vector<SweepCellResult> sweep_cells_parallel(const EnvironmentSpec& spec,
                                                  const RunConfig& base,
                                                  const std::vector<SweepCell>& cells) {
    std::vector<SweepCellResult> results(cells.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(cells.size()); ++i)
        results[i] = run_cell(spec, base, cells[i]);
    return results;
}

SweepReport sweep(const RunConfig& base, const std::vector<SweepCell>& cells, bool parallel) {
    base.validate();
    if (cells.empty()) throw ConfigError("sweep: at least one cell is required");
    const EnvironmentSpec spec = base.resolve_environment();

    SweepReport report;
    report.cells = parallel ? sweep_cells_parallel(spec, base, cells)
                            : sweep_cells_serial(spec, base, cells);

    const fs::path out_dir = resolve_output_dir(base.output_dir);
    fs::create_directories(out_dir);

    std::ostringstream csv;
    csv << "# hcb-sweep-csv v1\n";
    csv << "cell,n_seeds,failed_seeds,mean_final_regret,stderr_final_regret";
    for (int h = 0; h < spec.levels; ++h) csv << ",mean_violations_l" << h;
    csv << '\n';
    std::vector<SvgSeries> series;
    for (const auto& c : report.cells) {
        char buf[64];
        csv << c.label << ',' << base.seeds.size() << ',' << c.failed_seeds;
        std::snprintf(buf, sizeof(buf), ",%.17g", c.mean_final_regret);
        csv << buf;
        std::snprintf(buf, sizeof(buf), ",%.17g", c.stderr_final_regret);
        csv << buf;
        for (double v : c.mean_violations) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            csv << buf;
        }
        csv << '\n';
        SvgSeries s;
        s.label = c.label;
        for (std::size_t i = 0; i < c.checkpoint_t.size(); ++i) {
            s.x.push_back(static_cast<double>(c.checkpoint_t[i]));
            s.y.push_back(c.mean_avg_regret_at_checkpoints[i]);
        }
        series.push_back(std::move(s));
    }
    report.csv_path = (out_dir / "sweep.csv").string();
    write_file(report.csv_path, csv.str());
    report.svg_path = (out_dir / "sweep_avg_regret.svg").string();
    write_file(report.svg_path,
               svg_line_chart("Mean average regret R_t/t", "t", "R_t/t", series, true));
    return report;
}

}  // namespace hcb
