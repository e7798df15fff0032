#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hcb/harness.hpp"
#include "hcb/theory_checks.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hcb: hierarchical constrained bandit simulator"};
    app.require_subcommand(1);

    // run
    auto* cmd_run = app.add_subcommand("run", "execute a seeded experiment from a config file");
    std::string run_config_path;
    std::string override_output;
    long override_horizon = 0;
    std::string override_agent;
    double override_delta = 0.0;
    std::vector<std::uint64_t> override_seeds;
    bool trace_flag = false;
    cmd_run->add_option("--config", run_config_path, "run config JSON")->required();
    cmd_run->add_option("--output-dir", override_output, "override output directory");
    cmd_run->add_option("--horizon", override_horizon, "override horizon T");
    cmd_run->add_option("--agent", override_agent, "override agent kind");
    cmd_run->add_option("--delta", override_delta, "override confidence delta");
    cmd_run->add_option("--seeds", override_seeds, "override seed list");
    cmd_run->add_flag("--trace", trace_flag, "write per-round trace CSV");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "run a grid of agents over shared seeds");
    std::string sweep_config_path;
    std::vector<std::string> sweep_agents;
    bool sweep_serial = false;
    cmd_sweep->add_option("--config", sweep_config_path, "base run config JSON")->required();
    cmd_sweep->add_option("--agents", sweep_agents, "agent kinds forming the grid")->required();
    cmd_sweep->add_flag("--serial", sweep_serial, "use the serial reference path");

    // gapcheck
    auto* cmd_gap = app.add_subcommand("gapcheck", "decomposition gap sweep on random small MDPs");
    long gap_count = 200;
    std::uint64_t gap_seed = 1;
    int gap_max_states = 10, gap_max_actions = 4;
    bool gap_tightness = false;
    std::string gap_output = "out";
    cmd_gap->add_option("--count", gap_count, "number of random (mdp, decomposition) pairs");
    cmd_gap->add_option("--seed", gap_seed, "generation seed");
    cmd_gap->add_option("--max-states", gap_max_states, "state count upper bound");
    cmd_gap->add_option("--max-actions", gap_max_actions, "action count upper bound");
    cmd_gap->add_flag("--tightness", gap_tightness, "use the tightness construction instead");
    cmd_gap->add_option("--output-dir", gap_output, "report directory");

    // hardfamily
    auto* cmd_hard = app.add_subcommand("hardfamily", "generate a packed hard-instance family");
    int hf_dim = 1, hf_levels = 1;
    long hf_horizon = 100;
    double hf_sigma = 1.0;
    std::uint64_t hf_seed = 1;
    std::string hf_output = "out";
    cmd_hard->add_option("--dim", hf_dim, "context dimension d");
    cmd_hard->add_option("--levels", hf_levels, "hierarchy depth H");
    cmd_hard->add_option("--horizon", hf_horizon, "time horizon T");
    cmd_hard->add_option("--sigma", hf_sigma, "noise scale");
    cmd_hard->add_option("--seed", hf_seed, "generation seed");
    cmd_hard->add_option("--output-dir", hf_output, "spec + audit directory");

    // validate
    auto* cmd_validate = app.add_subcommand("validate", "check a config or spec file");
    std::string validate_config, validate_spec;
    cmd_validate->add_option("--config", validate_config, "run config JSON to validate");
    cmd_validate->add_option("--spec", validate_spec, "environment spec JSON to validate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_run) {
            auto cfg = hcb::run_config_from_json(read_file(run_config_path));
            if (!override_output.empty()) cfg.output_dir = override_output;
            if (override_horizon > 0) cfg.horizon = override_horizon;
            if (!override_agent.empty()) cfg.agent.kind = hcb::agent_kind_from_string(override_agent);
            if (override_delta > 0.0) cfg.agent.delta = override_delta;
            if (!override_seeds.empty()) cfg.seeds = override_seeds;
            if (trace_flag) cfg.write_trace = true;
            cfg.validate();
            auto artifact = hcb::run(cfg);
            std::cout << "wrote " << artifact.metrics_csv_path << "\n";
            if (artifact.invariant_violations > 0) {
                std::cerr << "invariant violations: " << artifact.invariant_violations << "\n";
                return 2;
            }
            return 0;
        }

        if (*cmd_sweep) {
            auto base = hcb::run_config_from_json(read_file(sweep_config_path));
            std::vector<hcb::SweepCell> cells;
            for (const auto& name : sweep_agents) {
                hcb::SweepCell c;
                c.label = name;
                c.agent = base.agent;
                c.agent.kind = hcb::agent_kind_from_string(name);
                cells.push_back(std::move(c));
            }
            auto report = hcb::sweep(base, cells, !sweep_serial);
            std::cout << "wrote " << report.csv_path << "\n";
            long failures = 0;
            for (const auto& c : report.cells) {
                failures += c.failed_seeds;
                if (!c.error.empty())
                    std::cerr << "cell " << c.label << ": " << c.failed_seeds
                              << " failed seeds (" << c.error << ")\n";
            }
            return failures > 0 ? 2 : 0;
        }

        if (*cmd_gap) {
            if (gap_count < 1) throw hcb::ConfigError("gapcheck: count must be >= 1");
            fs::create_directories(gap_output);
            std::ostringstream csv;
            csv << "# hcb-gapcheck-csv v1\npair,gamma,max_gap,epsilon,bound_stated,bound_proved,ratio\n";
            for (long i = 0; i < gap_count; ++i) {
                hcb::SmallMdp mdp;
                hcb::HierarchicalDecomposition decomp;
                if (gap_tightness) {
                    auto t = hcb::tightness_instance();
                    mdp = t.mdp;
                    decomp = t.decomp;
                } else {
                    hcb::CounterRng rng(gap_seed, hcb::Stream::Generation, i);
                    mdp = hcb::random_mdp(rng, gap_max_states, gap_max_actions);
                    decomp = hcb::random_decomposition(mdp, rng);
                }
                auto rep = hcb::gap_check(mdp, decomp);
                const double ratio = rep.bound_stated > 0.0 ? rep.max_gap / rep.bound_stated : 0.0;
                csv << i << ',' << fmt(mdp.gamma) << ',' << fmt(rep.max_gap) << ','
                    << fmt(rep.epsilon) << ',' << fmt(rep.bound_stated) << ','
                    << fmt(rep.bound_proved) << ',' << fmt(ratio) << '\n';
            }
            const auto path = fs::path(gap_output) / "gapcheck.csv";
            write_file(path, csv.str());
            std::cout << "wrote " << path.string() << "\n";
            return 0;
        }

        if (*cmd_hard) {
            auto fam = hcb::generate_hard_family(hf_dim, hf_levels, hf_horizon, hf_sigma, hf_seed);
            const double min_dist = fam.audit();
            fs::create_directories(hf_output);
            for (int i = 0; i < fam.count; ++i) {
                char name[48];
                std::snprintf(name, sizeof(name), "member_%03d.json", i);
                write_file(fs::path(hf_output) / name,
                           hcb::spec_to_json(hcb::family_member_spec(fam, i)));
            }
            std::ostringstream audit;
            audit << "# hcb-hardfamily-audit v1\n";
            audit << "count," << fam.count << "\n";
            audit << "separation," << fmt(fam.separation) << "\n";
            audit << "c_constant," << fmt(fam.c_constant) << "\n";
            audit << "min_pairwise_distance," << fmt(min_dist) << "\n";
            const auto path = fs::path(hf_output) / "audit.csv";
            write_file(path, audit.str());
            std::cout << "wrote " << fam.count << " spec files, min pairwise distance "
                      << fmt(min_dist) << " (required " << fmt(fam.separation) << ")\n";
            return 0;
        }

        if (*cmd_validate) {
            if (validate_config.empty() && validate_spec.empty())
                throw hcb::ConfigError("validate: pass --config and/or --spec");
            if (!validate_config.empty()) {
                hcb::run_config_from_json(read_file(validate_config));
                std::cout << validate_config << ": ok\n";
            }
            if (!validate_spec.empty()) {
                hcb::spec_from_json(read_file(validate_spec));
                std::cout << validate_spec << ": ok\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
