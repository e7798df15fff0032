#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcb/agents.hpp"
#include "hcb/environment.hpp"
#include "hcb/metrics.hpp"

namespace hcb {

struct GenerationParams {
    int dim = 5;
    int levels = 2;
    std::vector<int> actions_per_level = {3, 4};
    // Loose enough that the conservative cost screen opens up after a short
    // exploration phase (pilot-tuned); tight specs keep HC-UCB in fallback
    // for the whole horizon and its regret stays linear.
    std::vector<double> thresholds = {1.5, 1.5};
    double noise_sigma = 0.1;
    std::uint64_t seed = 42;
    ContextDistribution context_distribution = ContextDistribution::UniformBall;
};

struct RunConfig {
    std::optional<EnvironmentSpec> environment;  // wins over generation when set
    GenerationParams generation;
    AgentConfig agent;
    long horizon = 1000;
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "out";
    std::vector<long> explicit_checkpoints;      // empty: powers of two plus T
    bool write_trace = false;

    void validate() const;
    EnvironmentSpec resolve_environment() const;
    std::vector<long> checkpoint_times() const;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);

// One seed's trajectory, fully deterministic in (spec, agent config, seed).
struct SingleRunResult {
    std::uint64_t seed = 0;
    RunMetrics metrics;
    // Elliptical potential audit over every model touched by the run:
    // sum ||x||^2_{V^-1} <= 2 d ln(1 + n/(lambda d)) must hold exactly.
    long potential_violations = 0;
    std::string trace_csv;  // populated when tracing is on
};

SingleRunResult run_single(const EnvironmentSpec& spec, const AgentConfig& agent_cfg,
                           std::uint64_t seed, long horizon,
                           const std::vector<long>& checkpoints, bool trace = false);

struct RunArtifact {
    std::string config_snapshot_path;
    std::string metrics_csv_path;
    std::string summary_json_path;
    std::string svg_path;
    long invariant_violations = 0;
};

RunArtifact run(const RunConfig& config);

// One sweep cell = one agent configuration x all seeds.
struct SweepCell {
    std::string label;
    AgentConfig agent;
};

struct SweepCellResult {
    std::string label;
    long failed_seeds = 0;
    std::string error;  // first failure message, empty when clean
    double mean_final_regret = 0.0;
    double stderr_final_regret = 0.0;
    std::vector<double> mean_violations;
    std::vector<double> mean_avg_regret_at_checkpoints;
    std::vector<long> checkpoint_t;
};

struct SweepReport {
    std::vector<SweepCellResult> cells;
    std::string csv_path;
    std::string svg_path;
};

// Cells run independently; `parallel` selects the OpenMP path. Both paths
// produce identical results and artifacts.
SweepReport sweep(const RunConfig& base, const std::vector<SweepCell>& cells,
                  bool parallel = true);

std::vector<SweepCellResult> sweep_cells_serial(const EnvironmentSpec& spec, const RunConfig& base,
                                                const std::vector<SweepCell>& cells);
std::vector<SweepCellResult> sweep_cells_parallel(const EnvironmentSpec& spec, const RunConfig& base,
                                                  const std::vector<SweepCell>& cells);

// Output root: config output_dir, re-rooted under $HCB_OUTPUT_ROOT when set.
std::string resolve_output_dir(const std::string& configured);

}  // namespace hcb
