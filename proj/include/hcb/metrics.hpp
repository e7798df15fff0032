#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hcb/environment.hpp"

namespace hcb {

// Per-round log entry, carrying the true expected values so regret and
// violations are computable without re-touching the environment.
struct RoundRecord {
    Eigen::VectorXd context;
    CompositeAction action;
    double expected_reward = 0.0;
    std::vector<double> expected_costs;
    bool fallback_used = false;
};

struct Checkpoint {
    long t = 0;
    double regret = 0.0;
    double regret_high = 0.0;
    double regret_low = 0.0;
    double avg_regret = 0.0;
    std::vector<long> violations;
    long fallback_rounds = 0;
};

// Cumulative regret with its high/low decomposition, violation counts, and
// checkpointed summaries. Pure fold over round records.
class RunMetrics {
public:
    explicit RunMetrics(int levels) : violations_(levels, 0) {}

    void accumulate(const EnvironmentSpec& spec, const RoundRecord& record);
    void take_checkpoint();

    long rounds() const { return rounds_; }
    double cumulative_regret() const { return regret_; }
    double regret_high() const { return regret_high_; }
    double regret_low() const { return regret_low_; }
    const std::vector<long>& violations() const { return violations_; }
    long fallback_rounds() const { return fallback_rounds_; }
    long infeasible_rounds() const { return infeasible_rounds_; }
    const std::vector<Checkpoint>& checkpoints() const { return checkpoints_; }

private:
    long rounds_ = 0;
    double regret_ = 0.0;
    double regret_high_ = 0.0;
    double regret_low_ = 0.0;
    std::vector<long> violations_;
    long fallback_rounds_ = 0;
    long infeasible_rounds_ = 0;
    std::vector<Checkpoint> checkpoints_;
};

struct SublinearityReport {
    std::vector<long> checkpoint_t;
    std::vector<double> avg_regret;         // R_t / t
    std::vector<double> high_low_ratio;     // R_H / R_L, NaN when R_L == 0
    std::optional<double> exponent;         // kappa of R_t ~ C t^kappa, log-log fit
};

// Needs at least 3 checkpoints. Exponent is absent for all-zero regret.
SublinearityReport sublinearity_summary(const std::vector<Checkpoint>& checkpoints);
SublinearityReport sublinearity_summary(const RunMetrics& metrics);

// Versioned CSV schema: one row per checkpoint.
std::string metrics_csv_header(int levels);
std::string metrics_csv_row(const std::string& run_id, std::uint64_t seed, const Checkpoint& cp);

}  // namespace hcb
