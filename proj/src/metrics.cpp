#include "hcb/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hcb {

void RunMetrics::accumulate(const EnvironmentSpec& spec, const RoundRecord& record) {
    ++rounds_;
    if (record.fallback_used) ++fallback_rounds_;
    for (int h = 0; h < spec.levels; ++h)
        if (record.expected_costs[h] > spec.thresholds[h] + 1e-12) ++violations_[h];

    const auto best = best_feasible(spec, record.context);
    if (!best) {
        ++infeasible_rounds_;
        return;
    }

    // High share: optimal value minus the best feasible completion of the
    // chosen level-0 action. With no feasible completion the whole shortfall
    // is attributed to the high level.
    const auto cond = best_feasible_given_first(spec, record.context, record.action.indices[0]);
    const double cond_value = cond ? cond->value : record.expected_reward;
    regret_high_ += best->value - cond_value;
    regret_low_ += cond_value - record.expected_reward;
    regret_ += best->value - record.expected_reward;
}

void RunMetrics::take_checkpoint() {
    Checkpoint cp;
    cp.t = rounds_;
    cp.regret = regret_;
    cp.regret_high = regret_high_;
    cp.regret_low = regret_low_;
    cp.avg_regret = rounds_ > 0 ? regret_ / static_cast<double>(rounds_) : 0.0;
    cp.violations = violations_;
    cp.fallback_rounds = fallback_rounds_;
    checkpoints_.push_back(std::move(cp));
}

SublinearityReport sublinearity_summary(const RunMetrics& metrics) {
    return sublinearity_summary(metrics.checkpoints());
}

SublinearityReport sublinearity_summary(const std::vector<Checkpoint>& cps) {
    if (cps.size() < 3) throw std::invalid_argument("sublinearity_summary: need >= 3 checkpoints");
    SublinearityReport rep;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (const auto& cp : cps) {
        rep.checkpoint_t.push_back(cp.t);
        rep.avg_regret.push_back(cp.avg_regret);
        rep.high_low_ratio.push_back(cp.regret_low != 0.0
                                         ? cp.regret_high / cp.regret_low
                                         : std::numeric_limits<double>::quiet_NaN());
        if (cp.t > 0 && cp.regret > 0.0) {
            const double x = std::log(static_cast<double>(cp.t));
            const double y = std::log(cp.regret);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
    }
    if (n >= 2) {
        const double denom = n * sxx - sx * sx;
        if (denom > 0.0) rep.exponent = (n * sxy - sx * sy) / denom;
    }
    return rep;
}

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string metrics_csv_header(int levels) {
    std::ostringstream os;
    os << "# hcb-metrics-csv v1\n";
    os << "run_id,seed,t,regret,regret_high,regret_low";
    for (int h = 0; h < levels; ++h) os << ",violations_l" << h;
    os << ",fallback_rounds,avg_regret\n";
    return os.str();
}

std::string metrics_csv_row(const std::string& run_id, std::uint64_t seed, const Checkpoint& cp) {
    std::ostringstream os;
    os << run_id << ',' << seed << ',' << cp.t << ',' << fmt(cp.regret) << ','
       << fmt(cp.regret_high) << ',' << fmt(cp.regret_low);
    for (long v : cp.violations) os << ',' << v;
    os << ',' << cp.fallback_rounds << ',' << fmt(cp.avg_regret) << '\n';
    return os.str();
}

}  // namespace hcb
