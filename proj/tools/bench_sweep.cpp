// Compares the serial reference sweep against the OpenMP path and checks
// that both produce identical cell results.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "hcb/harness.hpp"

int main(int argc, char** argv) {
    long horizon = 2000;
    int n_seeds = 16;
    if (argc > 1) horizon = std::atol(argv[1]);
    if (argc > 2) n_seeds = std::atoi(argv[2]);

    hcb::RunConfig base;
    base.horizon = horizon;
    base.seeds.clear();
    for (int i = 0; i < n_seeds; ++i) base.seeds.push_back(1000 + i);
    const auto spec = base.resolve_environment();

    std::vector<hcb::SweepCell> cells;
    for (const char* kind : {"hcucb", "uniform-random", "epsilon-greedy", "unconstrained-ucb"}) {
        hcb::SweepCell c;
        c.label = kind;
        c.agent = base.agent;
        c.agent.kind = hcb::agent_kind_from_string(kind);
        cells.push_back(std::move(c));
    }

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    auto serial = hcb::sweep_cells_serial(spec, base, cells);
    auto t1 = clock::now();
    auto parallel = hcb::sweep_cells_parallel(spec, base, cells);
    auto t2 = clock::now();

    const double ts = std::chrono::duration<double>(t1 - t0).count();
    const double tp = std::chrono::duration<double>(t2 - t1).count();

    bool identical = true;
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (serial[i].mean_final_regret != parallel[i].mean_final_regret ||
            serial[i].stderr_final_regret != parallel[i].stderr_final_regret)
            identical = false;

    std::printf("cells=%zu seeds=%d horizon=%ld\n", cells.size(), n_seeds, horizon);
    std::printf("serial:   %.3f s\n", ts);
    std::printf("parallel: %.3f s  (speedup %.2fx)\n", tp, ts / tp);
    std::printf("results identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
