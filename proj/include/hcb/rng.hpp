#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace hcb {

// Counter-based pseudo-random stream. Every draw is a pure function of
// (seed, stream, round, draw index), so adding draws to one stream never
// perturbs another and replays are bitwise reproducible.
enum class Stream : std::uint64_t {
    Context = 0,
    Noise = 1,
    Agent = 2,
    Generation = 3,
};

class CounterRng {
public:
    CounterRng(std::uint64_t seed, Stream stream, std::uint64_t round = 0)
        : seed_(seed), stream_(static_cast<std::uint64_t>(stream)), round_(round) {}

    void set_round(std::uint64_t round) {
        round_ = round;
        draw_ = 0;
    }

    std::uint64_t next_u64() {
        std::uint64_t x = mix(seed_ ^ 0x9e3779b97f4a7c15ULL);
        x = mix(x ^ stream_ * 0xbf58476d1ce4e5b9ULL);
        x = mix(x ^ round_ * 0x94d049bb133111ebULL);
        x = mix(x ^ draw_ * 0xd6e8feb86659fd93ULL);
        ++draw_;
        return x;
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one value per call, cached pair unused
    // on purpose so the draw count stays a pure function of calls made.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    std::uint64_t uniform_index(std::uint64_t n) {
        // n is tiny here; modulo bias is below any tested tolerance.
        return next_u64() % n;
    }

    // Uniform on the unit ball in R^d.
    Eigen::VectorXd unit_ball(int dim) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal();
        const double norm = v.norm();
        if (norm == 0.0) return Eigen::VectorXd::Zero(dim);
        const double radius = std::pow(uniform(), 1.0 / dim);
        return v * (radius / norm);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t round_;
    std::uint64_t draw_ = 0;
};

}  // namespace hcb
