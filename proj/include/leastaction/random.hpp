#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace leastaction {

// Seeded Gaussian sampler. Built on mt19937_64 (whose output sequence is
// fixed by the standard) plus an explicit Box-Muller transform, so the same
// seed yields the same stream on every platform and compiler. The standard
// library's normal_distribution is implementation-defined and would break
// the byte-identical-rerun contract across toolchains.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are generated lazily.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();  // avoid log(0)
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace leastaction
