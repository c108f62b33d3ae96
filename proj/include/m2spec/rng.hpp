#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace m2spec {

/// Seeded generator with explicit draw formulas so that realizations are
/// bit-identical for a given seed independent of the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe under log().
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform in [-pi, pi).
    double uniform_angle() { return -std::numbers::pi + 2.0 * std::numbers::pi * uniform(); }

    /// Circular complex Gaussian with E|w|^2 = variance (re/im each
    /// N(0, variance/2)), via the polar Box-Muller form.
    std::complex<double> complex_gaussian(double variance) {
        const double radius = std::sqrt(-variance * std::log(uniform_open()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace m2spec
