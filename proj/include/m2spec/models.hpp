#pragma once

#include "m2spec/grid.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace m2spec {

/// Two-channel 3-d complex sinusoid in noise: N = (samples per pulse,
/// pulses, antennas), channel 2 lags channel 1 by the antenna-ratio phase
/// M * theta_3.
struct SinusoidConfig {
    GridShape shape;                 // d = 3
    double amplitude = 1.0;          // a >= 0
    std::array<double, 3> freqs{};   // theta in (-pi, pi]
    int antenna_ratio = 20;          // M
    double noise_var = 2.0;          // sigma^2 per complex sample
    std::uint64_t seed = 0;
};

/// Two-channel 3-d AR-in-noise field. The driving recursion
/// x(t) = sum_j rho_j e^{i theta_j} x(t - e_j) + w(t) is run with zero
/// boundary on a grid enlarged by burn_in per axis; only the trailing N
/// block is kept. Var(w) = 1.
struct ArConfig {
    GridShape shape;                    // d = 3
    std::array<double, 3> pole_moduli{};  // rho_j in [0,1), sum < 1
    std::array<double, 3> freqs{};
    int antenna_ratio = 20;
    double noise_var = 2.0;
    std::array<int, 3> burn_in{200, 200, 200};
    std::uint64_t seed = 0;
};

/// 2x2 phase-shift matrix [[1, e^{-i phase}], [e^{i phase}, 1]]; rank one
/// plus nothing: eigenvalues are 0 and 2.
std::array<cdouble, 4> phase_shift_matrix(double phase);

struct GroundTruth {
    enum class Kind { IdealSinusoid, RationalAr };
    Kind kind = Kind::RationalAr;
    std::array<double, 3> freqs{};
    double amplitude = 1.0;             // sinusoid kind
    std::array<double, 3> pole_moduli{};  // AR kind
    double drive_var = 1.0;             // Var(w) of the AR recursion
    double noise_var = 2.0;
    int antenna_ratio = 20;

    static GroundTruth ideal_sinusoid(double amplitude, std::array<double, 3> freqs,
                                      int antenna_ratio, double noise_var);
    static GroundTruth rational_ar(std::array<double, 3> pole_moduli,
                                   std::array<double, 3> freqs, int antenna_ratio,
                                   double noise_var);
};

/// The singular line-spectrum part of the ideal sinusoid truth, kept
/// symbolic: a Dirac atom of weight 2 pi a^2 R at theta.
struct SpectralAtom {
    std::array<double, 3> freqs{};
    double amplitude = 1.0;
    std::array<cdouble, 4> r{};
};

/// Rational kind: the exact spectrum on the grid. Ideal kind: the flat
/// sigma^2 I background plus the atom descriptor.
struct TrueSpectrum {
    MatrixField field;
    std::optional<SpectralAtom> atom;
};

VectorField simulate_sinusoid(const SinusoidConfig& cfg);
VectorField simulate_ar(const ArConfig& cfg);
TrueSpectrum true_spectrum(const GroundTruth& truth, const GridShape& shape);

}  // namespace m2spec
