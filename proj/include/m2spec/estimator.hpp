#pragma once

#include "m2spec/covariance.hpp"
#include "m2spec/grid.hpp"
#include "m2spec/isdual.hpp"
#include "m2spec/models.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace m2spec {

enum class PriorKind { ConstantSigma0, Identity, UserField };

/// Full recipe for the moment-matching estimate: lag box, prior choice,
/// ridge, and solver options. epsilon <= 0 selects the scale-relative
/// default ridge.
struct EstimatorSpec {
    std::vector<int> lag_radii;
    PriorKind prior_kind = PriorKind::ConstantSigma0;
    std::optional<MatrixField> prior_field;
    double epsilon = 0.0;
    SolveOptions solver;
};

struct WindowSpec {
    enum class Kind { Rectangular, Bartlett };
    Kind kind = Kind::Rectangular;
    std::vector<int> widths;
};

/// Covariances from the regularized periodogram, prior per spec, dual solve
/// from Q = 0, primal recovery.
std::pair<MatrixField, SolveReport> estimate_is(const VectorField& y, const EstimatorSpec& spec);

/// The solve-and-recover tail of estimate_is for externally supplied
/// moments.
std::pair<MatrixField, SolveReport> estimate_from_moments(const CovarianceSet& sigma,
                                                          const Prior& prior,
                                                          const SolveOptions& opts);

/// Lag-window estimate sum_{|k_j| < width_j} w(k) C_k e^{-i<k,theta_l>} over
/// the circular covariances C_k (no ridge); Hermitian, not necessarily
/// positive definite.
MatrixField windowed_periodogram(const VectorField& y, const WindowSpec& w);

struct Peak {
    std::vector<int> index;    // 0-based grid point
    std::vector<double> freqs;  // mapped into (-pi, pi]
    double value = 0.0;        // squared Frobenius norm at the peak
};

/// Argmax of ||Phi(zeta_l)||_F^2 over the grid; ties break to the lowest
/// row-major index.
Peak peak_find(const MatrixField& phi);

struct MethodSpec {
    enum class Kind { Is, Rect, Bart };
    Kind kind = Kind::Is;
    WindowSpec window;  // rect/bart only

    std::string name() const;
};

struct TrialResult {
    int trial = 0;
    std::string method;
    double peak_error = 0.0;
    double spectrum_rel_error = 0.0;  // NaN for the sinusoid family
    std::vector<int> peak_index;      // 1-based, matching reported output
    std::uint64_t seed = 0;
};

struct MonteCarloConfig {
    enum class Family { Sinusoid, Ar };
    Family family = Family::Sinusoid;
    int trials = 1;
    std::uint64_t base_seed = 0;
    GridShape shape;
    double amplitude = 1.0;
    std::array<double, 3> pole_moduli{0.3, 0.3, 0.3};
    std::array<int, 3> burn_in{200, 200, 200};
    int antenna_ratio = 20;
    double noise_var = 2.0;
    /// When set, every trial reuses these frequencies and only the noise is
    /// redrawn; otherwise theta is drawn uniformly per trial.
    std::optional<std::array<double, 3>> fixed_freqs;
    EstimatorSpec is_spec;
    std::vector<MethodSpec> methods;
};

/// Paired seeded trials: all methods see the same realization per trial;
/// results are ordered by (trial, method) regardless of scheduling.
std::vector<TrialResult> monte_carlo(const MonteCarloConfig& cfg);

/// ||A - B||_F / ||B||_F with all grid points and entries stacked.
double relative_field_error(const MatrixField& a, const MatrixField& b);

}  // namespace m2spec
