#pragma once

#include "m2spec/covariance.hpp"
#include "m2spec/grid.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace m2spec {

/// Prior spectral field Psi, positive definite at every grid point
/// (certified at construction), with the pointwise inverse cached.
class Prior {
public:
    explicit Prior(MatrixField psi);

    const MatrixField& field() const { return field_; }
    const MatrixField& inverse() const { return inverse_; }
    const GridShape& shape() const { return field_.shape; }
    int channels() const { return field_.m; }

private:
    MatrixField field_;
    MatrixField inverse_;
};

/// Lagrange-multiplier coefficients {Q_k}. Only the canonical half of the
/// box is stored (zero lag first, Q_0 Hermitian); Q_{-k} = Q_k* is derived,
/// so the Hermitian symmetry of Q(zeta) holds by construction.
class DualCertificate {
public:
    DualCertificate() = default;
    static DualCertificate zeros(const LagBox& box, int m);

    const LagBox& box() const { return box_; }
    int channels() const { return m_; }

    /// Coefficient storage in box().half() order, m*m entries per half lag.
    std::vector<cdouble>& half_coeffs() { return half_; }
    const std::vector<cdouble>& half_coeffs() const { return half_; }

    cdouble* half_at(int h) { return half_.data() + static_cast<std::size_t>(h) * m_ * m_; }
    const cdouble* half_at(int h) const {
        return half_.data() + static_cast<std::size_t>(h) * m_ * m_;
    }

    /// Materializes all |Lambda| coefficients with Q_{-k} = Q_k*; Q_0 is
    /// re-symmetrized exactly.
    LagMatrixSet full_coefficients() const;

    /// sqrt(sum_k tr(Q_k Q_k*)) over the full box.
    double norm() const;

private:
    DualCertificate(LagBox box, int m) : box_(std::move(box)), m_(m) {}
    LagBox box_;
    int m_ = 0;
    std::vector<cdouble> half_;
};

/// Real coordinates for the optimizer: Q_0 packs as the diagonal followed by
/// re/im of the upper triangle; every other half lag packs re/im of all m^2
/// entries. pack(unpack(x)) == x.
std::size_t parameter_count(const LagBox& box, int m);
std::vector<double> pack_certificate(const DualCertificate& q);
DualCertificate unpack_certificate(const std::vector<double>& x, const LagBox& box, int m);

struct SolveOptions {
    double grad_tol = 1e-9;        // on ||g|| / (1 + ||Sigma||_F)
    double moment_tol = 1e-6;      // on ||Gamma(Phi) - Sigma||_F / ||Sigma||_F
    int max_iterations = 200;
    double armijo_c = 1e-4;
    double backtrack_beta = 0.5;
    double min_step = 1e-14;
    bool use_quasi_newton = false;  // limited-memory curvature pairs instead of exact Newton
};

struct SolveReport {
    int iterations = 0;
    double final_gradient_norm = 0.0;  // relative, the stopping quantity
    double final_dual_value = 0.0;
    double moment_residual = 0.0;
    int backtracking_steps = 0;
    std::vector<double> dual_values;  // value after each accepted step, starting at Q = 0
};

class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

class MaxIterationsExceededError : public std::runtime_error {
public:
    MaxIterationsExceededError(const std::string& what, SolveReport rep)
        : std::runtime_error(what), report(std::move(rep)) {}
    SolveReport report;
};

/// Line search collapsed below min_step: the moment data admits no
/// positive-definite witness spectrum.
class InfeasibleMomentsError : public std::runtime_error {
public:
    InfeasibleMomentsError(const std::string& what, SolveReport rep)
        : std::runtime_error(what), report(std::move(rep)) {}
    SolveReport report;
};

/// Discrete Itakura-Saito distance
///   (1/|N|) sum_l [log det(Phi^{-1} Psi) + tr(Psi^{-1}(Phi - Psi))](zeta_l);
/// nonnegative, zero iff the fields agree on the grid.
double is_distance(const MatrixField& phi, const MatrixField& psi);

/// True iff (Psi^{-1} + Q)(zeta_l) is positive definite at every grid point.
bool feasible(const DualCertificate& q, const Prior& psi);

/// J_Psi(Q) = <Q, Sigma> - integral log det(Psi^{-1} + Q) d nu_N.
double dual_value(const DualCertificate& q, const Prior& psi, const CovarianceSet& sigma);

/// Gradient of J_Psi in the real coordinates; the packed representation of
/// Sigma - Gamma((Psi^{-1} + Q)^{-1}). Zero exactly when moments match.
std::vector<double> dual_gradient(const DualCertificate& q, const Prior& psi,
                                  const CovarianceSet& sigma);

/// Hessian of J_Psi in the real coordinates, row-major P x P with
/// P = parameter_count. Symmetric; positive definite whenever N_j > 2 n_j.
std::vector<double> dual_hessian(const DualCertificate& q, const Prior& psi);

/// Damped Newton minimization of J_Psi over the feasible cone, started from
/// the given certificate (Q = 0 by default).
std::pair<DualCertificate, SolveReport> solve_dual(
    const Prior& psi, const CovarianceSet& sigma, const SolveOptions& opts = {},
    const std::optional<DualCertificate>& start = std::nullopt);

/// Phi(zeta_l) = (Psi^{-1} + Q)^{-1}(zeta_l) pointwise.
MatrixField primal_recover(const DualCertificate& q, const Prior& psi);

}  // namespace m2spec
