#pragma once

#include "m2spec/grid.hpp"

namespace m2spec {

/// Matrix moments {Sigma_k} over a lag box, with Sigma_{-k} = Sigma_k*.
using CovarianceSet = LagMatrixSet;

/// Throws std::invalid_argument naming the first lag whose conjugate
/// symmetry Sigma_{-k} = Sigma_k* is violated beyond `tol` (relative).
void require_lag_symmetry(const CovarianceSet& sigma, double tol = 1e-10);

/// sqrt(sum_k ||Sigma_k||_F^2), the natural norm on lag-indexed sets.
double lag_set_norm(const LagMatrixSet& s);

/// The regularized sample spectrum (1/|N|) yhat yhat* + (eps/|N|) I,
/// positive definite at every grid point by construction.
struct Periodogram {
    MatrixField field;
    double epsilon = 0.0;
};

/// yhat(zeta_l) = sum_t y(t) e^{-i<t,theta_l>}, channelwise.
VectorField finite_fourier(const VectorField& y);

Periodogram periodogram(const VectorField& y, double epsilon);

/// Scale-relative default ridge: 1e-6 * trace of the raw zero-lag sample
/// covariance divided by the channel count.
double default_ridge_epsilon(const VectorField& y);

/// Sigma_k = integral of e^{i<k,theta>} against the periodogram; equals
/// moment_map(p.field, box), so the moments are feasible with witness
/// p.field.
CovarianceSet covariance_from_periodogram(const Periodogram& p, const LagBox& box);

/// Single circular correlation (1/|N|) sum_s y((s+k) mod N) y(s)* plus the
/// ridge at k = 0; valid whenever |k_j| <= N_j - 1. O(|N| m^2) per lag.
void circular_covariance_lag(const VectorField& y, const Lag& k, double epsilon, cdouble* out);

/// Direct-sum reference for covariance_from_periodogram, kept for tests and
/// the benchmark; O(|N| |Lambda| m^2).
CovarianceSet covariance_direct_oracle(const VectorField& y, const LagBox& box, double epsilon);

}  // namespace m2spec
