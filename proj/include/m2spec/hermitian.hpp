#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace m2spec {

using cdouble = std::complex<double>;

/// Cholesky failure: the matrix is not in the positive-definite cone.
/// Feasibility checks in the dual solver rely on this signal.
class NotPositiveDefiniteError : public std::runtime_error {
public:
    explicit NotPositiveDefiniteError(const std::string& what) : std::runtime_error(what) {}
};

/// Input drifted too far from A = A* to be treated as Hermitian.
class NotHermitianError : public std::runtime_error {
public:
    explicit NotHermitianError(const std::string& what) : std::runtime_error(what) {}
};

/// Max relative asymmetry max_ij |a_ij - conj(a_ji)| / max_ij |a_ij|.
double hermitian_drift(const cdouble* a, int m);

/// Copies a into out applying the drift policy: below 1e-13 the input is
/// taken as is, up to 1e-10 it is symmetrized to (A + A*)/2, and larger
/// drift throws NotHermitianError.
void prepare_hermitian(const cdouble* a, int m, cdouble* out);

/// Lower Cholesky factor with positive real diagonal, L L* = A. Any
/// nonpositive pivot fails; success is the positive-definiteness
/// certificate. Returns false instead of throwing when `lower` is computed
/// through try_cholesky.
bool try_cholesky(const cdouble* a, int m, cdouble* lower);
void cholesky(const cdouble* a, int m, cdouble* lower);

/// Drift-tolerant variant for values that are Hermitian by construction:
/// reads only the lower triangle (diagonal taken real), so roundoff
/// asymmetry near singular points cannot trip the drift check.
bool try_cholesky_lower(const cdouble* a, int m, cdouble* lower);

/// log det A for Hermitian positive definite A, as 2 sum log diag(L).
double logdet_pd(const cdouble* a, int m);

/// A^{-1} for Hermitian positive definite A via the Cholesky factor;
/// the result is symmetrized after the triangular solves.
void inverse_pd(const cdouble* a, int m, cdouble* inv);

// Factor-reusing variants for pointwise grid sweeps (one factorization,
// several consumers).
double logdet_from_cholesky(const cdouble* lower, int m);
void inverse_from_cholesky(const cdouble* lower, int m, cdouble* inv);

// Vector-valued conveniences for small one-off uses (tests, setup code).
std::vector<cdouble> cholesky(std::span<const cdouble> a, int m);
double logdet_pd(std::span<const cdouble> a, int m);
std::vector<cdouble> inverse_pd(std::span<const cdouble> a, int m);

}  // namespace m2spec
