#include "m2spec/hermitian.hpp"

#include <algorithm>
#include <cmath>

namespace m2spec {

namespace {

constexpr double kDriftIgnore = 1e-13;
constexpr double kDriftReject = 1e-10;

// Factorization of a prepared (exactly Hermitian-stored) matrix. Strict
// pivot test: any pivot <= 0 is a failure.
bool cholesky_prepared(const cdouble* a, int m, cdouble* lower) {
    std::fill(lower, lower + static_cast<std::size_t>(m) * m, cdouble(0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            cdouble sum = a[i * m + j];
            for (int k = 0; k < j; ++k) sum -= lower[i * m + k] * std::conj(lower[j * m + k]);
            if (i == j) {
                const double pivot = sum.real();
                if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
                lower[i * m + i] = std::sqrt(pivot);
            } else {
                lower[i * m + j] = sum / lower[j * m + j].real();
            }
        }
    }
    return true;
}

}  // namespace

double hermitian_drift(const cdouble* a, int m) {
    double scale = 0.0;
    double drift = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            scale = std::max(scale, std::abs(a[i * m + j]));
            drift = std::max(drift, std::abs(a[i * m + j] - std::conj(a[j * m + i])));
        }
    }
    if (scale == 0.0) return 0.0;
    return drift / scale;
}

void prepare_hermitian(const cdouble* a, int m, cdouble* out) {
    const double drift = hermitian_drift(a, m);
    if (drift > kDriftReject)
        throw NotHermitianError("matrix is not Hermitian (relative drift " +
                                std::to_string(drift) + ")");
    if (drift <= kDriftIgnore) {
        std::copy(a, a + static_cast<std::size_t>(m) * m, out);
        return;
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            out[i * m + j] = 0.5 * (a[i * m + j] + std::conj(a[j * m + i]));
}

bool try_cholesky(const cdouble* a, int m, cdouble* lower) {
    std::vector<cdouble> prepared(static_cast<std::size_t>(m) * m);
    prepare_hermitian(a, m, prepared.data());
    return cholesky_prepared(prepared.data(), m, lower);
}

bool try_cholesky_lower(const cdouble* a, int m, cdouble* lower) {
    return cholesky_prepared(a, m, lower);
}

void cholesky(const cdouble* a, int m, cdouble* lower) {
    if (!try_cholesky(a, m, lower))
        throw NotPositiveDefiniteError("Cholesky failed: matrix is not positive definite");
}

double logdet_from_cholesky(const cdouble* lower, int m) {
    double logdet = 0.0;
    for (int i = 0; i < m; ++i) logdet += std::log(lower[i * m + i].real());
    return 2.0 * logdet;
}

double logdet_pd(const cdouble* a, int m) {
    std::vector<cdouble> lower(static_cast<std::size_t>(m) * m);
    cholesky(a, m, lower.data());
    return logdet_from_cholesky(lower.data(), m);
}

void inverse_from_cholesky(const cdouble* lower, int m, cdouble* inv) {
    // Column-by-column solve of L L* X = I.
    std::vector<cdouble> col(m);
    for (int c = 0; c < m; ++c) {
        for (int i = 0; i < m; ++i) {
            cdouble sum = (i == c) ? cdouble(1.0) : cdouble(0.0);
            for (int k = 0; k < i; ++k) sum -= lower[i * m + k] * col[k];
            col[i] = sum / lower[i * m + i].real();
        }
        for (int i = m - 1; i >= 0; --i) {
            cdouble sum = col[i];
            for (int k = i + 1; k < m; ++k) sum -= std::conj(lower[k * m + i]) * col[k];
            col[i] = sum / lower[i * m + i].real();
        }
        for (int i = 0; i < m; ++i) inv[i * m + c] = col[i];
    }

    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const cdouble sym = 0.5 * (inv[i * m + j] + std::conj(inv[j * m + i]));
            inv[i * m + j] = sym;
            inv[j * m + i] = std::conj(sym);
        }
        inv[i * m + i] = inv[i * m + i].real();
    }
}

void inverse_pd(const cdouble* a, int m, cdouble* inv) {
    std::vector<cdouble> lower(static_cast<std::size_t>(m) * m);
    cholesky(a, m, lower.data());
    inverse_from_cholesky(lower.data(), m, inv);
}

std::vector<cdouble> cholesky(std::span<const cdouble> a, int m) {
    std::vector<cdouble> lower(static_cast<std::size_t>(m) * m);
    cholesky(a.data(), m, lower.data());
    return lower;
}

double logdet_pd(std::span<const cdouble> a, int m) { return logdet_pd(a.data(), m); }

std::vector<cdouble> inverse_pd(std::span<const cdouble> a, int m) {
    std::vector<cdouble> inv(static_cast<std::size_t>(m) * m);
    inverse_pd(a.data(), m, inv.data());
    return inv;
}

}  // namespace m2spec
