#include "m2spec/covariance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace m2spec {

void require_lag_symmetry(const CovarianceSet& sigma, double tol) {
    const int m = sigma.m;
    double scale = lag_set_norm(sigma);
    if (scale == 0.0) scale = 1.0;
    for (std::size_t i = 0; i < sigma.box.size(); ++i) {
        Lag neg = sigma.box.lags()[i];
        for (int& c : neg) c = -c;
        const cdouble* sk = sigma.at(static_cast<int>(i));
        const cdouble* sneg = sigma.at(sigma.box.index_of(neg));
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                if (std::abs(sneg[r * m + c] - std::conj(sk[c * m + r])) > tol * scale)
                    throw std::invalid_argument(
                        "covariance set violates Sigma_{-k} = Sigma_k* at lag index " +
                        std::to_string(i));
    }
}

double lag_set_norm(const LagMatrixSet& s) {
    double sum = 0.0;
    for (const cdouble& v : s.values) sum += std::norm(v);
    return std::sqrt(sum);
}

VectorField finite_fourier(const VectorField& y) {
    return dft_field(y, DftDirection::Forward);
}

Periodogram periodogram(const VectorField& y, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("periodogram: epsilon must be > 0");
    const VectorField yhat = finite_fourier(y);
    const int m = y.m;
    const std::int64_t total = y.shape.total();
    const double inv_total = 1.0 / static_cast<double>(total);
    const double ridge = epsilon * inv_total;

    MatrixField field(y.shape, m);
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < total; ++p) {
        const cdouble* v = yhat.at(p);
        cdouble* out = field.at(p);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                out[r * m + c] = inv_total * v[r] * std::conj(v[c]);
        for (int r = 0; r < m; ++r) out[r * m + r] += ridge;
    }
    return Periodogram{std::move(field), epsilon};
}

double default_ridge_epsilon(const VectorField& y) {
    const std::int64_t total = y.shape.total();
    double trace = 0.0;
    for (std::int64_t p = 0; p < total; ++p) {
        const cdouble* v = y.at(p);
        for (int c = 0; c < y.m; ++c) trace += std::norm(v[c]);
    }
    trace /= static_cast<double>(total);
    return 1e-6 * trace / y.m;
}

CovarianceSet covariance_from_periodogram(const Periodogram& p, const LagBox& box) {
    return moment_map(p.field, box);
}

void circular_covariance_lag(const VectorField& y, const Lag& k, double epsilon, cdouble* out) {
    const GridShape& shape = y.shape;
    if (static_cast<int>(k.size()) != shape.dim())
        throw std::invalid_argument("circular_covariance_lag: lag dimension mismatch");
    bool zero_lag = true;
    for (std::size_t j = 0; j < k.size(); ++j) {
        if (std::abs(k[j]) > shape.dims()[j] - 1)
            throw std::invalid_argument("circular_covariance_lag: |k_j| must be < N_j");
        if (k[j] != 0) zero_lag = false;
    }

    const int m = y.m;
    const std::int64_t total = shape.total();
    std::fill(out, out + static_cast<std::size_t>(m) * m, cdouble(0.0));
    std::vector<int> shifted(shape.dim());
    for (std::int64_t s = 0; s < total; ++s) {
        const std::vector<int> point = shape.point_at(s);
        for (int j = 0; j < shape.dim(); ++j) {
            int t = point[j] + k[j];
            const int n = shape.dims()[j];
            if (t >= n) t -= n;
            if (t < 0) t += n;
            shifted[j] = t;
        }
        const cdouble* a = y.at(shape.index_of(shifted));
        const cdouble* b = y.at(s);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                out[r * m + c] += a[r] * std::conj(b[c]);
    }
    const double inv_total = 1.0 / static_cast<double>(total);
    for (int e = 0; e < m * m; ++e) out[e] *= inv_total;
    if (zero_lag)
        for (int r = 0; r < m; ++r) out[r * m + r] += epsilon * inv_total;
}

CovarianceSet covariance_direct_oracle(const VectorField& y, const LagBox& box, double epsilon) {
    require_grid_supports_box(box, y.shape);
    CovarianceSet out(box, y.m);
    const auto lag_count = static_cast<std::int64_t>(box.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < lag_count; ++i)
        circular_covariance_lag(y, box.lags()[i], epsilon, out.at(static_cast<int>(i)));
    return out;
}

}  // namespace m2spec
