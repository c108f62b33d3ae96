#include "m2spec/isdual.hpp"

#include "m2spec/hermitian.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace m2spec {

namespace {

void require_same_box(const LagBox& a, const LagBox& b, const char* what) {
    if (a.radii() != b.radii()) throw std::invalid_argument(std::string(what) + ": lag box mismatch");
}

// Pointwise state of A = Psi^{-1} + Q over the grid.
struct FieldEval {
    bool feasible = false;
    std::int64_t bad_point = -1;
    double logdet_integral = 0.0;  // (1/|N|) sum_l log det A(zeta_l)
    MatrixField phio;              // A^{-1}(zeta_l), filled only when requested
};

FieldEval field_eval(const DualCertificate& q, const Prior& psi, bool need_phio) {
    const GridShape& shape = psi.shape();
    const int m = psi.channels();
    MatrixField a = eval_trig_polynomial(q.full_coefficients(), shape);
    const std::int64_t total = shape.total();
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.values.size()); ++i)
        a.values[i] += psi.inverse().values[i];

    FieldEval eval;
    if (need_phio) eval.phio = MatrixField(shape, m);
    std::vector<double> logdets(total, 0.0);
    std::atomic<std::int64_t> bad{-1};

#pragma omp parallel
    {
        std::vector<cdouble> lower(static_cast<std::size_t>(m) * m);
#pragma omp for schedule(static)
        for (std::int64_t p = 0; p < total; ++p) {
            if (bad.load(std::memory_order_relaxed) >= 0) continue;
            // The values are Hermitian by construction (certificate symmetry
            // plus the symmetrized prior inverse), so factor the lower
            // triangle directly.
            if (!try_cholesky_lower(a.at(p), m, lower.data())) {
                std::int64_t expected = -1;
                bad.compare_exchange_strong(expected, p);
                continue;
            }
            logdets[p] = logdet_from_cholesky(lower.data(), m);
            if (need_phio) inverse_from_cholesky(lower.data(), m, eval.phio.at(p));
        }
    }

    eval.bad_point = bad.load();
    eval.feasible = eval.bad_point < 0;
    if (eval.feasible) {
        double sum = 0.0;
        for (std::int64_t p = 0; p < total; ++p) sum += logdets[p];
        eval.logdet_integral = sum / static_cast<double>(total);
    }
    return eval;
}

// <Q, Sigma> = sum_k tr(Q_k Sigma_k*), evaluated over the canonical half so
// the result is real by construction.
double pairing(const DualCertificate& q, const CovarianceSet& sigma) {
    require_same_box(q.box(), sigma.box, "dual pairing");
    const int m = q.channels();
    const auto& half = q.box().half();
    double value = 0.0;
    for (std::size_t h = 0; h < half.size(); ++h) {
        const cdouble* qk = q.half_at(static_cast<int>(h));
        const cdouble* sk = sigma.at(half[h]);
        double re = 0.0;
        for (int e = 0; e < m * m; ++e) re += (qk[e] * std::conj(sk[e])).real();
        value += (h == 0) ? re : 2.0 * re;
    }
    return value;
}

// Gradient packing: the real-coordinate representation of a Hermitian-
// symmetric lag set G (here Sigma - Gamma(Phi)), matching the parameter
// order of pack_certificate.
std::vector<double> pack_dual(const LagMatrixSet& g) {
    const int m = g.m;
    const auto& half = g.box.half();
    std::vector<double> out;
    out.reserve(parameter_count(g.box, m));

    const cdouble* g0 = g.at(half[0]);
    for (int i = 0; i < m; ++i) out.push_back(g0[i * m + i].real());
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            out.push_back(2.0 * g0[i * m + j].real());
            out.push_back(2.0 * g0[i * m + j].imag());
        }
    }
    for (std::size_t h = 1; h < half.size(); ++h) {
        const cdouble* gk = g.at(half[h]);
        for (int e = 0; e < m * m; ++e) {
            out.push_back(2.0 * gk[e].real());
            out.push_back(2.0 * gk[e].imag());
        }
    }
    return out;
}

LagMatrixSet subtract(const LagMatrixSet& a, const LagMatrixSet& b) {
    LagMatrixSet out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
    return out;
}

double euclidean_norm(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

// One nonzero matrix entry of a coordinate direction: coeff * E_{row,col}
// attached to lag k. Each real parameter owns one or two of these.
struct Atom {
    Lag lag;
    int row = 0;
    int col = 0;
    cdouble coeff;
};

std::vector<std::vector<Atom>> parameter_atoms(const LagBox& box, int m) {
    const cdouble I(0.0, 1.0);
    std::vector<std::vector<Atom>> atoms;
    atoms.reserve(parameter_count(box, m));
    const auto& half = box.half();
    const Lag zero = box.lags()[half[0]];

    for (int i = 0; i < m; ++i) atoms.push_back({Atom{zero, i, i, 1.0}});
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            atoms.push_back({Atom{zero, i, j, 1.0}, Atom{zero, j, i, 1.0}});
            atoms.push_back({Atom{zero, i, j, I}, Atom{zero, j, i, -I}});
        }
    }
    for (std::size_t h = 1; h < half.size(); ++h) {
        const Lag& k = box.lags()[half[h]];
        Lag neg = k;
        for (int& c : neg) c = -c;
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                atoms.push_back({Atom{k, a, b, 1.0}, Atom{neg, b, a, 1.0}});
                atoms.push_back({Atom{k, a, b, I}, Atom{neg, b, a, -I}});
            }
        }
    }
    return atoms;
}

// Cross moments W_s(b,c,d,a) = integral e^{-i<s,theta>} Phi[b,c] Phi[d,a]
// d nu_N for s in the Minkowski sum Lambda+Lambda, via one inverse DFT of
// the entrywise products.
struct CrossMoments {
    std::vector<int> radii2;
    std::vector<std::int64_t> strides;
    int m = 0;
    std::vector<cdouble> data;  // [s_index * m^4 + (b*m+c)*m^2 + (d*m+a)]

    const cdouble* at(const Lag& s) const {
        std::int64_t idx = 0;
        for (std::size_t j = 0; j < radii2.size(); ++j) idx += (s[j] + radii2[j]) * strides[j];
        return data.data() + idx * m * m * m * m;
    }
};

CrossMoments cross_moments(const MatrixField& phio, const LagBox& box) {
    const GridShape& shape = phio.shape;
    const int m = phio.m;
    const int mm = m * m;
    const std::int64_t total = shape.total();

    std::vector<cdouble> products(static_cast<std::size_t>(total) * mm * mm);
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < total; ++p) {
        const cdouble* a = phio.at(p);
        cdouble* out = products.data() + p * mm * mm;
        for (int e1 = 0; e1 < mm; ++e1)
            for (int e2 = 0; e2 < mm; ++e2) out[e1 * mm + e2] = a[e1] * a[e2];
    }

    // dft_buffer is private to grid.cpp; an inverse transform of a matrix
    // field with m^2 x m^2 interleaved entries does the same job.
    MatrixField wrapper(shape, mm);
    wrapper.values = std::move(products);
    wrapper = dft_field(wrapper, DftDirection::Inverse);

    CrossMoments w;
    w.m = m;
    w.radii2.resize(box.dim());
    for (int j = 0; j < box.dim(); ++j) w.radii2[j] = 2 * box.radii()[j];
    w.strides.assign(box.dim(), 1);
    for (int j = box.dim() - 2; j >= 0; --j)
        w.strides[j] = w.strides[j + 1] * (2 * w.radii2[j + 1] + 1);
    std::int64_t count = w.strides[0] * (2 * w.radii2[0] + 1);
    w.data.resize(static_cast<std::size_t>(count) * mm * mm);

    for (const Lag& s : enumerate_symmetric_box(w.radii2)) {
        Lag neg = s;
        for (int& c : neg) c = -c;
        const cdouble* src = wrapper.at(shape.index_of(wrap_lag(neg, shape)));
        std::int64_t idx = 0;
        for (std::size_t j = 0; j < w.radii2.size(); ++j)
            idx += (s[j] + w.radii2[j]) * w.strides[j];
        std::copy(src, src + mm * mm, w.data.begin() + idx * mm * mm);
    }
    return w;
}

std::vector<double> assemble_hessian(const MatrixField& phio, const LagBox& box) {
    const int m = phio.m;
    const CrossMoments w = cross_moments(phio, box);
    const std::vector<std::vector<Atom>> atoms = parameter_atoms(box, m);
    const std::int64_t np = static_cast<std::int64_t>(atoms.size());
    std::vector<double> hess(static_cast<std::size_t>(np) * np);

#pragma omp parallel
    {
        Lag s(box.dim());
#pragma omp for schedule(static)
        for (std::int64_t p = 0; p < np; ++p) {
            for (std::int64_t r = p; r < np; ++r) {
                cdouble acc = 0.0;
                for (const Atom& ap : atoms[p]) {
                    for (const Atom& ar : atoms[r]) {
                        for (int j = 0; j < box.dim(); ++j) s[j] = ap.lag[j] + ar.lag[j];
                        const cdouble* ws = w.at(s);
                        acc += ap.coeff * ar.coeff *
                               ws[(ap.col * m + ar.row) * m * m + (ar.col * m + ap.row)];
                    }
                }
                hess[p * np + r] = acc.real();
            }
        }
    }
    for (std::int64_t p = 0; p < np; ++p)
        for (std::int64_t r = 0; r < p; ++r) hess[p * np + r] = hess[r * np + p];
    return hess;
}

}  // namespace

Prior::Prior(MatrixField psi) : field_(std::move(psi)), inverse_(field_.shape, field_.m) {
    const std::int64_t total = field_.shape.total();
    const int m = field_.m;
    std::atomic<std::int64_t> bad{-1};
    std::atomic<std::int64_t> drift{-1};
#pragma omp parallel
    {
        std::vector<cdouble> lower(static_cast<std::size_t>(m) * m);
#pragma omp for schedule(static)
        for (std::int64_t p = 0; p < total; ++p) {
            if (bad.load(std::memory_order_relaxed) >= 0 ||
                drift.load(std::memory_order_relaxed) >= 0)
                continue;
            std::int64_t expected = -1;
            try {
                if (!try_cholesky(field_.at(p), m, lower.data())) {
                    bad.compare_exchange_strong(expected, p);
                    continue;
                }
            } catch (const NotHermitianError&) {
                drift.compare_exchange_strong(expected, p);
                continue;
            }
            inverse_from_cholesky(lower.data(), m, inverse_.at(p));
        }
    }
    if (drift.load() >= 0)
        throw NotHermitianError("prior is not Hermitian at grid point " +
                                std::to_string(drift.load()));
    if (bad.load() >= 0)
        throw NotPositiveDefiniteError("prior is not positive definite at grid point " +
                                       std::to_string(bad.load()));
}

DualCertificate DualCertificate::zeros(const LagBox& box, int m) {
    DualCertificate q(box, m);
    q.half_.assign(box.half().size() * static_cast<std::size_t>(m) * m, cdouble(0.0));
    return q;
}

LagMatrixSet DualCertificate::full_coefficients() const {
    LagMatrixSet full(box_, m_);
    const auto& half = box_.half();
    for (std::size_t h = 0; h < half.size(); ++h) {
        const cdouble* src = half_at(static_cast<int>(h));
        cdouble* dst = full.at(half[h]);
        if (h == 0) {
            for (int i = 0; i < m_; ++i) {
                dst[i * m_ + i] = src[i * m_ + i].real();
                for (int j = i + 1; j < m_; ++j) {
                    const cdouble sym = 0.5 * (src[i * m_ + j] + std::conj(src[j * m_ + i]));
                    dst[i * m_ + j] = sym;
                    dst[j * m_ + i] = std::conj(sym);
                }
            }
            continue;
        }
        std::copy(src, src + m_ * m_, dst);
        Lag neg = box_.lags()[half[h]];
        for (int& c : neg) c = -c;
        cdouble* dneg = full.at(box_.index_of(neg));
        for (int r = 0; r < m_; ++r)
            for (int c = 0; c < m_; ++c) dneg[r * m_ + c] = std::conj(src[c * m_ + r]);
    }
    return full;
}

double DualCertificate::norm() const {
    const LagMatrixSet full = full_coefficients();
    return lag_set_norm(full);
}

std::size_t parameter_count(const LagBox& box, int m) {
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    return mm + (box.half().size() - 1) * 2 * mm;
}

std::vector<double> pack_certificate(const DualCertificate& q) {
    const int m = q.channels();
    std::vector<double> x;
    x.reserve(parameter_count(q.box(), m));
    const cdouble* q0 = q.half_at(0);
    for (int i = 0; i < m; ++i) x.push_back(q0[i * m + i].real());
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            x.push_back(q0[i * m + j].real());
            x.push_back(q0[i * m + j].imag());
        }
    }
    for (std::size_t h = 1; h < q.box().half().size(); ++h) {
        const cdouble* qk = q.half_at(static_cast<int>(h));
        for (int e = 0; e < m * m; ++e) {
            x.push_back(qk[e].real());
            x.push_back(qk[e].imag());
        }
    }
    return x;
}

DualCertificate unpack_certificate(const std::vector<double>& x, const LagBox& box, int m) {
    if (x.size() != parameter_count(box, m))
        throw std::invalid_argument("unpack_certificate: parameter vector length mismatch");
    DualCertificate q = DualCertificate::zeros(box, m);
    std::size_t pos = 0;
    cdouble* q0 = q.half_at(0);
    for (int i = 0; i < m; ++i) q0[i * m + i] = x[pos++];
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const double re = x[pos++];
            const double im = x[pos++];
            q0[i * m + j] = cdouble(re, im);
            q0[j * m + i] = cdouble(re, -im);
        }
    }
    for (std::size_t h = 1; h < box.half().size(); ++h) {
        cdouble* qk = q.half_at(static_cast<int>(h));
        for (int e = 0; e < m * m; ++e) {
            const double re = x[pos++];
            const double im = x[pos++];
            qk[e] = cdouble(re, im);
        }
    }
    return q;
}

double is_distance(const MatrixField& phi, const MatrixField& psi) {
    if (!(phi.shape == psi.shape) || phi.m != psi.m)
        throw std::invalid_argument("is_distance: fields must share grid and channel count");
    const int m = phi.m;
    const std::int64_t total = phi.shape.total();
    std::vector<double> terms(total, 0.0);
    std::atomic<std::int64_t> bad{-1};

    std::atomic<std::int64_t> drift{-1};
#pragma omp parallel
    {
        std::vector<cdouble> lower(static_cast<std::size_t>(m) * m);
        std::vector<cdouble> psi_inv(static_cast<std::size_t>(m) * m);
#pragma omp for schedule(static)
        for (std::int64_t p = 0; p < total; ++p) {
            if (bad.load(std::memory_order_relaxed) >= 0 ||
                drift.load(std::memory_order_relaxed) >= 0)
                continue;
            std::int64_t expected = -1;
            try {
                if (!try_cholesky(phi.at(p), m, lower.data())) {
                    bad.compare_exchange_strong(expected, p);
                    continue;
                }
                const double logdet_phi = logdet_from_cholesky(lower.data(), m);
                if (!try_cholesky(psi.at(p), m, lower.data())) {
                    bad.compare_exchange_strong(expected, p);
                    continue;
                }
                const double logdet_psi = logdet_from_cholesky(lower.data(), m);
                inverse_from_cholesky(lower.data(), m, psi_inv.data());
                cdouble trace = 0.0;
                const cdouble* f = phi.at(p);
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < m; ++c) trace += psi_inv[r * m + c] * f[c * m + r];
                terms[p] = logdet_psi - logdet_phi + trace.real() - m;
            } catch (const NotHermitianError&) {
                drift.compare_exchange_strong(expected, p);
            }
        }
    }

    if (drift.load() >= 0)
        throw NotHermitianError("is_distance: field not Hermitian at grid point " +
                                std::to_string(drift.load()));
    if (bad.load() >= 0)
        throw NotPositiveDefiniteError("is_distance: field not positive definite at grid point " +
                                       std::to_string(bad.load()));
    double sum = 0.0;
    for (std::int64_t p = 0; p < total; ++p) sum += terms[p];
    return sum / static_cast<double>(total);
}

bool feasible(const DualCertificate& q, const Prior& psi) {
    return field_eval(q, psi, /*need_phio=*/false).feasible;
}

double dual_value(const DualCertificate& q, const Prior& psi, const CovarianceSet& sigma) {
    const FieldEval eval = field_eval(q, psi, /*need_phio=*/false);
    if (!eval.feasible)
        throw InfeasibleError("dual_value: Psi^{-1} + Q not positive definite at grid point " +
                              std::to_string(eval.bad_point));
    return pairing(q, sigma) - eval.logdet_integral;
}

std::vector<double> dual_gradient(const DualCertificate& q, const Prior& psi,
                                  const CovarianceSet& sigma) {
    require_same_box(q.box(), sigma.box, "dual_gradient");
    const FieldEval eval = field_eval(q, psi, /*need_phio=*/true);
    if (!eval.feasible)
        throw InfeasibleError("dual_gradient: Psi^{-1} + Q not positive definite at grid point " +
                              std::to_string(eval.bad_point));
    return pack_dual(subtract(sigma, moment_map(eval.phio, q.box())));
}

std::vector<double> dual_hessian(const DualCertificate& q, const Prior& psi) {
    const FieldEval eval = field_eval(q, psi, /*need_phio=*/true);
    if (!eval.feasible)
        throw InfeasibleError("dual_hessian: Psi^{-1} + Q not positive definite at grid point " +
                              std::to_string(eval.bad_point));
    return assemble_hessian(eval.phio, q.box());
}

MatrixField primal_recover(const DualCertificate& q, const Prior& psi) {
    FieldEval eval = field_eval(q, psi, /*need_phio=*/true);
    if (!eval.feasible)
        throw InfeasibleError("primal_recover: Psi^{-1} + Q not positive definite at grid point " +
                              std::to_string(eval.bad_point));
    return std::move(eval.phio);
}

namespace {

// Limited-memory direction from gradient differences; used instead of the
// exact Newton system when opts.use_quasi_newton is set.
class LbfgsHistory {
public:
    void push(std::vector<double> s, std::vector<double> y) {
        double sy = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) sy += s[i] * y[i];
        if (sy <= 0.0) return;  // keep the inverse-Hessian model positive definite
        if (pairs_.size() == 10) pairs_.pop_front();
        pairs_.push_back({std::move(s), std::move(y), sy});
    }

    std::vector<double> direction(const std::vector<double>& grad) const {
        std::vector<double> q = grad;
        std::vector<double> alpha(pairs_.size());
        for (int i = static_cast<int>(pairs_.size()) - 1; i >= 0; --i) {
            const auto& [s, y, sy] = pairs_[i];
            double a = 0.0;
            for (std::size_t j = 0; j < q.size(); ++j) a += s[j] * q[j];
            a /= sy;
            alpha[i] = a;
            for (std::size_t j = 0; j < q.size(); ++j) q[j] -= a * y[j];
        }
        if (!pairs_.empty()) {
            const auto& [s, y, sy] = pairs_.back();
            double yy = 0.0;
            for (double v : y) yy += v * v;
            const double gamma = sy / yy;
            for (double& v : q) v *= gamma;
        }
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            const auto& [s, y, sy] = pairs_[i];
            double b = 0.0;
            for (std::size_t j = 0; j < q.size(); ++j) b += y[j] * q[j];
            b /= sy;
            for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - b) * s[j];
        }
        for (double& v : q) v = -v;
        return q;
    }

private:
    struct Pair {
        std::vector<double> s, y;
        double sy;
    };
    std::deque<Pair> pairs_;
};

}  // namespace

std::pair<DualCertificate, SolveReport> solve_dual(const Prior& psi, const CovarianceSet& sigma,
                                                   const SolveOptions& opts,
                                                   const std::optional<DualCertificate>& start) {
    require_grid_supports_box(sigma.box, psi.shape());
    require_lag_symmetry(sigma);
    const int m = psi.channels();
    if (sigma.m != m) throw std::invalid_argument("solve_dual: channel count mismatch");
    const LagBox& box = sigma.box;
    const std::size_t np = parameter_count(box, m);

    DualCertificate q = start ? *start : DualCertificate::zeros(box, m);
    if (start) require_same_box(start->box(), box, "solve_dual start");
    std::vector<double> x = pack_certificate(q);

    FieldEval eval = field_eval(q, psi, /*need_phio=*/true);
    if (!eval.feasible)
        throw InfeasibleError("solve_dual: starting point infeasible at grid point " +
                              std::to_string(eval.bad_point));

    const double sigma_norm = lag_set_norm(sigma);
    double value = pairing(q, sigma) - eval.logdet_integral;
    LagMatrixSet gap = subtract(sigma, moment_map(eval.phio, box));
    std::vector<double> grad = pack_dual(gap);
    double grad_rel = euclidean_norm(grad) / (1.0 + sigma_norm);
    double residual = lag_set_norm(gap) / sigma_norm;

    SolveReport report;
    report.dual_values.push_back(value);
    report.final_dual_value = value;
    report.final_gradient_norm = grad_rel;
    report.moment_residual = residual;

    LbfgsHistory history;

    while (grad_rel > opts.grad_tol || residual > opts.moment_tol) {
        if (report.iterations >= opts.max_iterations)
            throw MaxIterationsExceededError("solve_dual: no convergence within " +
                                                 std::to_string(opts.max_iterations) +
                                                 " iterations",
                                             report);

        // Direction: exact Newton with a single trace-scaled ridge retry,
        // steepest descent as the last resort.
        std::vector<double> direction(np);
        bool have_newton = false;
        if (!opts.use_quasi_newton) {
            const std::vector<double> hess = assemble_hessian(eval.phio, box);
            Eigen::MatrixXd h = Eigen::Map<const Eigen::MatrixXd>(
                hess.data(), static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
            Eigen::Map<const Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(np));
            Eigen::LLT<Eigen::MatrixXd> llt(h);
            if (llt.info() != Eigen::Success) {
                const double ridge = 1e-12 * h.trace() / static_cast<double>(np);
                h.diagonal().array() += ridge;
                llt.compute(h);
            }
            if (llt.info() == Eigen::Success) {
                Eigen::VectorXd d = llt.solve(-g);
                if (d.allFinite()) {
                    Eigen::VectorXd::Map(direction.data(), d.size()) = d;
                    have_newton = true;
                }
            }
        } else {
            direction = history.direction(grad);
            have_newton = true;
        }
        if (!have_newton)
            for (std::size_t i = 0; i < np; ++i) direction[i] = -grad[i];

        double slope = 0.0;
        for (std::size_t i = 0; i < np; ++i) slope += grad[i] * direction[i];
        if (!(slope < 0.0)) {
            for (std::size_t i = 0; i < np; ++i) direction[i] = -grad[i];
            slope = 0.0;
            for (std::size_t i = 0; i < np; ++i) slope += grad[i] * direction[i];
        }

        // Once the predicted decrease sinks below the rounding resolution of
        // the dual value, the Armijo comparison carries no information; the
        // gradient is still computed to full precision, so acceptance then
        // asks for gradient contraction at (numerically) non-increasing value.
        const double value_resolution =
            16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
        const bool armijo_resolvable = -slope > value_resolution;
        const double grad_norm = euclidean_norm(grad);

        // Backtracking: feasibility first, then the decrease test.
        double step = 1.0;
        std::vector<double> x_next(np);
        DualCertificate q_next;
        FieldEval eval_next;
        LagMatrixSet gap_next;
        std::vector<double> grad_next;
        double value_next = 0.0;
        bool accepted = false;
        while (step >= opts.min_step) {
            for (std::size_t i = 0; i < np; ++i) x_next[i] = x[i] + step * direction[i];
            q_next = unpack_certificate(x_next, box, m);
            eval_next = field_eval(q_next, psi, /*need_phio=*/true);
            if (eval_next.feasible) {
                value_next = pairing(q_next, sigma) - eval_next.logdet_integral;
                gap_next = LagMatrixSet();
                grad_next.clear();
                if (armijo_resolvable) {
                    accepted = value_next <= value + opts.armijo_c * step * slope;
                } else if (value_next <= value + value_resolution) {
                    gap_next = subtract(sigma, moment_map(eval_next.phio, box));
                    grad_next = pack_dual(gap_next);
                    accepted = euclidean_norm(grad_next) <= 0.9 * grad_norm;
                }
                if (accepted) break;
            }
            step *= opts.backtrack_beta;
            ++report.backtracking_steps;
        }
        if (!accepted) {
            // A stall with unmatched moments is the signature of data with no
            // positive-definite witness; a stall with matched moments means
            // the gradient tolerance lies below the attainable precision.
            if (residual > opts.moment_tol)
                throw InfeasibleMomentsError(
                    "solve_dual: line search stalled; the moment data admits no "
                    "positive-definite spectrum",
                    report);
            throw MaxIterationsExceededError(
                "solve_dual: stalled at the numerical precision floor (gradient " +
                    std::to_string(grad_rel) + ", moment residual " + std::to_string(residual) +
                    "); grad_tol is below what this instance supports",
                report);
        }

        if (grad_next.empty()) {
            gap_next = subtract(sigma, moment_map(eval_next.phio, box));
            grad_next = pack_dual(gap_next);
        }
        if (opts.use_quasi_newton) {
            std::vector<double> s(np), y_diff(np);
            for (std::size_t i = 0; i < np; ++i) s[i] = x_next[i] - x[i];
            for (std::size_t i = 0; i < np; ++i) y_diff[i] = grad_next[i] - grad[i];
            history.push(std::move(s), std::move(y_diff));
        }
        x = std::move(x_next);
        q = std::move(q_next);
        eval = std::move(eval_next);
        value = value_next;
        gap = std::move(gap_next);
        grad = std::move(grad_next);

        grad_rel = euclidean_norm(grad) / (1.0 + sigma_norm);
        residual = lag_set_norm(gap) / sigma_norm;
        ++report.iterations;
        report.dual_values.push_back(value);
        report.final_dual_value = value;
        report.final_gradient_norm = grad_rel;
        report.moment_residual = residual;
    }

    return {std::move(q), std::move(report)};
}

}  // namespace m2spec
