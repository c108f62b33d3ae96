#include "m2spec/estimator.hpp"

#include "m2spec/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace m2spec {

namespace {

MatrixField build_prior_field(const EstimatorSpec& spec, const CovarianceSet& sigma,
                              const GridShape& shape) {
    const int m = sigma.m;
    switch (spec.prior_kind) {
        case PriorKind::ConstantSigma0: {
            const int zero_index = sigma.box.half()[0];
            return MatrixField::constant(
                shape, m,
                std::span<const cdouble>(sigma.at(zero_index), static_cast<std::size_t>(m) * m));
        }
        case PriorKind::Identity:
            return MatrixField::identity(shape, m);
        case PriorKind::UserField:
            if (!spec.prior_field)
                throw std::invalid_argument("estimate_is: user prior requested but none supplied");
            if (!(spec.prior_field->shape == shape) || spec.prior_field->m != m)
                throw std::invalid_argument("estimate_is: user prior has wrong shape");
            return *spec.prior_field;
    }
    throw std::logic_error("estimate_is: unknown prior kind");
}

double window_weight(WindowSpec::Kind kind, const Lag& k, const std::vector<int>& widths) {
    if (kind == WindowSpec::Kind::Rectangular) return 1.0;
    double w = 1.0;
    for (std::size_t j = 0; j < k.size(); ++j)
        w *= 1.0 - static_cast<double>(std::abs(k[j])) / widths[j];
    return w;
}

}  // namespace

std::pair<MatrixField, SolveReport> estimate_from_moments(const CovarianceSet& sigma,
                                                          const Prior& prior,
                                                          const SolveOptions& opts) {
    auto [q, report] = solve_dual(prior, sigma, opts);
    return {primal_recover(q, prior), std::move(report)};
}

std::pair<MatrixField, SolveReport> estimate_is(const VectorField& y, const EstimatorSpec& spec) {
    const LagBox box = lambda_box(spec.lag_radii, y.shape);
    const double eps = spec.epsilon > 0.0 ? spec.epsilon : default_ridge_epsilon(y);
    const CovarianceSet sigma = covariance_from_periodogram(periodogram(y, eps), box);
    const Prior prior(build_prior_field(spec, sigma, y.shape));
    return estimate_from_moments(sigma, prior, spec.solver);
}

MatrixField windowed_periodogram(const VectorField& y, const WindowSpec& w) {
    const GridShape& shape = y.shape;
    if (static_cast<int>(w.widths.size()) != shape.dim())
        throw std::invalid_argument("windowed_periodogram: widths dimension mismatch");
    std::vector<int> radii(w.widths.size());
    for (std::size_t j = 0; j < w.widths.size(); ++j) {
        if (w.widths[j] < 1 || w.widths[j] > shape.dims()[j])
            throw std::invalid_argument("windowed_periodogram: width for axis " +
                                        std::to_string(j + 1) + " must be in [1, N_j]");
        radii[j] = w.widths[j] - 1;  // |k_j| < width_j
    }

    // Circular covariances of all lags at once: the ridge-free periodogram
    // is the DFT pair of the circular lag field.
    const VectorField yhat = finite_fourier(y);
    const int m = y.m;
    const std::int64_t total = shape.total();
    const double inv_total = 1.0 / static_cast<double>(total);
    MatrixField sample(shape, m);
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < total; ++p) {
        const cdouble* v = yhat.at(p);
        cdouble* out = sample.at(p);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) out[r * m + c] = inv_total * v[r] * std::conj(v[c]);
    }
    const MatrixField lag_field = dft_field(sample, DftDirection::Inverse);

    // Weighted scatter; lags congruent mod N share a cell and accumulate.
    MatrixField scattered(shape, m);
    for (const Lag& k : enumerate_symmetric_box(radii)) {
        const double weight = window_weight(w.kind, k, w.widths);
        if (weight == 0.0) continue;
        const std::int64_t cell = shape.index_of(wrap_lag(k, shape));
        const cdouble* src = lag_field.at(cell);
        cdouble* dst = scattered.at(cell);
        for (int e = 0; e < m * m; ++e) dst[e] += weight * src[e];
    }
    return dft_field(scattered, DftDirection::Forward);
}

Peak peak_find(const MatrixField& phi) {
    const std::int64_t total = phi.shape.total();
    const int mm = phi.m * phi.m;
    std::int64_t best = 0;
    double best_value = -1.0;
    for (std::int64_t p = 0; p < total; ++p) {
        const cdouble* a = phi.at(p);
        double value = 0.0;
        for (int e = 0; e < mm; ++e) value += std::norm(a[e]);
        if (value > best_value) {
            best_value = value;
            best = p;
        }
    }

    Peak peak;
    peak.index = phi.shape.point_at(best);
    peak.freqs = phi.shape.frequencies_at(peak.index);
    for (double& f : peak.freqs)
        if (f > std::numbers::pi) f -= 2.0 * std::numbers::pi;  // report in (-pi, pi]
    peak.value = best_value;
    return peak;
}

std::string MethodSpec::name() const {
    switch (kind) {
        case Kind::Is: return "is";
        case Kind::Rect: return "rect";
        case Kind::Bart: return "bart";
    }
    return "?";
}

double relative_field_error(const MatrixField& a, const MatrixField& b) {
    if (!(a.shape == b.shape) || a.m != b.m)
        throw std::invalid_argument("relative_field_error: field layout mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        num += std::norm(a.values[i] - b.values[i]);
        den += std::norm(b.values[i]);
    }
    return std::sqrt(num / den);
}

std::vector<TrialResult> monte_carlo(const MonteCarloConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
    if (cfg.methods.empty()) throw std::invalid_argument("monte_carlo: no methods given");

    const std::size_t per_trial = cfg.methods.size();
    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials) * per_trial);

    auto run_trial = [&](int trial) {
        const std::uint64_t trial_seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
        Rng rng(trial_seed);
        std::array<double, 3> theta{};
        for (double& t : theta) t = rng.uniform_angle();
        if (cfg.fixed_freqs) theta = *cfg.fixed_freqs;
        const std::uint64_t model_seed = rng.next_u64();

        VectorField y;
        std::optional<MatrixField> truth_field;
        if (cfg.family == MonteCarloConfig::Family::Sinusoid) {
            SinusoidConfig sim{cfg.shape, cfg.amplitude, theta, cfg.antenna_ratio, cfg.noise_var,
                               model_seed};
            y = simulate_sinusoid(sim);
        } else {
            ArConfig sim{cfg.shape,         cfg.pole_moduli, theta,     cfg.antenna_ratio,
                         cfg.noise_var,     cfg.burn_in,     model_seed};
            y = simulate_ar(sim);
            truth_field = true_spectrum(GroundTruth::rational_ar(cfg.pole_moduli, theta,
                                                                 cfg.antenna_ratio, cfg.noise_var),
                                        cfg.shape)
                              .field;
        }

        for (std::size_t mi = 0; mi < per_trial; ++mi) {
            const MethodSpec& method = cfg.methods[mi];
            MatrixField estimate;
            if (method.kind == MethodSpec::Kind::Is)
                estimate = estimate_is(y, cfg.is_spec).first;
            else
                estimate = windowed_periodogram(y, method.window);

            const Peak peak = peak_find(estimate);
            TrialResult& r = results[static_cast<std::size_t>(trial) * per_trial + mi];
            r.trial = trial;
            r.method = method.name();
            r.seed = trial_seed;
            double err2 = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double d = peak.freqs[j] - theta[j];
                err2 += d * d;
            }
            r.peak_error = std::sqrt(err2);
            r.spectrum_rel_error = truth_field
                                       ? relative_field_error(estimate, *truth_field)
                                       : std::numeric_limits<double>::quiet_NaN();
            r.peak_index.resize(3);
            for (int j = 0; j < 3; ++j) r.peak_index[j] = peak.index[j] + 1;
        }
    };

    // Exceptions may not escape the parallel region; the first one wins.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int trial = 0; trial < cfg.trials; ++trial) {
        try {
            run_trial(trial);
        } catch (...) {
#pragma omp critical(m2spec_mc_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace m2spec
