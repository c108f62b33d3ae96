// Timing harness comparing the production kernels against the serial
// reference implementations and against themselves at 1 vs max threads.
//
//   m2spec_bench [repeats]

#include "m2spec/covariance.hpp"
#include "m2spec/estimator.hpp"
#include "m2spec/hermitian.hpp"
#include "m2spec/isdual.hpp"
#include "m2spec/models.hpp"
#include "m2spec/rng.hpp"
#include "reference/reference.hpp"

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

using namespace m2spec;

namespace {

volatile double g_sink = 0.0;

double time_ms(int repeats, const std::function<double()>& body) {
    // One warm-up, then the average over `repeats`.
    g_sink = body();
    const double start = omp_get_wtime();
    for (int r = 0; r < repeats; ++r) g_sink = body();
    return (omp_get_wtime() - start) * 1000.0 / repeats;
}

void row(const char* name, double serial_ms, double parallel_ms, double reference_ms) {
    if (reference_ms > 0.0)
        std::printf("%-28s %10.2f %10.2f %8.2fx %12.2f\n", name, serial_ms, parallel_ms,
                    serial_ms / parallel_ms, reference_ms);
    else
        std::printf("%-28s %10.2f %10.2f %8.2fx %12s\n", name, serial_ms, parallel_ms,
                    serial_ms / parallel_ms, "-");
}

MatrixField random_pd_field(const GridShape& shape, int m, std::uint64_t seed) {
    Rng rng(seed);
    MatrixField f(shape, m);
    std::vector<cdouble> b(static_cast<std::size_t>(m) * m);
    for (std::int64_t p = 0; p < shape.total(); ++p) {
        for (cdouble& v : b) v = rng.complex_gaussian(1.0);
        cdouble* a = f.at(p);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                cdouble s = 0.0;
                for (int k = 0; k < m; ++k) s += b[i * m + k] * std::conj(b[j * m + k]);
                a[i * m + j] = s;
            }
        for (int i = 0; i < m; ++i) a[i * m + i] += 1.0;
    }
    return f;
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 20;
    const int max_threads = omp_get_max_threads();
    std::printf("threads: 1 vs %d, %d repeats per measurement\n\n", max_threads, repeats);
    std::printf("%-28s %10s %10s %9s %12s\n", "kernel", "serial ms", "omp ms", "speedup",
                "naive ms");

    const GridShape radar({30, 30, 8});
    const MatrixField field = random_pd_field(radar, 2, 1);
    const LagBox box = lambda_box({1, 1, 1}, radar);

    // Entrywise multidimensional DFT; the naive reference is quadratic in
    // the grid size, so it gets a smaller grid.
    {
        auto body = [&] { return dft_field(field, DftDirection::Forward).values[0].real(); };
        omp_set_num_threads(1);
        const double serial = time_ms(repeats, body);
        omp_set_num_threads(max_threads);
        const double parallel = time_ms(repeats, body);

        const GridShape small({16, 16, 8});
        const MatrixField small_field = random_pd_field(small, 2, 2);
        const double naive = time_ms(1, [&] {
            return reference::naive_dft(small_field, DftDirection::Forward).values[0].real();
        });
        row("dft 30x30x8 m=2", serial, parallel, 0.0);
        std::printf("%-28s %10s %10s %9s %12.2f  (16x16x8)\n", "  naive full-sum dft", "-", "-",
                    "-", naive);
    }

    // Pointwise Cholesky + inverse sweep

    {
        const Prior prior(field);
        const DualCertificate q = DualCertificate::zeros(box, 2);
        auto body = [&] { return primal_recover(q, prior).values[0].real(); };
        omp_set_num_threads(1);
        const double serial = time_ms(repeats, body);
        omp_set_num_threads(max_threads);
        const double parallel = time_ms(repeats, body);
        row("pointwise factor+invert", serial, parallel, 0.0);
    }

    // Hessian assembly (cross moments + atom contraction).
    {
        const Prior prior(field);
        const DualCertificate q = DualCertificate::zeros(box, 2);
        auto body = [&] { return dual_hessian(q, prior)[0]; };
        omp_set_num_threads(1);
        const double serial = time_ms(repeats / 2 + 1, body);
        omp_set_num_threads(max_threads);
        const double parallel = time_ms(repeats / 2 + 1, body);
        row("dual hessian (108 params)", serial, parallel, 0.0);
    }

    // Covariance estimation: FFT path vs the direct circular sums.
    {
        Rng rng(3);
        VectorField y(radar, 2);
        for (cdouble& v : y.values) v = rng.complex_gaussian(1.0);
        auto fft_body = [&] {
            return covariance_from_periodogram(periodogram(y, 0.1), box).values[0].real();
        };
        auto direct_body = [&] {
            return covariance_direct_oracle(y, box, 0.1).values[0].real();
        };
        omp_set_num_threads(1);
        const double serial = time_ms(repeats, fft_body);
        const double direct_serial = time_ms(3, direct_body);
        omp_set_num_threads(max_threads);
        const double parallel = time_ms(repeats, fft_body);
        row("covariance via fft", serial, parallel, direct_serial);
    }

    // End-to-end solve on the radar-scale configuration.
    {
        SinusoidConfig cfg;
        cfg.shape = radar;
        cfg.amplitude = 1.0;
        cfg.freqs = {0.8101, -0.5872, 2.1798};
        cfg.antenna_ratio = 20;
        cfg.noise_var = 2.0;
        cfg.seed = 1;
        const VectorField y = simulate_sinusoid(cfg);
        EstimatorSpec spec;
        spec.lag_radii = {1, 1, 1};
        auto body = [&] { return estimate_is(y, spec).first.values[0].real(); };
        omp_set_num_threads(1);
        const double serial = time_ms(3, body);
        omp_set_num_threads(max_threads);
        const double parallel = time_ms(3, body);
        row("estimate_is radar config", serial, parallel, 0.0);
    }

    std::printf("\nsink: %g\n", g_sink);
    return 0;
}
