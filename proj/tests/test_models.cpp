#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "m2spec/models.hpp"
#include "m2spec/rng.hpp"
#include "reference/reference.hpp"

#include <cmath>
#include <numbers>

using namespace m2spec;

namespace {

cdouble sample_mean(const std::vector<cdouble>& v) {
    cdouble sum = 0.0;
    for (const cdouble& x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double sample_var(const std::vector<cdouble>& v) {
    const cdouble mean = sample_mean(v);
    double sum = 0.0;
    for (const cdouble& x : v) sum += std::norm(x - mean);
    return sum / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("noise-free sinusoid has unit modulus everywhere") {
    SinusoidConfig cfg;
    cfg.shape = GridShape({6, 5, 4});
    cfg.amplitude = 1.0;
    cfg.freqs = {0.8, -0.6, 2.1};
    cfg.antenna_ratio = 20;
    cfg.noise_var = 0.0;
    cfg.seed = 7;
    const VectorField y = simulate_sinusoid(cfg);
    for (std::int64_t p = 0; p < cfg.shape.total(); ++p)
        CHECK(std::abs(y.at(p)[0]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("noise-free channels differ by the antenna phase shift") {
    SinusoidConfig cfg;
    cfg.shape = GridShape({5, 4, 3});
    cfg.amplitude = 1.7;
    cfg.freqs = {0.3, 1.1, -2.0};
    cfg.antenna_ratio = 13;
    cfg.noise_var = 0.0;
    cfg.seed = 8;
    const VectorField y = simulate_sinusoid(cfg);
    const cdouble shift(std::cos(13 * cfg.freqs[2]), std::sin(13 * cfg.freqs[2]));
    for (std::int64_t p = 0; p < cfg.shape.total(); ++p)
        CHECK(std::abs(y.at(p)[1] - y.at(p)[0] * shift) < 1e-12);
}

TEST_CASE("sinusoid generation is deterministic per seed and config size matches") {
    SinusoidConfig cfg;
    cfg.shape = GridShape({30, 30, 8});
    cfg.amplitude = 1.0;
    cfg.freqs = {0.8101, -0.5872, 2.1798};
    cfg.antenna_ratio = 20;
    cfg.noise_var = 2.0;
    cfg.seed = 424242;
    const VectorField a = simulate_sinusoid(cfg);
    const VectorField b = simulate_sinusoid(cfg);
    CHECK(a.values == b.values);
    CHECK(a.values.size() == 30u * 30u * 8u * 2u);

    cfg.seed = 424243;
    const VectorField c = simulate_sinusoid(cfg);
    CHECK(a.values != c.values);
}

TEST_CASE("sinusoid config validation") {
    SinusoidConfig cfg;
    cfg.shape = GridShape({4, 4, 4});
    cfg.amplitude = -1.0;
    CHECK_THROWS_AS(simulate_sinusoid(cfg), std::invalid_argument);
    cfg.amplitude = 1.0;
    cfg.noise_var = -0.5;
    CHECK_THROWS_AS(simulate_sinusoid(cfg), std::invalid_argument);
    SinusoidConfig flat;
    flat.shape = GridShape({4, 4});
    CHECK_THROWS_AS(simulate_sinusoid(flat), std::invalid_argument);
}

TEST_CASE("noise circularity: the pseudo-covariance trends to zero") {
    // E[w w] of circular noise vanishes; the sample pseudo-covariance of the
    // pure-noise signal should shrink as the sample count grows.
    std::vector<double> pseudo;
    for (int n : {8, 16, 32}) {
        SinusoidConfig cfg;
        cfg.shape = GridShape({n, n, 4});
        cfg.amplitude = 0.0;
        cfg.noise_var = 1.0;
        cfg.seed = 99;
        const VectorField y = simulate_sinusoid(cfg);
        cdouble acc = 0.0;
        for (std::int64_t p = 0; p < cfg.shape.total(); ++p) acc += y.at(p)[0] * y.at(p)[0];
        pseudo.push_back(std::abs(acc) / static_cast<double>(cfg.shape.total()));
    }
    CHECK(pseudo[1] < pseudo[0]);
    CHECK(pseudo[2] < pseudo[1]);
}

TEST_CASE("degenerate AR recursion is white noise") {
    ArConfig cfg;
    cfg.shape = GridShape({24, 24, 8});
    cfg.pole_moduli = {0.0, 0.0, 0.0};
    cfg.freqs = {0.5, -0.5, 1.0};
    cfg.noise_var = 0.0;  // x alone
    cfg.burn_in = {8, 8, 8};
    cfg.seed = 5;
    const VectorField y = simulate_ar(cfg);
    std::vector<cdouble> x(cfg.shape.total());
    for (std::int64_t p = 0; p < cfg.shape.total(); ++p) x[p] = y.at(p)[0];
    CHECK(sample_var(x) == doctest::Approx(1.0).epsilon(0.05));

    // Adjacent samples are uncorrelated for rho = 0.
    cdouble lag1 = 0.0;
    for (std::int64_t p = 0; p + 1 < cfg.shape.total(); ++p) lag1 += x[p + 1] * std::conj(x[p]);
    CHECK(std::abs(lag1) / static_cast<double>(cfg.shape.total()) < 0.05);
}

TEST_CASE("AR stability and burn-in validation") {
    ArConfig cfg;
    cfg.shape = GridShape({4, 4, 4});
    cfg.pole_moduli = {0.5, 0.3, 0.2};  // sums to 1.0
    CHECK_THROWS_AS(simulate_ar(cfg), std::invalid_argument);
    cfg.pole_moduli = {0.5, 0.3, -0.1};
    CHECK_THROWS_AS(simulate_ar(cfg), std::invalid_argument);
    cfg.pole_moduli = {0.3, 0.3, 0.3};
    cfg.burn_in = {-1, 0, 0};
    CHECK_THROWS_AS(simulate_ar(cfg), std::invalid_argument);
}

TEST_CASE("AR generation is deterministic per seed") {
    ArConfig cfg;
    cfg.shape = GridShape({10, 10, 4});
    cfg.pole_moduli = {0.3, 0.3, 0.3};
    cfg.freqs = {0.9, -1.3, 2.2};
    cfg.noise_var = 2.0;
    cfg.burn_in = {40, 40, 40};
    cfg.seed = 11;
    CHECK(simulate_ar(cfg).values == simulate_ar(cfg).values);
}

TEST_CASE("1-d reduction matches a scalar AR(1) reference to sample statistics") {
    const int n = 4096;
    const double rho = 0.5;
    const double theta = 0.7;

    ArConfig cfg;
    cfg.shape = GridShape({n, 1, 1});
    cfg.pole_moduli = {rho, 0.0, 0.0};
    cfg.freqs = {theta, 0.0, 0.0};
    cfg.noise_var = 0.0;
    cfg.burn_in = {200, 0, 0};
    cfg.seed = 31;
    const VectorField y = simulate_ar(cfg);
    std::vector<cdouble> mine(n);
    for (int t = 0; t < n; ++t) mine[t] = y.at(t)[0];

    const std::vector<cdouble> ref = reference::ar1_simulate(
        n, 200, rho * cdouble(std::cos(theta), std::sin(theta)), 77);

    const double var_theory = 1.0 / (1.0 - rho * rho);
    CHECK(sample_var(mine) == doctest::Approx(sample_var(ref)).epsilon(0.15));
    CHECK(sample_var(mine) == doctest::Approx(var_theory).epsilon(0.15));

    // Lag-1 covariance magnitude ~ rho * var.
    auto lag1 = [](const std::vector<cdouble>& v) {
        cdouble acc = 0.0;
        for (std::size_t t = 0; t + 1 < v.size(); ++t) acc += v[t + 1] * std::conj(v[t]);
        return std::abs(acc) / static_cast<double>(v.size());
    };
    CHECK(lag1(mine) == doctest::Approx(lag1(ref)).epsilon(0.2));
    CHECK(lag1(mine) == doctest::Approx(rho * var_theory).epsilon(0.2));
}

TEST_CASE("AR sample covariance converges to the true lag moment (trend, 1-d)") {
    // Error against the closed-form AR(1) lag-1 covariance shrinks with N.
    const double rho = 0.5;
    const double theta = 0.9;
    const cdouble alpha = rho * cdouble(std::cos(theta), std::sin(theta));
    const cdouble true_lag1 = alpha / (1.0 - rho * rho);

    std::vector<double> errors;
    for (int n : {16, 32, 64}) {
        double err = 0.0;
        const int reps = 2048 / n;  // same total sample budget per size
        for (int r = 0; r < reps; ++r) {
            ArConfig cfg;
            cfg.shape = GridShape({n, 1, 1});
            cfg.pole_moduli = {rho, 0.0, 0.0};
            cfg.freqs = {theta, 0.0, 0.0};
            cfg.noise_var = 0.0;
            cfg.burn_in = {100, 0, 0};
            cfg.seed = 1000 + 131 * static_cast<std::uint64_t>(r) + n;
            const VectorField y = simulate_ar(cfg);
            cdouble acc = 0.0;
            for (int t = 0; t + 1 < n; ++t) acc += y.at(t + 1)[0] * std::conj(y.at(t)[0]);
            err += std::abs(acc / static_cast<double>(n - 1) - true_lag1);
        }
        errors.push_back(err / reps);
    }
    CHECK(errors[2] < errors[0]);
}

TEST_CASE("true AR spectrum at the pole frequency") {
    const GridShape shape({8, 8, 8});
    // Put theta on the grid so the peak value is exact: 2*pi*k/N.
    const std::array<double, 3> theta = {2.0 * std::numbers::pi * 2.0 / 8.0,
                                         2.0 * std::numbers::pi * 5.0 / 8.0,
                                         2.0 * std::numbers::pi * 1.0 / 8.0};
    const GroundTruth truth = GroundTruth::rational_ar({0.3, 0.3, 0.3}, theta, 20, 2.0);
    const TrueSpectrum spec = true_spectrum(truth, shape);
    REQUIRE_FALSE(spec.atom.has_value());

    const std::vector<int> point = {2, 5, 1};
    const cdouble* phi = spec.field.at(shape.index_of(point));
    const std::array<cdouble, 4> r = phase_shift_matrix(20 * theta[2]);
    // Phi_x at the pole frequency is 1/(1-0.9)^2 = 100.
    CHECK(std::abs(phi[0] - (100.0 * r[0] + 2.0)) < 1e-9);
    CHECK(std::abs(phi[1] - 100.0 * r[1]) < 1e-9);
    CHECK(std::abs(phi[2] - 100.0 * r[2]) < 1e-9);
    CHECK(std::abs(phi[3] - (100.0 * r[3] + 2.0)) < 1e-9);
}

TEST_CASE("zero poles give the constant spectrum R + sigma^2 I") {
    const GridShape shape({4, 4, 4});
    const GroundTruth truth = GroundTruth::rational_ar({0.0, 0.0, 0.0}, {0.4, 0.5, 0.6}, 7, 1.5);
    const TrueSpectrum spec = true_spectrum(truth, shape);
    const std::array<cdouble, 4> r = phase_shift_matrix(7 * 0.6);
    for (std::int64_t p = 0; p < shape.total(); ++p) {
        const cdouble* phi = spec.field.at(p);
        CHECK(std::abs(phi[0] - (r[0] + 1.5)) < 1e-12);
        CHECK(std::abs(phi[1] - r[1]) < 1e-12);
        CHECK(std::abs(phi[2] - r[2]) < 1e-12);
        CHECK(std::abs(phi[3] - (r[3] + 1.5)) < 1e-12);
    }
}

TEST_CASE("phase-shift matrix has eigenvalues 0 and 2 for any angle") {
    for (double t3 : {-3.0, -0.4, 0.0, 1.1, 2.9}) {
        const std::array<cdouble, 4> r = phase_shift_matrix(17 * t3);
        const auto eigs = reference::hermitian_eigenvalues_2x2(r.data());
        CHECK(eigs[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(eigs[1] == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("ideal sinusoid truth is a background plus a symbolic atom") {
    const GridShape shape({6, 6, 4});
    const GroundTruth truth = GroundTruth::ideal_sinusoid(1.0, {0.8, -0.6, 2.2}, 20, 2.0);
    const TrueSpectrum spec = true_spectrum(truth, shape);
    REQUIRE(spec.atom.has_value());
    CHECK(spec.atom->freqs == std::array<double, 3>{0.8, -0.6, 2.2});
    CHECK(spec.atom->amplitude == 1.0);
    for (std::int64_t p = 0; p < shape.total(); ++p) {
        const cdouble* phi = spec.field.at(p);
        CHECK(std::abs(phi[0] - 2.0) < 1e-12);
        CHECK(std::abs(phi[1]) < 1e-12);
        CHECK(std::abs(phi[3] - 2.0) < 1e-12);
    }
}
