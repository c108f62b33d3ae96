#include "m2spec/models.hpp"

#include "m2spec/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace m2spec {

namespace {

cdouble unit_phasor(double angle) { return {std::cos(angle), std::sin(angle)}; }

void require_3d(const GridShape& shape, const char* what) {
    if (shape.dim() != 3) throw std::invalid_argument(std::string(what) + ": shape must be 3-d");
}

}  // namespace

std::array<cdouble, 4> phase_shift_matrix(double phase) {
    return {cdouble(1.0), unit_phasor(-phase), unit_phasor(phase), cdouble(1.0)};
}

GroundTruth GroundTruth::ideal_sinusoid(double amplitude, std::array<double, 3> freqs,
                                        int antenna_ratio, double noise_var) {
    GroundTruth t;
    t.kind = Kind::IdealSinusoid;
    t.amplitude = amplitude;
    t.freqs = freqs;
    t.antenna_ratio = antenna_ratio;
    t.noise_var = noise_var;
    return t;
}

GroundTruth GroundTruth::rational_ar(std::array<double, 3> pole_moduli,
                                     std::array<double, 3> freqs, int antenna_ratio,
                                     double noise_var) {
    GroundTruth t;
    t.kind = Kind::RationalAr;
    t.pole_moduli = pole_moduli;
    t.freqs = freqs;
    t.antenna_ratio = antenna_ratio;
    t.noise_var = noise_var;
    return t;
}

VectorField simulate_sinusoid(const SinusoidConfig& cfg) {
    require_3d(cfg.shape, "simulate_sinusoid");
    if (cfg.amplitude < 0.0) throw std::invalid_argument("simulate_sinusoid: amplitude must be >= 0");
    if (cfg.noise_var < 0.0) throw std::invalid_argument("simulate_sinusoid: noise_var must be >= 0");

    Rng rng(cfg.seed);
    const double phase0 = rng.uniform_angle();  // one phi draw per realization
    const cdouble channel_shift = unit_phasor(cfg.antenna_ratio * cfg.freqs[2]);

    VectorField y(cfg.shape, 2);
    const std::int64_t total = cfg.shape.total();
    // Draw order: w1 then w2 at each grid point, row-major.
    for (std::int64_t p = 0; p < total; ++p) {
        const std::vector<int> t = cfg.shape.point_at(p);
        const double angle = cfg.freqs[0] * t[0] + cfg.freqs[1] * t[1] + cfg.freqs[2] * t[2];
        const cdouble signal = cfg.amplitude * unit_phasor(angle + phase0);
        cdouble* out = y.at(p);
        out[0] = signal + rng.complex_gaussian(cfg.noise_var);
        out[1] = signal * channel_shift + rng.complex_gaussian(cfg.noise_var);
    }
    return y;
}

VectorField simulate_ar(const ArConfig& cfg) {
    require_3d(cfg.shape, "simulate_ar");
    if (cfg.noise_var < 0.0) throw std::invalid_argument("simulate_ar: noise_var must be >= 0");
    double rho_sum = 0.0;
    for (double rho : cfg.pole_moduli) {
        if (rho < 0.0 || rho >= 1.0)
            throw std::invalid_argument("simulate_ar: pole_moduli must lie in [0,1)");
        rho_sum += rho;
    }
    if (rho_sum >= 1.0)
        throw std::invalid_argument("simulate_ar: unstable recursion, sum of pole_moduli must be < 1");
    for (int b : cfg.burn_in)
        if (b < 0) throw std::invalid_argument("simulate_ar: burn_in must be >= 0");

    const std::array<cdouble, 3> alpha = {cfg.pole_moduli[0] * unit_phasor(cfg.freqs[0]),
                                          cfg.pole_moduli[1] * unit_phasor(cfg.freqs[1]),
                                          cfg.pole_moduli[2] * unit_phasor(cfg.freqs[2])};
    const std::array<int, 3> n = {cfg.shape.dims()[0], cfg.shape.dims()[1], cfg.shape.dims()[2]};
    const std::array<int, 3> e = {n[0] + cfg.burn_in[0], n[1] + cfg.burn_in[1],
                                  n[2] + cfg.burn_in[2]};

    Rng rng(cfg.seed);

    // Sweep the enlarged grid row-major keeping two t1-planes; the trailing
    // N block lands in `kept`.
    const std::int64_t plane = static_cast<std::int64_t>(e[1]) * e[2];
    std::vector<cdouble> prev(plane, cdouble(0.0));
    std::vector<cdouble> cur(plane, cdouble(0.0));
    std::vector<cdouble> kept(cfg.shape.total());

    for (int t1 = 0; t1 < e[0]; ++t1) {
        for (int t2 = 0; t2 < e[1]; ++t2) {
            for (int t3 = 0; t3 < e[2]; ++t3) {
                cdouble acc = rng.complex_gaussian(1.0);  // Var(w) = 1
                const std::int64_t idx = static_cast<std::int64_t>(t2) * e[2] + t3;
                if (t1 > 0) acc += alpha[0] * prev[idx];
                if (t2 > 0) acc += alpha[1] * cur[idx - e[2]];
                if (t3 > 0) acc += alpha[2] * cur[idx - 1];
                cur[idx] = acc;
            }
        }
        if (t1 >= cfg.burn_in[0]) {
            const std::int64_t k1 = t1 - cfg.burn_in[0];
            for (int k2 = 0; k2 < n[1]; ++k2) {
                const cdouble* src = cur.data() +
                                     static_cast<std::int64_t>(k2 + cfg.burn_in[1]) * e[2] +
                                     cfg.burn_in[2];
                std::copy(src, src + n[2],
                          kept.begin() + (k1 * n[1] + k2) * static_cast<std::int64_t>(n[2]));
            }
        }
        std::swap(prev, cur);
    }

    const cdouble channel_shift = unit_phasor(cfg.antenna_ratio * cfg.freqs[2]);
    VectorField y(cfg.shape, 2);
    const std::int64_t total = cfg.shape.total();
    // Measurement noise after the drive stream: w1 then w2 per point.
    for (std::int64_t p = 0; p < total; ++p) {
        cdouble* out = y.at(p);
        out[0] = kept[p] + rng.complex_gaussian(cfg.noise_var);
        out[1] = kept[p] * channel_shift + rng.complex_gaussian(cfg.noise_var);
    }
    return y;
}

TrueSpectrum true_spectrum(const GroundTruth& truth, const GridShape& shape) {
    require_3d(shape, "true_spectrum");
    const std::array<cdouble, 4> r = phase_shift_matrix(truth.antenna_ratio * truth.freqs[2]);

    if (truth.kind == GroundTruth::Kind::IdealSinusoid) {
        std::array<cdouble, 4> background = {truth.noise_var, 0.0, 0.0, truth.noise_var};
        TrueSpectrum out{MatrixField::constant(shape, 2, background), SpectralAtom{}};
        out.atom->freqs = truth.freqs;
        out.atom->amplitude = truth.amplitude;
        out.atom->r = r;
        return out;
    }

    MatrixField field(shape, 2);
    const std::int64_t total = shape.total();
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < total; ++p) {
        const std::vector<int> point = shape.point_at(p);
        const std::vector<double> omega = shape.frequencies_at(point);
        cdouble z = 0.0;
        for (int j = 0; j < 3; ++j)
            z += truth.pole_moduli[j] * unit_phasor(truth.freqs[j] - omega[j]);
        const double phi_x = truth.drive_var / std::norm(1.0 - z);
        cdouble* out = field.at(p);
        for (int e = 0; e < 4; ++e) out[e] = phi_x * r[e];
        out[0] += truth.noise_var;
        out[3] += truth.noise_var;
    }
    return TrueSpectrum{std::move(field), std::nullopt};
}

}  // namespace m2spec
