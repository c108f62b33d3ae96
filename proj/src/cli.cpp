#include "m2spec/cli.hpp"

#include "m2spec/covariance.hpp"
#include "m2spec/estimator.hpp"
#include "m2spec/fieldfile.hpp"
#include "m2spec/models.hpp"

#include <json.hpp>
#include <omp.h>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace m2spec::cli {

namespace {

using nlohmann::json;

json load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path.string());
    return json::parse(is);
}

// Strict schema check: every required key present, nothing outside
// required+optional allowed.
void check_keys(const json& obj, const std::string& context,
                const std::set<std::string>& required, const std::set<std::string>& optional) {
    if (!obj.is_object()) throw std::invalid_argument(context + ": expected a JSON object");
    for (const auto& item : obj.items()) {
        if (!required.count(item.key()) && !optional.count(item.key()))
            throw std::invalid_argument(context + ": unknown key '" + item.key() + "'");
    }
    for (const std::string& key : required)
        if (!obj.contains(key))
            throw std::invalid_argument(context + ": missing key '" + key + "'");
}

GridShape parse_dims(const json& cfg, const std::string& context) {
    const auto dims = cfg.at("dims").get<std::vector<int>>();
    if (dims.size() != 3)
        throw std::invalid_argument(context + ": dims must have 3 entries");
    return GridShape(dims);
}

std::array<double, 3> parse_triple(const json& value, const std::string& field) {
    const auto v = value.get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument(field + " must have 3 entries");
    return {v[0], v[1], v[2]};
}

std::array<int, 3> parse_int_triple(const json& value, const std::string& field) {
    const auto v = value.get<std::vector<int>>();
    if (v.size() != 3) throw std::invalid_argument(field + " must have 3 entries");
    return {v[0], v[1], v[2]};
}

std::filesystem::path resolve_output(const std::filesystem::path& name,
                                     const Overrides& overrides) {
    if (overrides.out_dir && name.is_relative()) return *overrides.out_dir / name;
    return name;
}

void apply_threads(const Overrides& overrides) {
    if (overrides.threads) {
        if (*overrides.threads < 1) throw std::invalid_argument("--threads must be >= 1");
        omp_set_num_threads(*overrides.threads);
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

SolveOptions parse_solver(const json& cfg, const std::string& context) {
    SolveOptions opts;
    if (!cfg.contains("solver")) return opts;
    const json& s = cfg.at("solver");
    check_keys(s, context + ".solver", {},
               {"tol", "moment_tol", "max_iterations", "quasi_newton"});
    if (s.contains("tol")) opts.grad_tol = s.at("tol").get<double>();
    if (s.contains("moment_tol")) opts.moment_tol = s.at("moment_tol").get<double>();
    if (s.contains("max_iterations")) opts.max_iterations = s.at("max_iterations").get<int>();
    if (s.contains("quasi_newton")) opts.use_quasi_newton = s.at("quasi_newton").get<bool>();
    if (opts.max_iterations < 1)
        throw std::invalid_argument(context + ".solver: max_iterations must be >= 1");
    return opts;
}

EstimatorSpec parse_estimator_spec(const json& cfg, const std::string& context) {
    EstimatorSpec spec;
    spec.lag_radii = cfg.at("lag_radii").get<std::vector<int>>();
    if (cfg.contains("prior")) {
        const std::string prior = cfg.at("prior").get<std::string>();
        if (prior == "sigma0")
            spec.prior_kind = PriorKind::ConstantSigma0;
        else if (prior == "identity")
            spec.prior_kind = PriorKind::Identity;
        else
            throw std::invalid_argument(context + ": prior must be 'sigma0' or 'identity'");
    }
    if (cfg.contains("epsilon")) {
        spec.epsilon = cfg.at("epsilon").get<double>();
        if (spec.epsilon < 0.0) throw std::invalid_argument(context + ": epsilon must be >= 0");
    }
    spec.solver = parse_solver(cfg, context);
    return spec;
}

json solver_to_json(const SolveOptions& opts) {
    return json{{"tol", opts.grad_tol},
                {"moment_tol", opts.moment_tol},
                {"max_iterations", opts.max_iterations},
                {"quasi_newton", opts.use_quasi_newton}};
}

json peak_to_json(const Peak& peak) {
    std::vector<int> index1(peak.index.size());
    for (std::size_t j = 0; j < peak.index.size(); ++j) index1[j] = peak.index[j] + 1;
    return json{{"index", index1}, {"frequency", peak.freqs}, {"value", peak.value}};
}

double frobenius_sq(const cdouble* a, int mm) {
    double v = 0.0;
    for (int e = 0; e < mm; ++e) v += std::norm(a[e]);
    return v;
}

WindowSpec::Kind window_kind_for(const std::string& method) {
    return method == "rect" ? WindowSpec::Kind::Rectangular : WindowSpec::Kind::Bartlett;
}

}  // namespace

void cmd_simulate(const std::filesystem::path& config_path, const Overrides& overrides) {
    apply_threads(overrides);
    json cfg = load_config(config_path);
    const std::string family = cfg.value("family", std::string());

    if (family == "sinusoid") {
        check_keys(cfg, "simulate",
                   {"family", "dims", "amplitude", "theta", "antenna_ratio", "noise_var", "seed",
                    "output"},
                   {});
    } else if (family == "ar") {
        check_keys(cfg, "simulate",
                   {"family", "dims", "pole_moduli", "theta", "antenna_ratio", "noise_var",
                    "seed", "output"},
                   {"burn_in"});
    } else {
        throw std::invalid_argument("simulate: family must be 'sinusoid' or 'ar'");
    }

    const GridShape shape = parse_dims(cfg, "simulate");
    const auto theta = parse_triple(cfg.at("theta"), "simulate: theta");
    const int antenna_ratio = cfg.at("antenna_ratio").get<int>();
    const double noise_var = cfg.at("noise_var").get<double>();
    if (noise_var < 0.0) throw std::invalid_argument("simulate: noise_var must be >= 0");
    std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    if (overrides.seed) seed = *overrides.seed;

    VectorField y;
    json resolved;
    resolved["family"] = family;
    resolved["dims"] = shape.dims();
    resolved["theta"] = theta;
    resolved["antenna_ratio"] = antenna_ratio;
    resolved["noise_var"] = noise_var;
    resolved["seed"] = seed;
    resolved["output"] = cfg.at("output").get<std::string>();

    if (family == "sinusoid") {
        const double amplitude = cfg.at("amplitude").get<double>();
        if (amplitude < 0.0) throw std::invalid_argument("simulate: amplitude must be >= 0");
        y = simulate_sinusoid({shape, amplitude, theta, antenna_ratio, noise_var, seed});
        resolved["amplitude"] = amplitude;
    } else {
        const auto rho = parse_triple(cfg.at("pole_moduli"), "simulate: pole_moduli");
        for (double r : rho)
            if (r < 0.0 || r >= 1.0)
                throw std::invalid_argument("simulate: pole_moduli must lie in [0,1)");
        if (rho[0] + rho[1] + rho[2] >= 1.0)
            throw std::invalid_argument("simulate: pole_moduli must sum below 1");
        std::array<int, 3> burn_in{200, 200, 200};
        if (cfg.contains("burn_in")) burn_in = parse_int_triple(cfg.at("burn_in"), "simulate: burn_in");
        for (int b : burn_in)
            if (b < 0) throw std::invalid_argument("simulate: burn_in must be >= 0");
        y = simulate_ar({shape, rho, theta, antenna_ratio, noise_var, burn_in, seed});
        resolved["pole_moduli"] = rho;
        resolved["burn_in"] = burn_in;
    }

    const std::filesystem::path out =
        resolve_output(cfg.at("output").get<std::string>(), overrides);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    FieldFile::from_signal(y).write(out);
    write_text(out.string() + ".json", resolved.dump(2) + "\n");
    std::printf("simulate: wrote %s (%" PRId64 " samples x %d channels)\n", out.string().c_str(),
                static_cast<std::int64_t>(shape.total()), y.m);
}

void cmd_estimate(const std::filesystem::path& config_path, const Overrides& overrides) {
    apply_threads(overrides);
    json cfg = load_config(config_path);
    check_keys(cfg, "estimate", {"input", "method", "output_spectrum", "output_report"},
               {"lag_radii", "prior", "epsilon", "solver", "window_widths"});

    std::string method = cfg.at("method").get<std::string>();
    if (overrides.method) method = *overrides.method;
    if (method != "is" && method != "rect" && method != "bart")
        throw std::invalid_argument("estimate: method must be one of is|rect|bart");

    const FieldFile input = FieldFile::read(cfg.at("input").get<std::string>());
    const VectorField y = input.to_signal();

    const std::filesystem::path out_spectrum =
        resolve_output(cfg.at("output_spectrum").get<std::string>(), overrides);
    const std::filesystem::path out_report =
        resolve_output(cfg.at("output_report").get<std::string>(), overrides);
    if (out_spectrum.has_parent_path())
        std::filesystem::create_directories(out_spectrum.parent_path());

    json report;
    report["method"] = method;
    MatrixField spectrum;
    if (method == "is") {
        if (!cfg.contains("lag_radii"))
            throw std::invalid_argument("estimate: missing key 'lag_radii'");
        EstimatorSpec spec = parse_estimator_spec(cfg, "estimate");
        const double eps = spec.epsilon > 0.0 ? spec.epsilon : default_ridge_epsilon(y);
        spec.epsilon = eps;
        auto [phi, solve_report] = estimate_is(y, spec);
        spectrum = std::move(phi);
        FieldFile::from_spectrum(spectrum, eps).write(out_spectrum);
        report["epsilon"] = eps;
        report["lag_radii"] = spec.lag_radii;
        report["solver"] = solver_to_json(spec.solver);
        report["iterations"] = solve_report.iterations;
        report["final_gradient_norm"] = solve_report.final_gradient_norm;
        report["final_dual_value"] = solve_report.final_dual_value;
        report["moment_residual"] = solve_report.moment_residual;
        report["backtracking_steps"] = solve_report.backtracking_steps;
    } else {
        if (!cfg.contains("window_widths"))
            throw std::invalid_argument("estimate: missing key 'window_widths'");
        WindowSpec window{window_kind_for(method),
                          cfg.at("window_widths").get<std::vector<int>>()};
        spectrum = windowed_periodogram(y, window);
        FieldFile::from_spectrum(spectrum).write(out_spectrum);
        report["window_widths"] = window.widths;
    }

    report["peak"] = peak_to_json(peak_find(spectrum));
    write_text(out_report, report.dump(2) + "\n");
    std::printf("estimate(%s): wrote %s and %s\n", method.c_str(), out_spectrum.string().c_str(),
                out_report.string().c_str());
}

void cmd_compare(const std::filesystem::path& config_path, const Overrides& overrides) {
    apply_threads(overrides);
    json cfg = load_config(config_path);
    check_keys(cfg, "compare", {"spectra", "output_prefix"}, {"section_point"});

    struct Entry {
        std::string method;
        MatrixField field;
    };
    std::vector<Entry> entries;
    for (const json& item : cfg.at("spectra")) {
        check_keys(item, "compare.spectra[]", {"method", "path"}, {});
        entries.push_back(Entry{item.at("method").get<std::string>(),
                                FieldFile::read(item.at("path").get<std::string>()).to_spectrum()});
    }
    if (entries.empty()) throw std::invalid_argument("compare: spectra must be non-empty");
    const GridShape& shape = entries.front().field.shape;
    for (const Entry& e : entries)
        if (!(e.field.shape == shape) || e.field.m != entries.front().field.m)
            throw std::invalid_argument("compare: spectrum '" + e.method +
                                        "' has mismatching shape or channel count");

    std::vector<int> point;
    if (cfg.contains("section_point")) {
        point = cfg.at("section_point").get<std::vector<int>>();
        if (static_cast<int>(point.size()) != shape.dim())
            throw std::invalid_argument("compare: section_point dimension mismatch");
        for (int j = 0; j < shape.dim(); ++j) {
            if (point[j] < 1 || point[j] > shape.dims()[j])
                throw std::invalid_argument("compare: section_point axis " + std::to_string(j + 1) +
                                            " out of range");
            --point[j];  // 1-based in configs, 0-based internally
        }
    } else {
        point = peak_find(entries.front().field).index;
    }

    const int mm = entries.front().field.m * entries.front().field.m;
    const std::filesystem::path prefix =
        resolve_output(cfg.at("output_prefix").get<std::string>(), overrides);
    for (int axis = 0; axis < shape.dim(); ++axis) {
        std::string csv = "index";
        for (const Entry& e : entries) csv += "," + e.method;
        csv += "\n";
        std::vector<int> probe = point;
        for (int i = 0; i < shape.dims()[axis]; ++i) {
            probe[axis] = i;
            csv += std::to_string(i + 1);
            for (const Entry& e : entries)
                csv += "," + format_double(frobenius_sq(e.field.at(shape.index_of(probe)), mm));
            csv += "\n";
        }
        write_text(prefix.string() + "_axis" + std::to_string(axis + 1) + ".csv", csv);
    }
    std::printf("compare: wrote %d cross-section CSVs to %s_axis*.csv\n", shape.dim(),
                prefix.string().c_str());
}

void cmd_montecarlo(const std::filesystem::path& config_path, const Overrides& overrides) {
    apply_threads(overrides);
    json cfg = load_config(config_path);
    const std::string family = cfg.value("family", std::string());
    if (family == "sinusoid") {
        check_keys(cfg, "montecarlo",
                   {"family", "trials", "base_seed", "dims", "antenna_ratio", "noise_var",
                    "amplitude", "methods", "output"},
                   {"theta", "is"});
    } else if (family == "ar") {
        check_keys(cfg, "montecarlo",
                   {"family", "trials", "base_seed", "dims", "antenna_ratio", "noise_var",
                    "pole_moduli", "methods", "output"},
                   {"theta", "is", "burn_in"});
    } else {
        throw std::invalid_argument("montecarlo: family must be 'sinusoid' or 'ar'");
    }

    MonteCarloConfig mc;
    mc.family = family == "sinusoid" ? MonteCarloConfig::Family::Sinusoid
                                     : MonteCarloConfig::Family::Ar;
    mc.trials = cfg.at("trials").get<int>();
    if (mc.trials < 1) throw std::invalid_argument("montecarlo: trials must be >= 1");
    mc.base_seed = cfg.at("base_seed").get<std::uint64_t>();
    if (overrides.seed) mc.base_seed = *overrides.seed;
    mc.shape = parse_dims(cfg, "montecarlo");
    mc.antenna_ratio = cfg.at("antenna_ratio").get<int>();
    mc.noise_var = cfg.at("noise_var").get<double>();
    if (mc.noise_var < 0.0) throw std::invalid_argument("montecarlo: noise_var must be >= 0");
    if (family == "sinusoid") {
        mc.amplitude = cfg.at("amplitude").get<double>();
        if (mc.amplitude < 0.0) throw std::invalid_argument("montecarlo: amplitude must be >= 0");
    } else {
        mc.pole_moduli = parse_triple(cfg.at("pole_moduli"), "montecarlo: pole_moduli");
        if (cfg.contains("burn_in"))
            mc.burn_in = parse_int_triple(cfg.at("burn_in"), "montecarlo: burn_in");
    }
    if (cfg.contains("theta")) mc.fixed_freqs = parse_triple(cfg.at("theta"), "montecarlo: theta");

    bool needs_is = false;
    for (const json& item : cfg.at("methods")) {
        check_keys(item, "montecarlo.methods[]", {"name"}, {"window_widths"});
        const std::string name = item.at("name").get<std::string>();
        MethodSpec method;
        if (name == "is") {
            method.kind = MethodSpec::Kind::Is;
            needs_is = true;
        } else if (name == "rect" || name == "bart") {
            method.kind = name == "rect" ? MethodSpec::Kind::Rect : MethodSpec::Kind::Bart;
            if (!item.contains("window_widths"))
                throw std::invalid_argument("montecarlo: method '" + name +
                                            "' requires window_widths");
            method.window =
                WindowSpec{window_kind_for(name), item.at("window_widths").get<std::vector<int>>()};
        } else {
            throw std::invalid_argument("montecarlo: unknown method name '" + name + "'");
        }
        mc.methods.push_back(std::move(method));
    }
    if (mc.methods.empty()) throw std::invalid_argument("montecarlo: methods must be non-empty");
    if (needs_is) {
        if (!cfg.contains("is"))
            throw std::invalid_argument("montecarlo: missing key 'is' (estimator settings)");
        check_keys(cfg.at("is"), "montecarlo.is", {"lag_radii"}, {"prior", "epsilon", "solver"});
        mc.is_spec = parse_estimator_spec(cfg.at("is"), "montecarlo.is");
    }

    const std::vector<TrialResult> results = monte_carlo(mc);

    std::string csv = "trial,method,peak_error,spectrum_rel_error,seed\n";
    for (const TrialResult& r : results) {
        csv += std::to_string(r.trial + 1) + "," + r.method + "," + format_double(r.peak_error) +
               ",";
        if (!std::isnan(r.spectrum_rel_error)) csv += format_double(r.spectrum_rel_error);
        csv += "," + std::to_string(r.seed) + "\n";
    }
    const std::filesystem::path out =
        resolve_output(cfg.at("output").get<std::string>(), overrides);
    write_text(out, csv);
    std::printf("montecarlo: wrote %zu rows to %s\n", results.size(), out.string().c_str());
}

}  // namespace m2spec::cli
