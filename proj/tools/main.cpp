#include "m2spec/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"m2spec: matrix-valued spectral estimation for multidimensional random fields"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::uint64_t seed = 0;
        bool has_seed = false;
        std::string out;
        std::string method;
        int threads = 0;
    } args;

    auto add_common = [&](CLI::App* sub, bool with_method) {
        sub->add_option("--config", args.config, "path to the JSON config")->required();
        sub->add_option("--seed", args.seed, "override the config seed")
            ->each([&](const std::string&) { args.has_seed = true; });
        sub->add_option("--out", args.out, "directory for relative output paths");
        sub->add_option("--threads", args.threads, "OpenMP thread count");
        if (with_method)
            sub->add_option("--method", args.method, "estimator: is|rect|bart")
                ->check(CLI::IsMember({"is", "rect", "bart"}));
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate a signal file from a model");
    CLI::App* estimate = app.add_subcommand("estimate", "estimate a spectrum from a signal file");
    CLI::App* compare = app.add_subcommand("compare", "emit cross-section CSVs of spectra");
    CLI::App* montecarlo = app.add_subcommand("montecarlo", "run paired seeded trials");
    add_common(simulate, false);
    add_common(estimate, true);
    add_common(compare, false);
    add_common(montecarlo, false);

    CLI11_PARSE(app, argc, argv);

    m2spec::cli::Overrides overrides;
    if (args.has_seed) overrides.seed = args.seed;
    if (!args.out.empty()) overrides.out_dir = args.out;
    if (!args.method.empty()) overrides.method = args.method;
    if (args.threads > 0) overrides.threads = args.threads;

    try {
        if (simulate->parsed()) m2spec::cli::cmd_simulate(args.config, overrides);
        if (estimate->parsed()) m2spec::cli::cmd_estimate(args.config, overrides);
        if (compare->parsed()) m2spec::cli::cmd_compare(args.config, overrides);
        if (montecarlo->parsed()) m2spec::cli::cmd_montecarlo(args.config, overrides);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
