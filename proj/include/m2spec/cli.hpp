#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace m2spec::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;  // redirects relative output paths
    std::optional<std::string> method;             // estimate only
    std::optional<int> threads;
};

/// The four batch commands. Configs are strict: unknown or missing keys are
/// rejected with the field named. Each throws std::exception on failure.
void cmd_simulate(const std::filesystem::path& config_path, const Overrides& overrides = {});
void cmd_estimate(const std::filesystem::path& config_path, const Overrides& overrides = {});
void cmd_compare(const std::filesystem::path& config_path, const Overrides& overrides = {});
void cmd_montecarlo(const std::filesystem::path& config_path, const Overrides& overrides = {});

}  // namespace m2spec::cli
