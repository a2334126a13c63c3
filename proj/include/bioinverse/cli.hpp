#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bioinverse/lm.hpp"
#include "bioinverse/models.hpp"
#include "bioinverse/synth.hpp"

namespace bioinverse {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitMuBlowup = 3;
inline constexpr int kExitModelFailure = 4;
inline constexpr int kExitMaxIterations = 5;

// One experiment description: model, parameter box, optimizer settings, ray
// placement, noise levels and initial guesses.
struct RunConfig {
    std::unique_ptr<ForwardModel> model;
    ParameterSpec parameters;
    LMConfig lm;
    RaySpec rays;
    std::vector<double> sigmas;
    std::uint64_t seed = 0;
    std::vector<ParameterVector> initial_guesses;
    ParameterVector theta_true;
    std::string config_hash; // fingerprint of the loaded file
};

// Parses and validates a config file; throws ValidationError on any problem.
RunConfig load_run_config(const std::filesystem::path& path);

struct CliOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;          // overrides config seed
    std::optional<std::vector<double>> theta;   // forward: evaluation point;
                                                // invert: initial guess
    std::filesystem::path observation;          // invert only
    std::filesystem::path run_dir;              // report only
};

// Subcommand entry points; each returns an exit code and writes diagnostics
// to stderr.
int cmd_forward(const CliOptions& options);
int cmd_synth(const CliOptions& options);
int cmd_invert(const CliOptions& options);
int cmd_campaign(const CliOptions& options);
int cmd_report(const CliOptions& options);

} // namespace bioinverse
