#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eitsim/io.hpp"

namespace eit {

inline constexpr const char* kToolVersion = "1.0.0";

// Everything a subcommand needs; a manifest stores exactly this.
struct RunRequest {
    std::string command;  // trace, sweep, spectrum, decay-curve, magnetometry
    std::string config_path;
    ScenarioConfig config;
    std::string out_dir = ".";
    unsigned threads = 1;
    bool oracle = false;
    std::optional<Scale> scale;
    std::optional<Observable> observable;
    std::string measured_path;  // magnetometry: trace CSV to analyse instead of a synthetic one
};

struct RunResult {
    std::vector<std::string> outputs;  // file names inside out_dir, manifest last
    std::vector<std::pair<std::string, std::string>> summary;
};

const std::vector<std::string>& command_names();

// Runs one subcommand, writes its files and manifest.json into out_dir.
// Throws ValidationError, NumericalError or AmbiguityError from the library,
// std::runtime_error for I/O.
RunResult run_command(const RunRequest& request);

// Rebuilds the request recorded in a manifest. out_dir is left as recorded.
RunRequest request_from_manifest(const std::string& manifest_path);

// Thread count from a flag value (0 = unset), then EIT_SIM_THREADS, then
// available parallelism.
unsigned resolve_threads(unsigned flag_value);

// Analysis window used for magnetometry templates: from turn_on plus three
// build-up times to the pulse end (window end for a continuous probe).
std::pair<double, double> magnetometry_window(const Scenario& scenario, const SynthesisGrid& grid);

// Window holding the turn-on ringing: eight amplitude decay times 1/(pi gamma_EIT).
std::pair<double, double> ringing_window(const Scenario& scenario);

}  // namespace eit
