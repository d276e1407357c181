#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "eitsim/analysis.hpp"
#include "eitsim/cli.hpp"

using namespace eit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "eitsim_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "scenario.cfg";
    std::ofstream(p) << text;
    return p;
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(EITSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallTrace =
    "[modulation]\nmodulation_index = 6\nmod_frequency_hz = 5000\n"
    "[probe]\nshape = square\nduration_s = 0.4e-3\ndelta_two_photon_hz = 20e3\n";

const char* kSmallMagnetometry =
    "[modulation]\nmodulation_index = 10\nmod_frequency_hz = 5000\n"
    "[probe]\nshape = square\nduration_s = 0.4e-3\n"
    "[magnetic]\nenabled = true\n"
    "[run]\nbank_count = 21\nnoise_fraction = 0.01\nnoise_trials = 5\n";

RunRequest request(const std::string& command, const fs::path& cfg, const fs::path& out) {
    RunRequest r;
    r.command = command;
    r.config_path = cfg.string();
    r.config = load_config(cfg.string());
    r.out_dir = out.string();
    return r;
}

}  // namespace

TEST_CASE("bypass trace reproduces the envelope") {
    const auto dir = scratch("bypass");
    const auto cfg = write_config(dir, std::string(kSmallTrace) + "[run]\nbypass_medium = true\n");
    const auto res = run_command(request("trace", cfg, dir));
    const auto tr = read_trace_csv((dir / "trace.csv").string());
    const auto c = load_config(cfg.string());
    const auto [j0, j1] = pulse_sample_range(c.scenario.probe, synthesis_grid(c));
    for (std::size_t j = 0; j < tr.amplitude.size(); ++j) {
        const double want = (j >= j0 && j < j1) ? 1.0 : 0.0;
        CHECK(std::abs(tr.amplitude[j] - cplx{want, 0.0}) < 1e-8);
    }
    CHECK(res.outputs.back() == "manifest.json");
}

TEST_CASE("manifest replay reproduces every output byte for byte") {
    const auto a = scratch("replay_a");
    const auto b = scratch("replay_b");
    const auto cfg = write_config(a, kSmallTrace);
    auto req = request("trace", cfg, a);
    req.threads = 2;
    const auto first = run_command(req);

    auto again = request_from_manifest((a / "manifest.json").string());
    CHECK(again.command == "trace");
    again.out_dir = b.string();
    const auto second = run_command(again);
    for (const auto& f : first.outputs) {
        if (f == "manifest.json") continue;
        CHECK(slurp(a / f) == slurp(b / f));
    }

    const auto c = scratch("replay_c");
    CHECK(run_tool("replay --manifest " + (a / "manifest.json").string() + " --out " + c.string()) == 0);
    CHECK(slurp(a / "trace.csv") == slurp(c / "trace.csv"));
}

TEST_CASE("exit codes") {
    const auto dir = scratch("exit");
    const auto good = write_config(dir, kSmallTrace);
    CHECK(run_tool("trace --config " + good.string() + " --out " + dir.string()) == 0);

    CHECK(run_tool("trace --config " + (dir / "absent.cfg").string()) == 2);
    CHECK(run_tool("trace --config " + good.string() + " --bogus-flag") == 2);
    CHECK(run_tool("trace --config " + good.string() + " --scale cubic") == 2);

    const fs::path bad = dir / "bad.cfg";
    std::ofstream(bad) << "[modulation]\nmod_frequency_hz = -5\n";
    CHECK(run_tool("trace --config " + bad.string() + " --out " + dir.string()) == 2);

    // A sweep subcommand without a sweep axis is a validation error.
    CHECK(run_tool("sweep --config " + good.string() + " --out " + dir.string()) == 2);

    // B* beyond B_max: ambiguity.
    const double top = bmax({10.0, 5e3, Waveform::Sine}, 2, 0.5);
    const fs::path far = dir / "far.cfg";
    std::ofstream(far) << kSmallMagnetometry << "true_field_gauss = " << 1.5 * top << "\n";
    CHECK(run_tool("magnetometry --config " + far.string() + " --out " + dir.string()) == 4);
}

TEST_CASE("magnetometry recovers a synthetic field") {
    const auto dir = scratch("magnetometry");
    const auto cfg = write_config(dir, std::string(kSmallMagnetometry) + "true_field_gauss = 0.02\n");
    const auto res = run_command(request("magnetometry", cfg, dir));
    const double top = bmax({10.0, 5e3, Waveform::Sine}, 2, 0.5);
    double b_est = -1.0, b_max = -1.0;
    for (const auto& [k, v] : res.summary) {
        if (k == "b_est_gauss") b_est = std::stod(v);
        if (k == "b_max_gauss") b_max = std::stod(v);
    }
    CHECK(b_max == doctest::Approx(top).epsilon(1e-6));
    CHECK(std::abs(b_est - 0.02) <= top / 20.0);
    CHECK(fs::exists(dir / "correlation.csv"));
    CHECK(fs::exists(dir / "report.csv"));
}

TEST_CASE("thread count resolution") {
    CHECK(resolve_threads(3) == 3);
    ::setenv("EIT_SIM_THREADS", "5", 1);
    CHECK(resolve_threads(0) == 5);
    CHECK(resolve_threads(2) == 2);
    ::unsetenv("EIT_SIM_THREADS");
    CHECK(resolve_threads(0) >= 1);
    CHECK(command_names().size() == 5);
}
