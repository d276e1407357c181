#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "eitsim/cli.hpp"
#include "eitsim/error.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kNumerical = 3, kAmbiguity = 4 };

struct Flags {
    std::string config;
    std::string out = "out";
    unsigned threads = 0;
    bool oracle = false;
    std::string scale;
    std::string observable;
    std::string measured;
    std::string manifest;
};

void print(const eit::RunRequest& req, const eit::RunResult& res) {
    std::cout << req.command << " (" << req.threads << " threads) -> " << req.out_dir << "\n";
    for (const auto& [k, v] : res.summary) std::cout << "  " << k << ": " << v << "\n";
    for (const auto& f : res.outputs) std::cout << "  wrote " << f << "\n";
}

int run(const std::string& command, const Flags& f) {
    eit::RunRequest req;
    if (command == "replay") {
        req = eit::request_from_manifest(f.manifest);
        if (!f.out.empty()) req.out_dir = f.out;
        if (f.threads > 0) req.threads = f.threads;
    } else {
        req.command = command;
        req.config_path = f.config;
        req.config = eit::load_config(f.config);
        req.out_dir = f.out;
        req.threads = eit::resolve_threads(f.threads);
        req.oracle = f.oracle;
        req.measured_path = f.measured;
        if (f.scale == "linear") req.scale = eit::Scale::Linear;
        if (f.scale == "log") req.scale = eit::Scale::Log;
        if (f.observable == "amplitude") req.observable = eit::Observable::Amplitude;
        if (f.observable == "intensity") req.observable = eit::Observable::Intensity;
    }
    const auto res = eit::run_command(req);
    print(req, res);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient EIT simulator for phase-modulated coupling fields"};
    app.require_subcommand(1);
    Flags f;

    const std::map<std::string, std::string> help{
        {"trace", "probe amplitude time trace (optionally against the density-matrix oracle)"},
        {"sweep", "2D map over two-photon detuning or magnetic field, heatmap and integrated spectrum"},
        {"spectrum", "period-averaged susceptibility spectrum over two-photon detuning"},
        {"decay-curve", "ringing decay time against the adiabaticity parameter beta"},
        {"magnetometry", "field estimate by template correlation, with sensitivity report"},
    };
    for (const auto& name : eit::command_names()) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", f.config, "scenario config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", f.out, "output directory")->capture_default_str();
        sub->add_option("--threads", f.threads, "worker threads (default: EIT_SIM_THREADS, then all cores)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--scale", f.scale, "heatmap scale")->check(CLI::IsMember({"linear", "log"}));
        sub->add_option("--observable", f.observable, "map observable")
            ->check(CLI::IsMember({"amplitude", "intensity"}));
        if (name == "trace") sub->add_flag("--oracle", f.oracle, "also run the density-matrix oracle");
        if (name == "magnetometry")
            sub->add_option("--measured", f.measured, "trace CSV to analyse instead of a synthetic trace")
                ->check(CLI::ExistingFile);
    }
    auto* replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
    replay->add_option("--manifest", f.manifest, "manifest.json from an earlier run")
        ->required()
        ->check(CLI::ExistingFile);
    replay->add_option("--out", f.out, "output directory (default: the manifest's directory)");
    replay->add_option("--threads", f.threads, "worker threads (default: as recorded)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }
    if (app.got_subcommand("replay") && replay->count("--out") == 0) f.out.clear();

    try {
        return run(app.get_subcommands().front()->get_name(), f);
    } catch (const eit::AmbiguityError& e) {
        std::cerr << "ambiguity: " << e.what() << "\n";
        return kAmbiguity;
    } catch (const eit::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const eit::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
