#include "eitsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

#include "eitsim/analysis.hpp"
#include "eitsim/bloch.hpp"
#include "eitsim/error.hpp"
#include "eitsim/parallel.hpp"

namespace eit {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Context {
    const RunRequest& req;
    ScenarioConfig cfg;
    RunResult result;

    std::string path(const std::string& name) {
        result.outputs.push_back(name);
        return (fs::path(req.out_dir) / name).string();
    }
    void note(const std::string& key, const std::string& value) { result.summary.emplace_back(key, value); }
};

void add_common_summary(Context& ctx, const SynthesisGrid& grid) {
    const auto& s = ctx.cfg.scenario;
    const double g = eit_linewidth(s.medium);
    ctx.note("gamma_eit_hz", num(g));
    ctx.note("regime", regime_name(classify_regime(s.modulation.frequency_hz, g)));
    ctx.note("grid", std::to_string(grid.count) + " samples, df=" + num(grid.freq_step_hz) +
                         " Hz, window=" + num(grid.window()) + " s");
}

void cmd_trace(Context& ctx) {
    const auto& s = ctx.cfg.scenario;
    const SynthesisGrid grid = synthesis_grid(ctx.cfg);
    add_common_summary(ctx, grid);
    const TimeTrace trace = transmit(s, grid, transmit_options(ctx.cfg));
    write_trace_csv(trace, ctx.path("trace.csv"));

    if (s.modulation.modulation_index == 0.0 && s.probe.delta_two_photon_hz != 0.0 &&
        s.probe.shape == ProbeShape::SquarePulse && !ctx.cfg.bypass_medium) {
        const auto [t0, t1] = ringing_window(s);
        try {
            ctx.note("ringing_frequency_hz", num(ringing_frequency(trace, t0, t1)));
        } catch (const NumericalError& e) {
            ctx.note("ringing_frequency_hz", std::string("n/a (") + e.what() + ")");
        }
    }

    if (ctx.req.oracle) {
        const OracleComparison cmp = compare_to_oracle(s, grid, transmit_options(ctx.cfg), ctx.req.threads);
        std::vector<std::vector<double>> rows;
        rows.reserve(cmp.grid.count);
        for (std::size_t i = 0; i < cmp.grid.count; ++i) rows.push_back({cmp.grid.at(i), cmp.comb[i], cmp.oracle[i]});
        Metadata md = trace.metadata;
        md.emplace_back("oracle_scale", format_value(oracle_scale(s)));
        md.emplace_back("settle_s", format_value(cmp.settle_s));
        md.emplace_back("nrms", format_value(cmp.nrms));
        write_table_csv(ctx.path("oracle.csv"), md, {"t_s", "comb_scaled_abs", "oracle_abs"}, rows);
        ctx.note("oracle_nrms", num(cmp.nrms));
        ctx.note("oracle_settle_s", num(cmp.settle_s));
    }
}

void cmd_sweep(Context& ctx) {
    const auto& s = ctx.cfg.scenario;
    const SynthesisGrid grid = synthesis_grid(ctx.cfg);
    add_common_summary(ctx, grid);
    const SweepAxis axis = sweep_axis(ctx.cfg);
    const SweepMap2D map = sweep_map(s, axis, grid, sweep_options(ctx.cfg, ctx.req.threads));
    write_map_csv(map, ctx.path("map.csv"));
    write_heatmap_pgm(map, ctx.path("map.pgm"), ctx.cfg.scale);

    const auto integral = integrated_spectrum(map);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < map.rows.size(); ++r) rows.push_back({map.rows[r], integral[r]});
    const bool field = axis.kind == SweepKind::MagneticField;
    write_table_csv(ctx.path("integrated_spectrum.csv"), map.metadata,
                    {field ? "field_gauss" : "two_photon_detuning_hz", "integrated"}, rows);
    ctx.note("rows", std::to_string(map.row_count()));
    ctx.note("columns", std::to_string(map.col_count()));
    if (s.magnetic && s.modulation.modulation_index > 0.0)
        ctx.note("b_max_gauss", num(bmax(s.modulation, 2, s.magnetic->g_lower, s.magnetic->bohr_magneton_hz_per_gauss)));
}

void cmd_spectrum(Context& ctx) {
    const auto& s = ctx.cfg.scenario;
    require_valid(s);
    std::vector<double> deltas;
    const std::size_t n = ctx.cfg.sweep_count;
    const double a = ctx.cfg.detuning_start_hz, b = ctx.cfg.detuning_stop_hz;
    if (n > 1 && !(b > a)) throw ValidationError("detuning_stop_hz must exceed detuning_start_hz");
    for (std::size_t i = 0; i < n; ++i)
        deltas.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));

    std::vector<double> chi(n);
    const std::size_t chunk = 64;
    const std::size_t blocks = (n + chunk - 1) / chunk;
    parallel_for(blocks, ctx.req.threads, [&](std::size_t k) {
        const std::size_t lo = k * chunk, hi = std::min(n, lo + chunk);
        const std::vector<double> part(deltas.begin() + static_cast<long>(lo), deltas.begin() + static_cast<long>(hi));
        const auto v = mean_abs_chi_spectrum(s, part, ctx.cfg.spectrum_samples);
        std::copy(v.begin(), v.end(), chi.begin() + static_cast<long>(lo));
    });

    // Transparency peaks are dips in the absorption magnitude.
    const double top = *std::max_element(chi.begin(), chi.end());
    const double bottom = *std::min_element(chi.begin(), chi.end());
    std::vector<double> transparency(n);
    for (std::size_t i = 0; i < n; ++i) transparency[i] = top - chi[i];
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back({deltas[i], chi[i], transparency[i]});
    write_table_csv(ctx.path("spectrum.csv"), scenario_metadata(s),
                    {"two_photon_detuning_hz", "mean_abs_chi", "transparency"}, rows);

    std::string peaks;
    for (const auto i : find_spectral_peaks(transparency, 0.05 * (top - bottom)))
        peaks += (peaks.empty() ? "" : ", ") + num(deltas[i]);
    ctx.note("transparency_peaks_hz", peaks.empty() ? "none" : peaks);
    if (s.magnetic)
        ctx.note("zeeman_offset_hz", num(s.magnetic->zeeman_shift_hz(2)));
}

void cmd_decay_curve(Context& ctx) {
    const auto& s = ctx.cfg.scenario;
    if (ctx.cfg.betas.empty()) throw ValidationError("decay-curve needs [run] betas");
    DecayCurveOptions opt;
    opt.beta_coupling_hz = ctx.cfg.beta_coupling_hz;
    opt.threads = ctx.req.threads;
    const auto points = decay_vs_beta_curve(s, ctx.cfg.betas, opt);

    const double g = eit_linewidth(s.medium);
    const double tau_ref = 2.0 / (kTwoPi * g);
    std::vector<std::vector<double>> rows;
    Metadata md = scenario_metadata(s);
    md.emplace_back("beta_coupling_hz", format_value(ctx.cfg.beta_coupling_hz));
    md.emplace_back("tau_reference_s", format_value(tau_ref));
    for (const auto& p : points) {
        rows.push_back({p.beta, p.modulation_index, p.mod_frequency_hz, p.ok ? p.tau : std::nan(""),
                        p.ok ? p.r_squared : std::nan(""), static_cast<double>(p.peaks), p.ok ? 1.0 : 0.0});
        if (!p.ok) ctx.note("beta " + num(p.beta), "fit failed: " + p.error);
    }
    write_table_csv(ctx.path("decay_curve.csv"), md,
                    {"beta", "modulation_index", "mod_frequency_hz", "tau_s", "r_squared", "peaks", "ok"}, rows);

    // Plateau: beta <= 0.1 against 2/(2 pi gamma_EIT).
    double worst = 0.0;
    std::size_t plateau = 0;
    for (const auto& p : points)
        if (p.beta <= 0.1 && p.ok) {
            ++plateau;
            worst = std::max(worst, std::abs(p.tau / tau_ref - 1.0));
        }
    ctx.note("plateau", plateau ? std::to_string(plateau) + " points, max |tau/tau_ref - 1| = " + num(worst)
                                : std::string("no fitted points with beta <= 0.1"));

    // Linear regime: beta in [3, 10].
    std::vector<double> xs, ys;
    for (const auto& p : points)
        if (p.beta >= 3.0 && p.beta <= 10.0 && p.ok && std::isfinite(p.tau)) {
            xs.push_back(p.beta);
            ys.push_back(p.tau);
        }
    if (xs.size() >= 3) {
        const LinearFit fit = linear_fit(xs, ys);
        ctx.note("linear_regime", "slope=" + num(fit.slope) + " s, R^2=" + num(fit.r_squared));
    } else {
        ctx.note("linear_regime", "only " + std::to_string(xs.size()) + " fitted points with beta in [3, 10]");
    }
}

void cmd_magnetometry(Context& ctx) {
    const auto& cfg = ctx.cfg;
    Scenario s = cfg.scenario;
    if (!s.magnetic) s.magnetic = MagneticSpec{};
    const MagneticSpec& m = *s.magnetic;
    const double g_f = std::abs(m.g_lower);
    const double b_max = bmax(s.modulation, 2, g_f, m.bohr_magneton_hz_per_gauss);

    double lo = 0.0, hi = b_max;
    if (cfg.sweep_axis == SweepAxisKind::Field) {
        lo = cfg.field_start_gauss;
        hi = cfg.field_stop_gauss;
        const double tol = 1e-9 * b_max;
        if (lo < -b_max - tol || hi > b_max + tol)
            throw ValidationError("template bank must lie within +-B_max = " + num(b_max) + " G");
    }
    if (!(hi > lo) || cfg.bank_count < 3) throw ValidationError("template bank needs hi > lo and at least 3 entries");
    std::vector<double> fields(cfg.bank_count);
    for (std::size_t i = 0; i < fields.size(); ++i)
        fields[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(fields.size() - 1);

    const SynthesisGrid grid = synthesis_grid(cfg);
    add_common_summary(ctx, grid);
    const auto [t0, t1] = magnetometry_window(s, grid);
    const auto bank = template_bank(s, grid, fields, t0, t1, ctx.req.threads);
    ctx.note("b_max_gauss", num(b_max));
    ctx.note("bank", std::to_string(fields.size()) + " fields in [" + num(lo) + ", " + num(hi) + "] G");

    std::vector<double> clean;
    if (!ctx.req.measured_path.empty()) {
        const TimeTrace measured = read_trace_csv(ctx.req.measured_path);
        const TimeGrid tg = grid.time_grid();
        if (measured.grid.count != tg.count || std::abs(measured.grid.step / tg.step - 1.0) > 1e-6)
            throw ValidationError("measured trace grid does not match the configured synthesis grid");
        clean = window_magnitude(measured, t0, t1);
        ctx.note("measured", ctx.req.measured_path);
    } else {
        Scenario truth = s;
        truth.magnetic->field_gauss = cfg.true_field_gauss;
        clean = window_magnitude(transmit(truth, grid), t0, t1);
        ctx.note("b_true_gauss", num(cfg.true_field_gauss));
    }

    const FieldEstimate est = estimate_field(clean, bank);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < est.fields.size(); ++i) rows.push_back({est.fields[i], est.correlation[i]});
    Metadata md = scenario_metadata(s);
    md.emplace_back("window_start_s", format_value(t0));
    md.emplace_back("window_stop_s", format_value(t1));
    write_table_csv(ctx.path("correlation.csv"), md, {"field_gauss", "correlation"}, rows);
    ctx.note("b_est_gauss", num(est.b_est));
    ctx.note("bank_step_gauss", num(fields[1] - fields[0]));
    ctx.note("peak_correlation", num(est.peak_correlation));

    // Noise trials: white noise scaled to the trace maximum; trial k uses seed + k.
    SensitivityReport rep;
    rep.b_max = b_max;
    rep.gradient = est.gradient;
    rep.measurement_time_s = t1 - t0;
    rep.ultimate = ultimate_sensitivity(eit_linewidth(s.medium), cfg.atom_density_per_m3, cfg.cell_volume_m3, g_f);
    std::vector<std::vector<double>> trial_rows;
    if (cfg.noise_fraction > 0.0) {
        const double peak = *std::max_element(clean.begin(), clean.end());
        std::vector<double> corr(cfg.noise_trials), b_est(cfg.noise_trials);
        std::vector<int> ambiguous(cfg.noise_trials, 0);
        parallel_for(cfg.noise_trials, ctx.req.threads, [&](std::size_t k) {
            std::mt19937_64 rng(cfg.seed + k);
            std::normal_distribution<double> normal;
            std::vector<double> y = clean;
            for (auto& v : y) v += cfg.noise_fraction * peak * normal(rng);
            try {
                const FieldEstimate e = estimate_field(y, bank);
                corr[k] = e.peak_correlation;
                b_est[k] = e.b_est;
            } catch (const AmbiguityError&) {
                ambiguous[k] = 1;
                corr[k] = b_est[k] = std::nan("");
            }
        });
        double mean = 0.0, count = 0.0;
        for (std::size_t k = 0; k < corr.size(); ++k)
            if (!ambiguous[k]) {
                mean += corr[k];
                count += 1.0;
            }
        if (count < 2.0) throw AmbiguityError("noise trials were ambiguous; no sensitivity estimate");
        mean /= count;
        double var = 0.0;
        for (std::size_t k = 0; k < corr.size(); ++k)
            if (!ambiguous[k]) var += (corr[k] - mean) * (corr[k] - mean);
        rep.noise = std::sqrt(var / (count - 1.0));
        for (std::size_t k = 0; k < corr.size(); ++k)
            trial_rows.push_back({static_cast<double>(k), b_est[k], corr[k], static_cast<double>(ambiguous[k])});
        write_table_csv(ctx.path("noise_trials.csv"), md, {"trial", "b_est_gauss", "peak_correlation", "ambiguous"},
                        trial_rows);
        rep.sensitivity = sensitivity(rep.noise, rep.gradient, rep.measurement_time_s);
    }

    Metadata rmd;
    rmd.emplace_back("b_max_gauss", format_value(rep.b_max));
    write_table_csv(ctx.path("report.csv"), rmd,
                    {"b_est_gauss", "peak_correlation", "gradient_per_gauss", "noise", "measurement_time_s",
                     "sensitivity_gauss_per_rthz", "ultimate_gauss_per_rthz", "b_max_gauss"},
                    {{est.b_est, est.peak_correlation, rep.gradient, rep.noise, rep.measurement_time_s,
                      rep.sensitivity, rep.ultimate, rep.b_max}});
    const double ft = 1e11;  // fT per Gauss
    if (cfg.noise_fraction > 0.0) ctx.note("sensitivity_ft_per_rthz", num(rep.sensitivity * ft));
    ctx.note("ultimate_ft_per_rthz", num(rep.ultimate * ft));
}

void write_manifest(Context& ctx, double wall_s) {
    nlohmann::ordered_json j;
    j["tool"] = "eit_sim";
    j["version"] = kToolVersion;
    j["subcommand"] = ctx.req.command;
    j["config_path"] = ctx.req.config_path;
    j["config"] = serialize_config(ctx.cfg);
    j["options"] = {{"oracle", ctx.req.oracle}, {"measured", ctx.req.measured_path}};
    j["threads"] = ctx.req.threads;
    j["outputs"] = ctx.result.outputs;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ctx.result.summary) summary[k] = v;
    j["summary"] = summary;
    j["wall_time_s"] = wall_s;
    const std::string p = ctx.path("manifest.json");
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write '" + p + "'");
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"trace", "sweep", "spectrum", "decay-curve", "magnetometry"};
    return names;
}

std::pair<double, double> magnetometry_window(const Scenario& s, const SynthesisGrid& grid) {
    const double start = s.probe.turn_on_s + 3.0 / (kTwoPi * eit_linewidth(s.medium));
    const double stop = s.probe.shape == ProbeShape::SquarePulse ? s.probe.turn_on_s + s.probe.duration_s
                                                                 : grid.window();
    if (!(stop > start)) throw ValidationError("probe pulse is shorter than the polariton build-up");
    return {start, stop};
}

std::pair<double, double> ringing_window(const Scenario& s) {
    const double t0 = s.probe.turn_on_s;
    double t1 = t0 + 8.0 / (M_PI * eit_linewidth(s.medium));
    if (s.probe.shape == ProbeShape::SquarePulse) t1 = std::min(t1, t0 + s.probe.duration_s);
    return {t0, t1};
}

unsigned resolve_threads(unsigned flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("EIT_SIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
        throw ValidationError(std::string("EIT_SIM_THREADS must be a positive integer, got '") + env + "'");
    }
    return default_thread_count();
}

RunResult run_command(const RunRequest& req) {
    const auto start = std::chrono::steady_clock::now();
    Context ctx{req, req.config, {}};
    if (req.scale) ctx.cfg.scale = *req.scale;
    if (req.observable) ctx.cfg.observable = *req.observable;
    if (req.threads == 0) throw ValidationError("thread count must be positive");
    fs::create_directories(req.out_dir);

    for (const auto& d : validate(ctx.cfg.scenario))
        if (d.severity == Severity::Warning) ctx.note("warning", d.message);

    if (req.command == "trace") cmd_trace(ctx);
    else if (req.command == "sweep") cmd_sweep(ctx);
    else if (req.command == "spectrum") cmd_spectrum(ctx);
    else if (req.command == "decay-curve") cmd_decay_curve(ctx);
    else if (req.command == "magnetometry") cmd_magnetometry(ctx);
    else throw ValidationError("unknown subcommand '" + req.command + "'");

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(ctx, wall);
    return ctx.result;
}

RunRequest request_from_manifest(const std::string& manifest_path) {
    std::ifstream f(manifest_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read manifest '" + manifest_path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
    }
    RunRequest req;
    try {
        req.command = j.at("subcommand").get<std::string>();
        req.config_path = j.value("config_path", "");
        req.config = parse_config(j.at("config").get<std::string>());
        req.oracle = j.at("options").value("oracle", false);
        req.measured_path = j.at("options").value("measured", "");
        req.threads = j.value("threads", 1u);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest '" + manifest_path + "' lacks a field: " + e.what());
    }
    req.out_dir = fs::path(manifest_path).parent_path().string();
    if (req.out_dir.empty()) req.out_dir = ".";
    return req;
}

}  // namespace eit
