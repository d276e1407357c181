#include "eitsim/model.hpp"

#include <cmath>
#include <sstream>

#include "eitsim/error.hpp"

namespace eit {

double ModulationSpec::phase(double t) const {
    const double x = omega() * t;
    return modulation_index * (waveform == Waveform::Sine ? std::sin(x) : std::cos(x));
}

double ModulationSpec::sine_shift() const {
    return waveform == Waveform::Sine ? 0.0 : 0.25 / frequency_hz;
}

double ProbeSpec::envelope(double t) const {
    if (shape == ProbeShape::ContinuousWave) return amplitude;
    return (t >= turn_on_s && t < turn_on_s + duration_s) ? amplitude : 0.0;
}

double MagneticSpec::zeeman_shift_hz(int delta_m) const {
    return static_cast<double>(delta_m) * bohr_magneton_hz_per_gauss * g_lower * field_gauss;
}

double eit_linewidth(const MediumSpec& medium) {
    const double rc = medium.rabi_coupling_hz;
    return 2.0 * (medium.gamma_12_hz + rc * rc / (medium.gamma_doppler_hz + medium.gamma_hom_hz));
}

double instantaneous_frequency(const ModulationSpec& mod, double t) {
    const double x = mod.omega() * t;
    const double a = mod.modulation_index * mod.frequency_hz;
    return mod.waveform == Waveform::Sine ? a * std::cos(x) : -a * std::sin(x);
}

double chirp_rate(const ModulationSpec& mod, double t) {
    const double x = mod.omega() * t;
    const double a = mod.modulation_index * mod.frequency_hz * mod.omega();
    return mod.waveform == Waveform::Sine ? -a * std::sin(x) : -a * std::cos(x);
}

double peak_chirp_angular(const ModulationSpec& mod) {
    return mod.modulation_index * mod.omega() * mod.omega();
}

double beta(const ModulationSpec& mod, double rabi_coupling_hz) {
    if (!(mod.modulation_index > 0.0))
        throw ValidationError("beta is undefined for modulation index 0");
    if (!(mod.frequency_hz > 0.0))
        throw ValidationError("beta requires a positive modulation frequency");
    return (kTwoPi * rabi_coupling_hz) / (std::sqrt(mod.modulation_index) * mod.omega());
}

namespace {

void error(std::vector<Diagnostic>& out, const std::string& msg) {
    out.push_back({Severity::Error, msg});
}

void warning(std::vector<Diagnostic>& out, const std::string& msg) {
    out.push_back({Severity::Warning, msg});
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::vector<Diagnostic> validate(const Scenario& s) {
    std::vector<Diagnostic> out;
    const auto& mod = s.modulation;
    const auto& med = s.medium;
    const auto& probe = s.probe;

    if (!finite(mod.frequency_hz) || mod.frequency_hz <= 0.0)
        error(out, "modulation frequency must be positive");
    if (!finite(mod.modulation_index) || mod.modulation_index < 0.0)
        error(out, "modulation index must be non-negative");
    if (!finite(med.alpha)) error(out, "alpha must be finite");
    if (!finite(med.gamma_hom_hz) || med.gamma_hom_hz <= 0.0)
        error(out, "homogeneous decay rate must be positive");
    if (!finite(med.gamma_doppler_hz) || med.gamma_doppler_hz <= 0.0)
        error(out, "Doppler width must be positive");
    if (!finite(med.gamma_12_hz) || med.gamma_12_hz < 0.0)
        error(out, "ground-state decoherence must be non-negative");
    if (!finite(med.rabi_coupling_hz) || med.rabi_coupling_hz <= 0.0)
        error(out, "coupling Rabi frequency must be positive");
    if (!finite(probe.amplitude)) error(out, "probe amplitude must be finite");
    if (probe.shape == ProbeShape::SquarePulse && !(probe.duration_s > 0.0))
        error(out, "square probe pulse needs a positive duration");
    if (!finite(probe.turn_on_s) || probe.turn_on_s < 0.0)
        error(out, "probe turn-on time must be non-negative");
    if (!finite(probe.rabi_probe_hz) || probe.rabi_probe_hz < 0.0)
        error(out, "probe Rabi frequency must be non-negative");
    if (!finite(probe.delta_one_photon_hz) || !finite(probe.delta_two_photon_hz))
        error(out, "detunings must be finite");

    if (s.magnetic) {
        const auto& mag = *s.magnetic;
        if (!finite(mag.field_gauss)) error(out, "magnetic field must be finite");
        if (!finite(mag.g_lower) || !finite(mag.g_upper)) error(out, "g-factors must be finite");
        if (!(mag.bohr_magneton_hz_per_gauss > 0.0))
            error(out, "Bohr magneton constant must be positive");
        double sum = 0.0;
        bool labels_ok = true;
        const int expected[3] = {-2, 0, 2};
        for (std::size_t k = 0; k < 3; ++k) {
            if (mag.channels[k].delta_m != expected[k]) labels_ok = false;
            if (!(mag.channels[k].weight >= 0.0)) error(out, "channel weights must be non-negative");
            sum += mag.channels[k].weight;
        }
        if (!labels_ok) error(out, "Zeeman channels must be delta_m = -2, 0, +2 in that order");
        if (std::abs(sum - 1.0) > 1e-9) error(out, "Zeeman channel weights must sum to 1");
    }

    if (has_errors(out)) return out;

    const double g_eit = eit_linewidth(med);
    const double sweep = mod.modulation_index * mod.frequency_hz;
    if (sweep > 0.1 * med.gamma_hom_hz) {
        std::ostringstream msg;
        msg << "modulation half-span " << sweep << " Hz is not small against Gamma = "
            << med.gamma_hom_hz << " Hz; constant-background assumption is violated";
        warning(out, msg.str());
    }
    if (g_eit > 0.1 * med.gamma_hom_hz)
        warning(out, "gamma_EIT is not small against Gamma; single-line model may be inaccurate");
    if (g_eit > 0.1 * med.gamma_doppler_hz)
        warning(out, "gamma_EIT is not small against Gamma_D; single-line model may be inaccurate");
    if (probe.rabi_probe_hz > 0.2 * med.rabi_coupling_hz)
        warning(out, "probe Rabi frequency is not small against the coupling; probe is not perturbative");
    return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics)
        if (d.severity == Severity::Error) return true;
    return false;
}

void require_valid(const Scenario& scenario) {
    const auto diags = validate(scenario);
    if (!has_errors(diags)) return;
    std::string msg;
    for (const auto& d : diags) {
        if (d.severity != Severity::Error) continue;
        if (!msg.empty()) msg += "; ";
        msg += d.message;
    }
    throw ValidationError(msg);
}

}  // namespace eit
