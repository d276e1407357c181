#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace eit {

// All user-facing rates are ordinary frequencies in Hz. Conversion to angular
// units happens inside the formulas that need it.
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class Waveform { Sine, Cosine };

struct ModulationSpec {
    double modulation_index = 20.0;  // M
    double frequency_hz = 5e3;       // f_c
    Waveform waveform = Waveform::Sine;

    double omega() const { return kTwoPi * frequency_hz; }
    double period() const { return 1.0 / frequency_hz; }
    // phi(t) in radians.
    double phase(double t) const;
    // Time shift that maps the waveform onto M sin(Omega (t + shift)).
    double sine_shift() const;
};

struct MediumSpec {
    double alpha = 1.0;
    double gamma_hom_hz = 100e6;      // Gamma
    double gamma_doppler_hz = 500e6;  // Gamma_D
    double gamma_12_hz = 1e3;
    // Rc, chosen so that Rc^2/(Gamma+Gamma_D) = 6 kHz (gamma_EIT = 14 kHz).
    double rabi_coupling_hz = 1897366.5961138523;

    // Width of the one-photon line, Gamma + Gamma_D.
    double optical_width_hz() const { return gamma_hom_hz + gamma_doppler_hz; }
};

enum class ProbeShape { SquarePulse, ContinuousWave };

struct ProbeSpec {
    ProbeShape shape = ProbeShape::SquarePulse;
    double amplitude = 1.0;
    double turn_on_s = 0.0;
    double duration_s = 1e-3;
    double rabi_probe_hz = 1e4;  // R_p, Bloch oracle only
    double delta_one_photon_hz = 0.0;
    double delta_two_photon_hz = 0.0;

    // Envelope value at time t.
    double envelope(double t) const;
};

struct ZeemanChannel {
    int delta_m = 0;
    double weight = 0.0;
};

struct MagneticSpec {
    double field_gauss = 0.0;
    double g_lower = 0.5;   // g_F
    double g_upper = -0.5;  // g_F', kept for reference; the channel shifts use g_F
    double bohr_magneton_hz_per_gauss = 1.3996e6;
    std::array<ZeemanChannel, 3> channels{{{-2, 0.25}, {0, 0.5}, {2, 0.25}}};

    double zeeman_shift_hz(int delta_m) const;
};

template <class Tag>
struct UniformGrid {
    double start = 0.0;
    double step = 1.0;
    std::size_t count = 2;

    double at(std::size_t i) const { return start + step * static_cast<double>(i); }
    double span() const { return step * static_cast<double>(count); }
};

struct TimeTag {};
struct FrequencyTag {};
using TimeGrid = UniformGrid<TimeTag>;
using FrequencyGrid = UniformGrid<FrequencyTag>;

struct Scenario {
    ModulationSpec modulation;
    MediumSpec medium;
    ProbeSpec probe;
    std::optional<MagneticSpec> magnetic;
};

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity;
    std::string message;
};

// gamma_EIT = 2 (gamma_12 + Rc^2 / (Gamma_D + Gamma)), Hz.
double eit_linewidth(const MediumSpec& medium);

// dphi/dt / 2pi, Hz.
double instantaneous_frequency(const ModulationSpec& mod, double t);

// d2phi/dt2 / 2pi, Hz/s.
double chirp_rate(const ModulationSpec& mod, double t);

// Peak chirp M Omega^2 in rad/s^2.
double peak_chirp_angular(const ModulationSpec& mod);

// beta = Rc / (sqrt(M) Omega_c). Throws ValidationError when M = 0.
double beta(const ModulationSpec& mod, double rabi_coupling_hz);

std::vector<Diagnostic> validate(const Scenario& scenario);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

// Throws ValidationError carrying every error message, if any.
void require_valid(const Scenario& scenario);

}  // namespace eit
