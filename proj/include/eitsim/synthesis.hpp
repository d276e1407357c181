#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "eitsim/model.hpp"
#include "eitsim/susceptibility.hpp"

namespace eit {

using Metadata = std::vector<std::pair<std::string, std::string>>;

// Paired FFT grids: count samples, frequency step df, time step 1/(count df).
// The time grid starts at 0; the frequency grid is centered on zero.
struct SynthesisGrid {
    std::size_t count = 0;
    double freq_step_hz = 0.0;

    double time_step() const { return 1.0 / (static_cast<double>(count) * freq_step_hz); }
    double window() const { return 1.0 / freq_step_hz; }
    TimeGrid time_grid() const { return {0.0, time_step(), count}; }
    FrequencyGrid frequency_grid() const;
    // Signed bin index of FFT-ordered slot k.
    long signed_bin(std::size_t k) const;
};

// Span >= max(4 M f_c, 20 gamma_EIT), df <= min(gamma_EIT/20, f_c/8),
// f_c/df integral, window long enough for the probe plus eight transient
// decay times, count rounded up to a power of two.
SynthesisGrid default_grid(const Scenario& scenario);

// Throws ValidationError if the grid cannot be used for this scenario.
void check_grid(const Scenario& scenario, const SynthesisGrid& grid);

enum class TransferMode { Linear, BeerLambert };
enum class Observable { Amplitude, Intensity };

struct TransmitOptions {
    bool bypass_medium = false;
    TransferMode transfer = TransferMode::Linear;
    // Beer-Lambert mode: transfer exp(i OD chi / chi_ref), chi_ref = alpha/(2 pi Gamma_opt).
    double optical_depth = 1.0;
};

struct TimeTrace {
    TimeGrid grid;
    std::vector<cplx> amplitude;
    Metadata metadata;
};

// Sample index range [first, last) where a square pulse is on: samples with
// turn_on <= t_j < turn_on + duration.
std::pair<std::size_t, std::size_t> pulse_sample_range(const ProbeSpec& probe, const SynthesisGrid& grid);

// DFT of the probe envelope in FFT order, scaled as dt * sum so that
// sum |E|^2 df = sum |e|^2 dt.
std::vector<cplx> probe_spectrum(const ProbeSpec& probe, const SynthesisGrid& grid);

TimeTrace transmit(const Scenario& scenario, const SynthesisGrid& grid,
                   const TransmitOptions& options = {});

enum class SweepKind { TwoPhotonDetuning, MagneticField };

struct SweepAxis {
    SweepKind kind = SweepKind::TwoPhotonDetuning;
    std::vector<double> values;  // Hz or Gauss
};

// Column selection for maps: samples with t_start <= t < t_stop, every stride-th.
struct MapWindow {
    double t_start = 0.0;
    double t_stop = 1e300;
    std::size_t stride = 1;
};

struct SweepOptions {
    TransmitOptions transmit;
    Observable observable = Observable::Amplitude;
    MapWindow window;
    unsigned threads = 1;
};

struct SweepMap2D {
    SweepKind kind = SweepKind::TwoPhotonDetuning;
    std::vector<double> rows;
    TimeGrid columns;
    Observable observable = Observable::Amplitude;
    std::vector<double> values;  // row-major, rows.size() x columns.count
    Metadata metadata;

    std::size_t row_count() const { return rows.size(); }
    std::size_t col_count() const { return columns.count; }
    double at(std::size_t r, std::size_t c) const { return values[r * columns.count + c]; }
};

SweepMap2D sweep_map(const Scenario& scenario, const SweepAxis& axis, const SynthesisGrid& grid,
                     const SweepOptions& options = {});

// Per-row trapezoid integral over the time axis.
std::vector<double> integrated_spectrum(const SweepMap2D& map);

// Time average over one modulation period of |chi(Delta, delta, t)| (channel
// weighted when a magnetic spec is present) for each two-photon detuning.
std::vector<double> mean_abs_chi_spectrum(const Scenario& scenario, const std::vector<double>& deltas,
                                          std::size_t samples_per_period = 256);

Metadata scenario_metadata(const Scenario& scenario);

}  // namespace eit
