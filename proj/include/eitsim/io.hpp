#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eitsim/error.hpp"
#include "eitsim/model.hpp"
#include "eitsim/synthesis.hpp"

namespace eit {

// Parse failures; the message starts with "line N:".
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

enum class SweepAxisKind { None, Detuning, Field };
enum class Scale { Linear, Log };

struct ScenarioConfig {
    Scenario scenario;

    // [medium] transfer options
    TransferMode transfer = TransferMode::Linear;
    double optical_depth = 1.0;

    // [grids]
    double freq_step_hz = 0.0;  // 0: automatic
    std::size_t grid_count = 0;  // 0: automatic
    SweepAxisKind sweep_axis = SweepAxisKind::None;
    double detuning_start_hz = -150e3;
    double detuning_stop_hz = 150e3;
    double field_start_gauss = 0.0;
    double field_stop_gauss = 0.1;
    std::size_t sweep_count = 101;
    double map_t_start_s = 0.0;
    double map_t_stop_s = 0.0;  // 0: end of window
    std::size_t map_stride = 1;

    // [run]
    Observable observable = Observable::Amplitude;
    Scale scale = Scale::Linear;
    bool bypass_medium = false;
    std::vector<double> betas;
    double beta_coupling_hz = 0.0;  // 0: medium coupling
    std::size_t bank_count = 41;
    double true_field_gauss = 0.03;
    double noise_fraction = 0.0;
    std::size_t noise_trials = 20;
    std::uint64_t seed = 1;
    double atom_density_per_m3 = 2e16;
    double cell_volume_m3 = 5.890486225480862e-8;
    std::size_t spectrum_samples = 256;
};

// Throws ConfigError on unknown keys, malformed values, out-of-range values
// or unit-suffix mismatches.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// Full config text; parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ScenarioConfig& config);

SynthesisGrid synthesis_grid(const ScenarioConfig& config);
SweepAxis sweep_axis(const ScenarioConfig& config);
SweepOptions sweep_options(const ScenarioConfig& config, unsigned threads);
TransmitOptions transmit_options(const ScenarioConfig& config);

// Formats with 9 significant digits.
std::string format_value(double v);

void write_trace_csv(const TimeTrace& trace, const std::string& path);
TimeTrace read_trace_csv(const std::string& path);

void write_map_csv(const SweepMap2D& map, const std::string& path);
SweepMap2D read_map_csv(const std::string& path);

// Generic table: '#' comment lines, a '# columns=' line, then rows.
void write_table_csv(const std::string& path, const Metadata& header, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

// Binary P5, 16-bit big-endian, first row = first sweep value.
void write_heatmap_pgm(const SweepMap2D& map, const std::string& path, Scale scale);
std::vector<std::uint16_t> heatmap_pixels(const SweepMap2D& map, Scale scale);

}  // namespace eit
