#include "eitsim/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "eitsim/fft.hpp"

namespace eit {

namespace {

enum class Range { Any, NonNegative, Positive };

// One config key: how to read it from text into the config and how to print it.
struct Key {
    std::string section;
    std::string name;
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& text, Range range) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (text.empty() || end != begin + text.size() || errno == ERANGE || !std::isfinite(v))
        throw std::invalid_argument("malformed number '" + text + "'");
    if (range == Range::NonNegative && v < 0.0) throw std::invalid_argument("value must be non-negative");
    if (range == Range::Positive && !(v > 0.0)) throw std::invalid_argument("value must be positive");
    return v;
}

std::uint64_t to_unsigned(const std::string& text, bool positive) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("malformed integer '" + text + "'");
    errno = 0;
    const unsigned long long v = std::strtoull(text.c_str(), nullptr, 10);
    if (errno == ERANGE) throw std::invalid_argument("integer out of range");
    if (positive && v == 0) throw std::invalid_argument("value must be positive");
    return v;
}

bool to_bool(const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + text + "'");
}

template <class E>
E to_enum(const std::string& text, const std::vector<std::pair<std::string, E>>& names) {
    for (const auto& [n, v] : names)
        if (n == text) return v;
    std::string allowed;
    for (const auto& [n, v] : names) allowed += (allowed.empty() ? "" : "|") + n;
    throw std::invalid_argument("expected one of " + allowed + ", got '" + text + "'");
}

template <class E>
std::string from_enum(E value, const std::vector<std::pair<std::string, E>>& names) {
    for (const auto& [n, v] : names)
        if (v == value) return n;
    return names.front().first;
}

const std::vector<std::pair<std::string, Waveform>> kWaveforms{{"sine", Waveform::Sine}, {"cosine", Waveform::Cosine}};
const std::vector<std::pair<std::string, ProbeShape>> kShapes{{"square", ProbeShape::SquarePulse},
                                                              {"cw", ProbeShape::ContinuousWave}};
const std::vector<std::pair<std::string, TransferMode>> kTransfers{{"linear", TransferMode::Linear},
                                                                   {"beer_lambert", TransferMode::BeerLambert}};
const std::vector<std::pair<std::string, SweepAxisKind>> kAxes{
    {"none", SweepAxisKind::None}, {"detuning", SweepAxisKind::Detuning}, {"field", SweepAxisKind::Field}};
const std::vector<std::pair<std::string, Observable>> kObservables{{"amplitude", Observable::Amplitude},
                                                                   {"intensity", Observable::Intensity}};
const std::vector<std::pair<std::string, Scale>> kScales{{"linear", Scale::Linear}, {"log", Scale::Log}};

Key num_key(std::string section, std::string name, double ScenarioConfig::*field, Range range) {
    return {section, name, [field, range](ScenarioConfig& c, const std::string& v) { c.*field = to_double(v, range); },
            [field](const ScenarioConfig& c) { return exact(c.*field); }};
}

template <class Get>
Key num_key_at(std::string section, std::string name, Get access, Range range) {
    return {section, name,
            [access, range](ScenarioConfig& c, const std::string& v) { access(c) = to_double(v, range); },
            [access](const ScenarioConfig& c) { return exact(access(const_cast<ScenarioConfig&>(c))); }};
}

Key size_key(std::string section, std::string name, std::size_t ScenarioConfig::*field, bool positive) {
    return {section, name,
            [field, positive](ScenarioConfig& c, const std::string& v) {
                c.*field = static_cast<std::size_t>(to_unsigned(v, positive));
            },
            [field](const ScenarioConfig& c) { return std::to_string(c.*field); }};
}

template <class E, class Get>
Key enum_key(std::string section, std::string name, Get access, const std::vector<std::pair<std::string, E>>& names) {
    return {section, name, [access, &names](ScenarioConfig& c, const std::string& v) { access(c) = to_enum(v, names); },
            [access, &names](const ScenarioConfig& c) {
                return from_enum(access(const_cast<ScenarioConfig&>(c)), names);
            }};
}

MagneticSpec& mag(ScenarioConfig& c) {
    if (!c.scenario.magnetic) c.scenario.magnetic = MagneticSpec{};
    return *c.scenario.magnetic;
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        const auto M = [](ScenarioConfig& c) -> ModulationSpec& { return c.scenario.modulation; };
        const auto D = [](ScenarioConfig& c) -> MediumSpec& { return c.scenario.medium; };
        const auto P = [](ScenarioConfig& c) -> ProbeSpec& { return c.scenario.probe; };

        k.push_back(num_key_at("modulation", "modulation_index", [M](ScenarioConfig& c) -> double& { return M(c).modulation_index; }, Range::NonNegative));
        k.push_back(num_key_at("modulation", "mod_frequency_hz", [M](ScenarioConfig& c) -> double& { return M(c).frequency_hz; }, Range::Positive));
        k.push_back(enum_key("modulation", "waveform", [M](ScenarioConfig& c) -> Waveform& { return M(c).waveform; }, kWaveforms));

        k.push_back(num_key_at("medium", "alpha", [D](ScenarioConfig& c) -> double& { return D(c).alpha; }, Range::Any));
        k.push_back(num_key_at("medium", "gamma_hom_hz", [D](ScenarioConfig& c) -> double& { return D(c).gamma_hom_hz; }, Range::Positive));
        k.push_back(num_key_at("medium", "gamma_doppler_hz", [D](ScenarioConfig& c) -> double& { return D(c).gamma_doppler_hz; }, Range::Positive));
        k.push_back(num_key_at("medium", "gamma_12_hz", [D](ScenarioConfig& c) -> double& { return D(c).gamma_12_hz; }, Range::NonNegative));
        k.push_back(num_key_at("medium", "rabi_coupling_hz", [D](ScenarioConfig& c) -> double& { return D(c).rabi_coupling_hz; }, Range::Positive));
        k.push_back(enum_key("medium", "transfer", [](ScenarioConfig& c) -> TransferMode& { return c.transfer; }, kTransfers));
        k.push_back(num_key("medium", "optical_depth", &ScenarioConfig::optical_depth, Range::NonNegative));

        k.push_back(enum_key("probe", "shape", [P](ScenarioConfig& c) -> ProbeShape& { return P(c).shape; }, kShapes));
        k.push_back(num_key_at("probe", "amplitude", [P](ScenarioConfig& c) -> double& { return P(c).amplitude; }, Range::Any));
        k.push_back(num_key_at("probe", "turn_on_s", [P](ScenarioConfig& c) -> double& { return P(c).turn_on_s; }, Range::NonNegative));
        k.push_back(num_key_at("probe", "duration_s", [P](ScenarioConfig& c) -> double& { return P(c).duration_s; }, Range::Positive));
        k.push_back(num_key_at("probe", "rabi_probe_hz", [P](ScenarioConfig& c) -> double& { return P(c).rabi_probe_hz; }, Range::NonNegative));
        k.push_back(num_key_at("probe", "delta_one_photon_hz", [P](ScenarioConfig& c) -> double& { return P(c).delta_one_photon_hz; }, Range::Any));
        k.push_back(num_key_at("probe", "delta_two_photon_hz", [P](ScenarioConfig& c) -> double& { return P(c).delta_two_photon_hz; }, Range::Any));

        k.push_back({"magnetic", "enabled",
                     [](ScenarioConfig& c, const std::string& v) {
                         if (to_bool(v)) mag(c);
                         else c.scenario.magnetic.reset();
                     },
                     [](const ScenarioConfig& c) { return std::string(c.scenario.magnetic ? "true" : "false"); }});
        const auto G = [](ScenarioConfig& c) -> MagneticSpec& { return mag(c); };
        k.push_back(num_key_at("magnetic", "field_gauss", [G](ScenarioConfig& c) -> double& { return G(c).field_gauss; }, Range::Any));
        k.push_back(num_key_at("magnetic", "g_lower", [G](ScenarioConfig& c) -> double& { return G(c).g_lower; }, Range::Any));
        k.push_back(num_key_at("magnetic", "g_upper", [G](ScenarioConfig& c) -> double& { return G(c).g_upper; }, Range::Any));
        k.push_back(num_key_at("magnetic", "bohr_magneton_hz_per_gauss", [G](ScenarioConfig& c) -> double& { return G(c).bohr_magneton_hz_per_gauss; }, Range::Positive));
        k.push_back(num_key_at("magnetic", "weight_minus2", [G](ScenarioConfig& c) -> double& { return G(c).channels[0].weight; }, Range::NonNegative));
        k.push_back(num_key_at("magnetic", "weight_zero", [G](ScenarioConfig& c) -> double& { return G(c).channels[1].weight; }, Range::NonNegative));
        k.push_back(num_key_at("magnetic", "weight_plus2", [G](ScenarioConfig& c) -> double& { return G(c).channels[2].weight; }, Range::NonNegative));

        k.push_back(num_key("grids", "freq_step_hz", &ScenarioConfig::freq_step_hz, Range::NonNegative));
        k.push_back(size_key("grids", "count", &ScenarioConfig::grid_count, false));
        k.push_back(enum_key("grids", "sweep_axis", [](ScenarioConfig& c) -> SweepAxisKind& { return c.sweep_axis; }, kAxes));
        k.push_back(num_key("grids", "detuning_start_hz", &ScenarioConfig::detuning_start_hz, Range::Any));
        k.push_back(num_key("grids", "detuning_stop_hz", &ScenarioConfig::detuning_stop_hz, Range::Any));
        k.push_back(num_key("grids", "field_start_gauss", &ScenarioConfig::field_start_gauss, Range::Any));
        k.push_back(num_key("grids", "field_stop_gauss", &ScenarioConfig::field_stop_gauss, Range::Any));
        k.push_back(size_key("grids", "sweep_count", &ScenarioConfig::sweep_count, true));
        k.push_back(num_key("grids", "map_t_start_s", &ScenarioConfig::map_t_start_s, Range::NonNegative));
        k.push_back(num_key("grids", "map_t_stop_s", &ScenarioConfig::map_t_stop_s, Range::NonNegative));
        k.push_back(size_key("grids", "map_stride", &ScenarioConfig::map_stride, true));

        k.push_back(enum_key("run", "observable", [](ScenarioConfig& c) -> Observable& { return c.observable; }, kObservables));
        k.push_back(enum_key("run", "scale", [](ScenarioConfig& c) -> Scale& { return c.scale; }, kScales));
        k.push_back({"run", "bypass_medium", [](ScenarioConfig& c, const std::string& v) { c.bypass_medium = to_bool(v); },
                     [](const ScenarioConfig& c) { return std::string(c.bypass_medium ? "true" : "false"); }});
        k.push_back({"run", "betas",
                     [](ScenarioConfig& c, const std::string& v) {
                         c.betas.clear();
                         std::stringstream ss(v);
                         std::string item;
                         while (std::getline(ss, item, ',')) c.betas.push_back(to_double(trim(item), Range::Positive));
                     },
                     [](const ScenarioConfig& c) {
                         std::string out;
                         for (const double b : c.betas) out += (out.empty() ? "" : ", ") + exact(b);
                         return out;
                     }});
        k.push_back(num_key("run", "beta_coupling_hz", &ScenarioConfig::beta_coupling_hz, Range::NonNegative));
        k.push_back(size_key("run", "bank_count", &ScenarioConfig::bank_count, true));
        k.push_back(num_key("run", "true_field_gauss", &ScenarioConfig::true_field_gauss, Range::Any));
        k.push_back(num_key("run", "noise_fraction", &ScenarioConfig::noise_fraction, Range::NonNegative));
        k.push_back(size_key("run", "noise_trials", &ScenarioConfig::noise_trials, true));
        k.push_back({"run", "seed", [](ScenarioConfig& c, const std::string& v) { c.seed = to_unsigned(v, false); },
                     [](const ScenarioConfig& c) { return std::to_string(c.seed); }});
        k.push_back(num_key("run", "atom_density_per_m3", &ScenarioConfig::atom_density_per_m3, Range::Positive));
        k.push_back(num_key("run", "cell_volume_m3", &ScenarioConfig::cell_volume_m3, Range::Positive));
        k.push_back(size_key("run", "spectrum_samples", &ScenarioConfig::spectrum_samples, true));
        return k;
    }();
    return table;
}

const char* const kSections[] = {"modulation", "medium", "probe", "magnetic", "grids", "run"};

// Splits name into (stem, unit) when the trailing component is a unit suffix.
std::pair<std::string, std::string> split_unit(const std::string& name) {
    static const char* const units[] = {"hz", "khz", "mhz", "ghz", "s", "ms", "us", "ns", "gauss", "mg",
                                        "g", "t", "nt", "m3", "cm3", "per_m3", "per_cm3"};
    for (const char* u : units) {
        const std::string suffix = std::string("_") + u;
        if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            return {name.substr(0, name.size() - suffix.size()), u};
    }
    return {name, ""};
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    std::string section;
    std::map<std::string, std::size_t> seen;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections))
                fail(line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string name = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(line_no, "key '" + name + "' appears before any section");

        const Key* key = nullptr;
        for (const auto& k : keys())
            if (k.section == section && k.name == name) key = &k;
        if (!key) {
            const auto [stem, unit] = split_unit(name);
            for (const auto& k : keys()) {
                const auto [kstem, kunit] = split_unit(k.name);
                if (k.section == section && !kunit.empty() && kstem == stem)
                    fail(line_no, "unit-suffix mismatch: '" + name + "' should be '" + k.name + "'");
            }
            fail(line_no, "unknown key '" + name + "' in section [" + section + "]");
        }
        const std::string id = section + "." + name;
        if (seen.count(id)) fail(line_no, "duplicate key '" + name + "' (first on line " + std::to_string(seen[id]) + ")");
        seen[id] = line_no;
        try {
            key->set(cfg, value);
        } catch (const std::invalid_argument& e) {
            fail(line_no, name + ": " + e.what());
        }
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string serialize_config(const ScenarioConfig& config) {
    std::string out;
    for (const char* section : kSections) {
        const bool magnetic = std::string(section) == "magnetic";
        out += std::string(out.empty() ? "" : "\n") + "[" + section + "]\n";
        for (const auto& k : keys()) {
            if (k.section != section) continue;
            if (magnetic && k.name != "enabled" && !config.scenario.magnetic) continue;
            out += k.name + " = " + k.get(config) + "\n";
        }
    }
    return out;
}

SynthesisGrid synthesis_grid(const ScenarioConfig& config) {
    SynthesisGrid grid = default_grid(config.scenario);
    // Each map row shifts the line, not the probe band, so the sweep only
    // has to stay inside the half-span with some margin.
    double sweep = 0.0;
    if (config.sweep_axis == SweepAxisKind::Detuning) {
        sweep = std::max(std::abs(config.detuning_start_hz), std::abs(config.detuning_stop_hz));
    } else if (config.sweep_axis == SweepAxisKind::Field) {
        const MagneticSpec m = config.scenario.magnetic.value_or(MagneticSpec{});
        const double b = std::max(std::abs(config.field_start_gauss), std::abs(config.field_stop_gauss));
        sweep = 2.0 * m.bohr_magneton_hz_per_gauss * std::abs(m.g_lower) * b;
    }
    double span = std::max(static_cast<double>(grid.count) * grid.freq_step_hz, 2.2 * sweep);
    if (config.freq_step_hz > 0.0) grid.freq_step_hz = config.freq_step_hz;
    grid.count = next_pow2(std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(span / grid.freq_step_hz - 1e-9))));
    if (config.grid_count > 0) grid.count = config.grid_count;
    check_grid(config.scenario, grid);
    return grid;
}

SweepAxis sweep_axis(const ScenarioConfig& c) {
    SweepAxis axis;
    double a = 0.0, b = 0.0;
    switch (c.sweep_axis) {
        case SweepAxisKind::None: throw ConfigError("config has no sweep axis (set [grids] sweep_axis)");
        case SweepAxisKind::Detuning:
            axis.kind = SweepKind::TwoPhotonDetuning;
            a = c.detuning_start_hz;
            b = c.detuning_stop_hz;
            break;
        case SweepAxisKind::Field:
            axis.kind = SweepKind::MagneticField;
            a = c.field_start_gauss;
            b = c.field_stop_gauss;
            break;
    }
    if (c.sweep_count == 1) {
        axis.values = {a};
        return axis;
    }
    if (!(b > a)) throw ConfigError("sweep stop must exceed sweep start");
    axis.values.resize(c.sweep_count);
    for (std::size_t i = 0; i < c.sweep_count; ++i)
        axis.values[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(c.sweep_count - 1);
    return axis;
}

TransmitOptions transmit_options(const ScenarioConfig& c) {
    TransmitOptions t;
    t.bypass_medium = c.bypass_medium;
    t.transfer = c.transfer;
    t.optical_depth = c.optical_depth;
    return t;
}

SweepOptions sweep_options(const ScenarioConfig& c, unsigned threads) {
    SweepOptions o;
    o.transmit = transmit_options(c);
    o.observable = c.observable;
    o.window.t_start = c.map_t_start_s;
    o.window.t_stop = c.map_t_stop_s > 0.0 ? c.map_t_stop_s : std::numeric_limits<double>::infinity();
    o.window.stride = c.map_stride;
    o.threads = threads;
    return o;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing: " + std::strerror(errno));
    return f;
}

void finish(std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

void write_header(std::ostream& out, const Metadata& md) {
    for (const auto& [k, v] : md) out << "# " << k << "=" << v << "\n";
}

struct CsvFile {
    std::map<std::string, std::string> meta;
    std::vector<std::vector<double>> rows;
};

CsvFile read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read '" + path + "'");
    CsvFile csv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) csv.meta[trim(line.substr(1, eq - 1))] = line.substr(eq + 1);
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        csv.rows.push_back(std::move(row));
    }
    return csv;
}

double meta_number(const CsvFile& csv, const std::string& key, const std::string& path) {
    const auto it = csv.meta.find(key);
    if (it == csv.meta.end()) throw std::runtime_error("'" + path + "' lacks header key " + key);
    return std::strtod(it->second.c_str(), nullptr);
}

}  // namespace

void write_table_csv(const std::string& path, const Metadata& header, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
    auto f = open_out(path);
    write_header(f, header);
    f << "# columns=";
    for (std::size_t i = 0; i < columns.size(); ++i) f << (i ? "," : "") << columns[i];
    f << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_value(row[i]);
        f << "\n";
    }
    finish(f, path);
}

void write_trace_csv(const TimeTrace& trace, const std::string& path) {
    if (trace.amplitude.empty()) throw ValidationError("trace is empty");
    Metadata md = trace.metadata;
    md.emplace_back("t_start_s", format_value(trace.grid.start));
    md.emplace_back("t_step_s", exact(trace.grid.step));
    md.emplace_back("samples", std::to_string(trace.amplitude.size()));
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.amplitude.size());
    for (std::size_t i = 0; i < trace.amplitude.size(); ++i) {
        const auto& a = trace.amplitude[i];
        rows.push_back({trace.grid.at(i), a.real(), a.imag(), std::abs(a)});
    }
    write_table_csv(path, md, {"t_s", "re", "im", "abs"}, rows);
}

TimeTrace read_trace_csv(const std::string& path) {
    const auto csv = read_csv(path);
    if (csv.rows.size() < 2) throw ValidationError("'" + path + "' holds fewer than two samples");
    TimeTrace trace;
    trace.grid = {meta_number(csv, "t_start_s", path), meta_number(csv, "t_step_s", path), csv.rows.size()};
    for (const auto& row : csv.rows) {
        if (row.size() < 3) throw ValidationError("'" + path + "' has a malformed row");
        trace.amplitude.emplace_back(row[1], row[2]);
    }
    return trace;
}

void write_map_csv(const SweepMap2D& map, const std::string& path) {
    if (map.row_count() == 0 || map.col_count() == 0) throw ValidationError("map is empty");
    auto f = open_out(path);
    write_header(f, map.metadata);
    f << "# row_axis=" << (map.kind == SweepKind::TwoPhotonDetuning ? "two_photon_detuning_hz" : "field_gauss") << "\n";
    f << "# observable=" << (map.observable == Observable::Amplitude ? "amplitude" : "intensity") << "\n";
    f << "# rows=" << map.row_count() << "\n";
    f << "# columns=" << map.col_count() << "\n";
    f << "# t_start_s=" << exact(map.columns.start) << "\n";
    f << "# t_step_s=" << exact(map.columns.step) << "\n";
    f << "# row_values=";
    for (std::size_t r = 0; r < map.row_count(); ++r) f << (r ? "," : "") << exact(map.rows[r]);
    f << "\n";
    for (std::size_t r = 0; r < map.row_count(); ++r) {
        for (std::size_t c = 0; c < map.col_count(); ++c) f << (c ? "," : "") << format_value(map.at(r, c));
        f << "\n";
    }
    finish(f, path);
}

SweepMap2D read_map_csv(const std::string& path) {
    const auto csv = read_csv(path);
    SweepMap2D map;
    const auto axis = csv.meta.find("row_axis");
    map.kind = (axis != csv.meta.end() && axis->second == "field_gauss") ? SweepKind::MagneticField
                                                                           : SweepKind::TwoPhotonDetuning;
    const auto obs = csv.meta.find("observable");
    map.observable = (obs != csv.meta.end() && obs->second == "intensity") ? Observable::Intensity : Observable::Amplitude;
    const auto cols = static_cast<std::size_t>(meta_number(csv, "columns", path));
    map.columns = {meta_number(csv, "t_start_s", path), meta_number(csv, "t_step_s", path), cols};
    const auto rv = csv.meta.find("row_values");
    if (rv == csv.meta.end()) throw std::runtime_error("'" + path + "' lacks row_values");
    std::stringstream ss(rv->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) map.rows.push_back(std::strtod(cell.c_str(), nullptr));
    if (map.rows.size() != csv.rows.size()) throw std::runtime_error("'" + path + "' row count mismatch");
    for (const auto& row : csv.rows) {
        if (row.size() != cols) throw std::runtime_error("'" + path + "' column count mismatch");
        map.values.insert(map.values.end(), row.begin(), row.end());
    }
    return map;
}

std::vector<std::uint16_t> heatmap_pixels(const SweepMap2D& map, Scale scale) {
    if (map.values.empty()) throw ValidationError("map is empty");
    for (const double v : map.values)
        if (std::isnan(v)) throw ValidationError("map contains NaN");
    std::vector<double> v = map.values;
    if (scale == Scale::Log) {
        const double top = *std::max_element(v.begin(), v.end());
        const double floor = top > 0.0 ? top * 1e-6 : 1.0;
        for (double& x : v) x = std::log10(std::max(x, floor));
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, range = *hi - *lo;
    std::vector<std::uint16_t> px(v.size(), 0);
    if (!(range > 0.0) || !std::isfinite(range)) return px;
    for (std::size_t i = 0; i < v.size(); ++i)
        px[i] = static_cast<std::uint16_t>(std::lround((v[i] - a) / range * 65535.0));
    return px;
}

void write_heatmap_pgm(const SweepMap2D& map, const std::string& path, Scale scale) {
    const auto px = heatmap_pixels(map, scale);
    auto f = open_out(path);
    f << "P5\n" << map.col_count() << " " << map.row_count() << "\n65535\n";
    std::vector<char> bytes(px.size() * 2);
    for (std::size_t i = 0; i < px.size(); ++i) {
        bytes[2 * i] = static_cast<char>(px[i] >> 8);
        bytes[2 * i + 1] = static_cast<char>(px[i] & 0xff);
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    finish(f, path);
}

}  // namespace eit
