#include "eitsim/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eitsim/bessel.hpp"
#include "eitsim/error.hpp"
#include "eitsim/fft.hpp"
#include "eitsim/parallel.hpp"

namespace eit {

namespace {

constexpr double kSettleDecays = 8.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t wrap(long m, std::size_t n) {
    const long ln = static_cast<long>(n);
    long r = m % ln;
    if (r < 0) r += ln;
    return static_cast<std::size_t>(r);
}

// Number of whole grid steps per modulation period, 0 when unmodulated.
long period_bins(const ModulationSpec& mod, double df) {
    if (mod.modulation_index == 0.0) return 0;
    return std::lround(mod.frequency_hz / df);
}

}  // namespace

std::pair<std::size_t, std::size_t> pulse_sample_range(const ProbeSpec& probe, const SynthesisGrid& grid) {
    const double dt = grid.time_step();
    const auto index = [&](double t) {
        const double x = std::ceil(t / dt - 1e-9);
        return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(grid.count)));
    };
    return {index(probe.turn_on_s), index(probe.turn_on_s + probe.duration_s)};
}

FrequencyGrid SynthesisGrid::frequency_grid() const {
    return {-static_cast<double>(count / 2) * freq_step_hz, freq_step_hz, count};
}

long SynthesisGrid::signed_bin(std::size_t k) const {
    return k < count / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(count);
}

SynthesisGrid default_grid(const Scenario& s) {
    require_valid(s);
    const auto& mod = s.modulation;
    const double g = eit_linewidth(s.medium);
    // The free ringing sits at the two-photon offset, so it widens the reach.
    const double reach = mod.modulation_index * mod.frequency_hz + std::abs(s.probe.delta_two_photon_hz);
    const double span_min = std::max(4.0 * reach, 20.0 * g);
    double window_min = kSettleDecays / (kTwoPi * g);
    if (s.probe.shape == ProbeShape::SquarePulse)
        window_min += s.probe.turn_on_s + s.probe.duration_s;

    double df;
    if (mod.modulation_index > 0.0) {
        const double df_max = std::min(g / 20.0, mod.frequency_hz / 8.0);
        const double k = std::max(std::ceil(mod.frequency_hz / df_max - 1e-9),
                                  std::ceil(window_min * mod.frequency_hz - 1e-9));
        df = mod.frequency_hz / k;
    } else {
        df = std::min(g / 20.0, 1.0 / window_min);
    }
    const auto count = next_pow2(std::max<std::size_t>(
        16, static_cast<std::size_t>(std::ceil(span_min / df - 1e-9))));
    return {count, df};
}

void check_grid(const Scenario& s, const SynthesisGrid& grid) {
    if (grid.count < 2 || !(grid.freq_step_hz > 0.0))
        throw ValidationError("synthesis grid needs count >= 2 and a positive frequency step");
    const auto& mod = s.modulation;
    if (mod.modulation_index > 0.0) {
        const double k = mod.frequency_hz / grid.freq_step_hz;
        if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k) || std::round(k) < 1.0)
            throw ValidationError("modulation period is not commensurate with the time window");
    }
    if (s.probe.shape == ProbeShape::SquarePulse) {
        const double need = s.probe.turn_on_s + s.probe.duration_s + 5.0 / (kTwoPi * eit_linewidth(s.medium));
        if (grid.window() < need * (1.0 - 1e-12))
            throw ValidationError("time window is shorter than the probe pulse plus 5/(2 pi gamma_EIT)");
    }
}

std::vector<cplx> probe_spectrum(const ProbeSpec& probe, const SynthesisGrid& grid) {
    if (grid.count < 2 || !(grid.freq_step_hz > 0.0))
        throw ValidationError("synthesis grid needs count >= 2 and a positive frequency step");
    std::vector<cplx> e(grid.count, cplx{0.0, 0.0});
    if (probe.shape == ProbeShape::ContinuousWave) {
        e[0] = probe.amplitude * grid.window();
        return e;
    }
    if (probe.turn_on_s + probe.duration_s > grid.window() * (1.0 + 1e-12))
        throw ValidationError("probe pulse extends beyond the time window");
    const auto [j0, j1] = pulse_sample_range(probe, grid);
    for (std::size_t j = j0; j < j1; ++j) e[j] = probe.amplitude;
    fft_forward(e);
    const double dt = grid.time_step();
    for (auto& v : e) v *= dt;
    return e;
}

TimeTrace transmit(const Scenario& s, const SynthesisGrid& grid, const TransmitOptions& options) {
    require_valid(s);
    check_grid(s, grid);
    const std::size_t n_bins = grid.count;
    const double df = grid.freq_step_hz;
    const auto e = probe_spectrum(s.probe, grid);

    std::vector<std::size_t> nonzero;
    for (std::size_t k = 0; k < n_bins; ++k)
        if (e[k] != cplx{0.0, 0.0}) nonzero.push_back(k);

    std::vector<cplx> acc(n_bins, cplx{0.0, 0.0});
    if (options.bypass_medium) {
        acc = e;
    } else {
        const auto sb = sideband_set(s.modulation);
        const long kc = period_bins(s.modulation, df);
        const int n_lo = kc == 0 ? 0 : sb.n_min();
        const int n_hi = kc == 0 ? 0 : sb.n_max();
        const double d1 = s.probe.delta_one_photon_hz;
        const double d2 = s.probe.delta_two_photon_hz;
        const auto line = [&](long m) {
            const double nu = static_cast<double>(m) * df;
            return zeeman_line(s.medium, s.magnetic, d1 - nu, d2 - nu);
        };

        if (options.transfer == TransferMode::Linear) {
            // chi_n(omega_k) = c_n line(omega_k + n f_c) depends on the sideband
            // only through the target bin k + n K, so the line is tabulated once
            // over the unwrapped target range. The e^{i n Omega t} factor is the
            // exact cyclic shift by n K bins.
            const long half = static_cast<long>(n_bins / 2);
            const long m_lo = -half + static_cast<long>(n_lo) * kc;
            const long m_hi = half - 1 + static_cast<long>(n_hi) * kc;
            std::vector<cplx> table(static_cast<std::size_t>(m_hi - m_lo + 1));
            for (long m = m_lo; m <= m_hi; ++m) table[static_cast<std::size_t>(m - m_lo)] = line(m);
            for (int n = n_lo; n <= n_hi; ++n) {
                const cplx w = kc == 0 ? cplx{1.0, 0.0} : sb.weight(n);
                for (const std::size_t k : nonzero) {
                    const long m = grid.signed_bin(k) + static_cast<long>(n) * kc;
                    acc[wrap(m, n_bins)] += w * e[k] * table[static_cast<std::size_t>(m - m_lo)];
                }
            }
        } else {
            const double gopt = s.medium.optical_width_hz();
            const double kappa = s.medium.alpha == 0.0 ? 0.0
                                 : options.optical_depth * kTwoPi * gopt / s.medium.alpha;
            const std::size_t np = next_pow2(static_cast<std::size_t>(4 * (n_hi - n_lo) + 8));
            const long h = static_cast<long>(np / 2);
            std::vector<cplx> buf(np);
            for (const std::size_t k : nonzero) {
                const long ks = grid.signed_bin(k);
                std::fill(buf.begin(), buf.end(), cplx{0.0, 0.0});
                for (int n = n_lo; n <= n_hi; ++n) {
                    const cplx w = kc == 0 ? cplx{1.0, 0.0} : sb.weight(n);
                    buf[wrap(n, np)] = w * line(ks + static_cast<long>(n) * kc);
                }
                fft_inverse(buf);  // chi(omega_k, t_p) over one period
                for (auto& v : buf) v = std::exp(cplx{0.0, kappa} * v);
                fft_forward(buf);
                const double inv = 1.0 / static_cast<double>(np);
                if (kc == 0) {
                    acc[k] += buf[0] * inv * e[k];
                    continue;
                }
                for (long n = -h + 1; n <= h - 1; ++n)
                    acc[wrap(ks + n * kc, n_bins)] += buf[wrap(n, np)] * inv * e[k];
            }
        }
    }

    fft_inverse(acc);
    for (auto& v : acc) v *= df;
    TimeTrace trace{grid.time_grid(), std::move(acc), scenario_metadata(s)};
    return trace;
}

SweepMap2D sweep_map(const Scenario& s, const SweepAxis& axis, const SynthesisGrid& grid,
                     const SweepOptions& options) {
    require_valid(s);
    check_grid(s, grid);
    if (axis.values.empty()) throw ValidationError("sweep axis is empty");
    if (options.window.stride == 0) throw ValidationError("map stride must be positive");
    const double half_span = 0.5 * grid.freq_step_hz * static_cast<double>(grid.count);
    MagneticSpec mag = s.magnetic.value_or(MagneticSpec{});
    for (const double v : axis.values) {
        if (!std::isfinite(v)) throw ValidationError("sweep values must be finite");
        const double reach = axis.kind == SweepKind::TwoPhotonDetuning
                                 ? std::abs(v)
                                 : std::abs(2.0 * mag.bohr_magneton_hz_per_gauss * mag.g_lower * v);
        if (reach > half_span) throw ValidationError("sweep value lies outside the frequency grid span");
    }

    const auto tg = grid.time_grid();
    std::size_t j0 = 0;
    while (j0 < tg.count && tg.at(j0) < options.window.t_start) ++j0;
    std::size_t j1 = j0;
    while (j1 < tg.count && tg.at(j1) < options.window.t_stop) ++j1;
    const std::size_t stride = options.window.stride;
    const std::size_t cols = j1 > j0 ? (j1 - j0 + stride - 1) / stride : 0;
    if (cols == 0) throw ValidationError("map time window selects no samples");

    SweepMap2D map;
    map.kind = axis.kind;
    map.rows = axis.values;
    map.columns = {tg.at(j0), tg.step * static_cast<double>(stride), cols};
    map.observable = options.observable;
    map.values.assign(axis.values.size() * cols, 0.0);
    map.metadata = scenario_metadata(s);

    parallel_for(axis.values.size(), options.threads, [&](std::size_t r) {
        Scenario row = s;
        if (axis.kind == SweepKind::TwoPhotonDetuning) {
            row.probe.delta_two_photon_hz = axis.values[r];
        } else {
            MagneticSpec m = mag;
            m.field_gauss = axis.values[r];
            row.magnetic = m;
        }
        const auto trace = transmit(row, grid, options.transmit);
        double* out = map.values.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            const double a = std::abs(trace.amplitude[j0 + c * stride]);
            out[c] = options.observable == Observable::Amplitude ? a : a * a;
        }
    });
    return map;
}

std::vector<double> integrated_spectrum(const SweepMap2D& map) {
    std::vector<double> out(map.row_count(), 0.0);
    const std::size_t cols = map.col_count();
    const double dt = map.columns.step;
    for (std::size_t r = 0; r < map.row_count(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c + 1 < cols; ++c) sum += 0.5 * (map.at(r, c) + map.at(r, c + 1));
        out[r] = sum * dt;
    }
    return out;
}

std::vector<double> mean_abs_chi_spectrum(const Scenario& s, const std::vector<double>& deltas,
                                          std::size_t samples_per_period) {
    require_valid(s);
    if (samples_per_period == 0) throw ValidationError("need at least one sample per period");
    const auto sb = sideband_set(s.modulation);
    const bool modulated = s.modulation.modulation_index > 0.0;
    const std::size_t samples = modulated ? samples_per_period : 1;
    const double d1 = s.probe.delta_one_photon_hz;
    std::vector<double> out(deltas.size(), 0.0);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        double sum = 0.0;
        for (std::size_t p = 0; p < samples; ++p) {
            const double t = static_cast<double>(p) / (static_cast<double>(samples) * s.modulation.frequency_hz);
            const cplx chi = s.magnetic ? chi_time_magnetic(s.medium, sb, *s.magnetic, d1, deltas[i], t)
                                        : chi_time(s.medium, sb, d1, deltas[i], t);
            sum += std::abs(chi);
        }
        out[i] = sum / static_cast<double>(samples);
    }
    return out;
}

Metadata scenario_metadata(const Scenario& s) {
    Metadata md{
        {"modulation_index", num(s.modulation.modulation_index)},
        {"mod_frequency_hz", num(s.modulation.frequency_hz)},
        {"waveform", s.modulation.waveform == Waveform::Sine ? "sine" : "cosine"},
        {"alpha", num(s.medium.alpha)},
        {"gamma_hom_hz", num(s.medium.gamma_hom_hz)},
        {"gamma_doppler_hz", num(s.medium.gamma_doppler_hz)},
        {"gamma_12_hz", num(s.medium.gamma_12_hz)},
        {"rabi_coupling_hz", num(s.medium.rabi_coupling_hz)},
        {"gamma_eit_hz", num(eit_linewidth(s.medium))},
        {"probe_shape", s.probe.shape == ProbeShape::SquarePulse ? "square" : "cw"},
        {"delta_one_photon_hz", num(s.probe.delta_one_photon_hz)},
        {"delta_two_photon_hz", num(s.probe.delta_two_photon_hz)},
    };
    if (s.magnetic) md.emplace_back("field_gauss", num(s.magnetic->field_gauss));
    return md;
}

}  // namespace eit
