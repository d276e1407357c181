#include <cmath>
#include <complex>
#include <cstring>

#include "doctest.h"

#include "eitsim/error.hpp"
#include "eitsim/synthesis.hpp"

using namespace eit;

namespace {

Scenario cw_scenario(double m) {
    Scenario s;
    s.modulation.modulation_index = m;
    s.probe.shape = ProbeShape::ContinuousWave;
    return s;
}

}  // namespace

TEST_CASE("grid helpers") {
    const SynthesisGrid g{1024, 100.0};
    CHECK(g.window() == doctest::Approx(0.01));
    CHECK(g.time_step() == doctest::Approx(0.01 / 1024));
    CHECK(g.signed_bin(0) == 0);
    CHECK(g.signed_bin(511) == 511);
    CHECK(g.signed_bin(512) == -512);
    CHECK(g.signed_bin(1023) == -1);
    CHECK(g.frequency_grid().start == doctest::Approx(-51200.0));
}

TEST_CASE("default grid satisfies its own bounds") {
    for (double m : {0.0, 6.0, 20.0, 240.0}) {
        Scenario s;
        s.modulation.modulation_index = m;
        s.probe.delta_two_photon_hz = 50e3;
        const auto g = default_grid(s);
        const double gam = eit_linewidth(s.medium);
        CHECK((g.count & (g.count - 1)) == 0);
        CHECK(g.count >= 16);
        CHECK((g.count * g.freq_step_hz) >= 4.0 * (m * s.modulation.frequency_hz + 50e3) * (1 - 1e-12));
        CHECK((g.count * g.freq_step_hz) >= 20.0 * gam * (1 - 1e-12));
        CHECK(g.freq_step_hz <= gam / 20.0 * (1 + 1e-12));
        if (m > 0) {
            CHECK(g.freq_step_hz <= s.modulation.frequency_hz / 8.0 * (1 + 1e-12));
            const double k = s.modulation.frequency_hz / g.freq_step_hz;
            CHECK(std::abs(k - std::round(k)) < 1e-9);
        }
        CHECK(g.window() >= s.probe.duration_s + 8.0 / (kTwoPi * gam));
        CHECK_NOTHROW(check_grid(s, g));
    }
}

TEST_CASE("probe spectrum") {
    const SynthesisGrid g{1024, 100.0};
    ProbeSpec cw;
    cw.shape = ProbeShape::ContinuousWave;
    cw.amplitude = 0.7;
    const auto e = probe_spectrum(cw, g);
    CHECK(e[0] == cplx{0.7 * g.window(), 0.0});
    for (std::size_t k = 1; k < e.size(); ++k) CHECK(e[k] == cplx{0.0, 0.0});

    // 256 samples on: discrete Dirichlet kernel with nulls every N/L = 4 bins.
    ProbeSpec sq;
    sq.turn_on_s = 0.0;
    sq.duration_s = 256 * g.time_step();
    const auto s = probe_spectrum(sq, g);
    const auto [j0, j1] = pulse_sample_range(sq, g);
    CHECK(j0 == 0);
    CHECK(j1 == 256);
    const double dt = g.time_step();
    for (std::size_t k = 1; k < 1024; ++k) {
        const double x = M_PI * static_cast<double>(k) / 1024.0;
        const double mag = dt * std::abs(std::sin(256.0 * x) / std::sin(x));
        CHECK(std::abs(std::abs(s[k]) - mag) < 1e-12 * dt * 256);
        if (k % 4 == 0) CHECK(std::abs(s[k]) < 1e-12 * dt * 256);
    }
    CHECK(std::abs(s[0]) == doctest::Approx(256 * dt));

    ProbeSpec off = sq;
    off.turn_on_s = 1.3e-3;
    const auto p = probe_spectrum(off, g);
    double lhs = 0.0;
    for (const auto& v : p) lhs += std::norm(v) * g.freq_step_hz;
    const auto [a, b] = pulse_sample_range(off, g);
    const double rhs = static_cast<double>(b - a) * dt;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    ProbeSpec too_long = sq;
    too_long.duration_s = 0.02;
    CHECK_THROWS_AS(probe_spectrum(too_long, g), ValidationError);
}

TEST_CASE("bypass reproduces the envelope") {
    Scenario s;
    s.probe.turn_on_s = 0.2e-3;
    const auto g = default_grid(s);
    TransmitOptions opt;
    opt.bypass_medium = true;
    const auto tr = transmit(s, g, opt);
    const auto [j0, j1] = pulse_sample_range(s.probe, g);
    for (std::size_t j = 0; j < g.count; ++j) {
        const double want = (j >= j0 && j < j1) ? 1.0 : 0.0;
        CHECK(std::abs(tr.amplitude[j] - cplx{want, 0.0}) < 1e-12);
    }
}

TEST_CASE("continuous probe gives the steady susceptibility") {
    // Unmodulated: a constant equal to the static line.
    Scenario s0 = cw_scenario(0.0);
    s0.probe.delta_two_photon_hz = 4e3;
    const auto g0 = default_grid(s0);
    const auto t0 = transmit(s0, g0);
    const cplx line = eit_line(s0.medium, 0.0, 4e3);
    for (const auto& v : t0.amplitude) CHECK(std::abs(v - line) < 1e-12 * std::abs(line));

    // Modulated: the FFT synthesis matches the direct sideband sum.
    Scenario s = cw_scenario(20.0);
    s.probe.delta_two_photon_hz = 10e3;
    const auto g = default_grid(s);
    const auto tr = transmit(s, g);
    const auto sb = sideband_set(s.modulation);
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < g.count; j += 7) {
        const cplx want = chi_time(s.medium, sb, 0.0, 10e3, g.time_grid().at(j));
        worst = std::max(worst, std::abs(tr.amplitude[j] - want));
        scale = std::max(scale, std::abs(want));
    }
    CHECK(worst < 1e-10 * scale);
}

TEST_CASE("late-pulse response approaches the continuous one") {
    Scenario s;
    s.probe.delta_two_photon_hz = 10e3;
    s.probe.duration_s = 2e-3;
    const auto g = default_grid(s);
    const auto pulse = transmit(s, g);
    const auto sb = sideband_set(s.modulation);
    const double gam = eit_linewidth(s.medium);
    // Twenty build-up times: the switch-on transient is down by e^-10.
    const double settle = 20.0 / (kTwoPi * gam);
    const auto tg = g.time_grid();
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) {
        const double t = tg.at(j);
        // The band-limited switch-off edge leaks a few samples backwards in time.
        if (t < settle || t >= s.probe.duration_s - 5.0 / (kTwoPi * gam)) continue;
        const cplx want = chi_time(s.medium, sb, 0.0, 10e3, t);
        worst = std::max(worst, std::abs(pulse.amplitude[j] - want));
        scale = std::max(scale, std::abs(want));
    }
    CHECK(worst < 1e-3 * scale);
}

TEST_CASE("linear in the probe amplitude") {
    Scenario s;
    s.probe.delta_two_photon_hz = 30e3;
    const auto g = default_grid(s);
    const auto a = transmit(s, g);
    s.probe.amplitude = -2.5;
    const auto b = transmit(s, g);
    for (std::size_t j = 0; j < g.count; ++j)
        CHECK(std::abs(b.amplitude[j] + 2.5 * a.amplitude[j]) < 1e-12 * (1.0 + std::abs(b.amplitude[j])));
}

TEST_CASE("grid validation") {
    Scenario s;
    auto g = default_grid(s);
    SynthesisGrid bad = g;
    bad.freq_step_hz *= 1.01;  // f_c / df no longer integral
    CHECK_THROWS_AS(check_grid(s, bad), ValidationError);
    CHECK_THROWS_AS(transmit(s, bad), ValidationError);
    SynthesisGrid short_window{g.count, 2500.0};  // 0.4 ms window for a 1 ms pulse
    CHECK_THROWS_AS(check_grid(s, short_window), ValidationError);
}

TEST_CASE("sweep maps") {
    Scenario s;
    s.modulation.modulation_index = 6.0;
    s.probe.duration_s = 0.4e-3;
    const auto g = default_grid(s);
    SweepAxis axis{SweepKind::TwoPhotonDetuning, {-40e3, -10e3, 0.0, 25e3}};
    SweepOptions opt;
    opt.window.stride = 3;
    const auto one = sweep_map(s, axis, g, opt);
    opt.threads = 4;
    const auto four = sweep_map(s, axis, g, opt);
    REQUIRE(one.values.size() == four.values.size());
    CHECK(std::memcmp(one.values.data(), four.values.data(), one.values.size() * sizeof(double)) == 0);

    // Each row is the magnitude of the single-detuning trace.
    Scenario row = s;
    row.probe.delta_two_photon_hz = 25e3;
    const auto tr = transmit(row, g);
    for (std::size_t c = 0; c < one.col_count(); ++c)
        CHECK(one.at(3, c) == std::abs(tr.amplitude[c * 3]));

    opt.observable = Observable::Intensity;
    const auto inten = sweep_map(s, axis, g, opt);
    for (std::size_t i = 0; i < inten.values.size(); ++i)
        CHECK(inten.values[i] == doctest::Approx(one.values[i] * one.values[i]).epsilon(1e-14));

    SweepAxis wide{SweepKind::TwoPhotonDetuning, {(g.count * g.freq_step_hz)}};
    CHECK_THROWS_AS(sweep_map(s, wide, g), ValidationError);
    CHECK_THROWS_AS(sweep_map(s, SweepAxis{}, g), ValidationError);
}

TEST_CASE("integrated spectrum of a constant map") {
    SweepMap2D map;
    map.rows = {1.0, 2.0};
    map.columns = {0.0, 2e-6, 101};
    map.values.assign(2 * 101, 0.0);
    for (std::size_t c = 0; c < 101; ++c) {
        map.values[c] = 3.0;
        map.values[101 + c] = 0.5;
    }
    const auto in = integrated_spectrum(map);
    CHECK(in[0] == doctest::Approx(3.0 * 100 * 2e-6));
    CHECK(in[1] == doctest::Approx(0.5 * 100 * 2e-6));
}

TEST_CASE("mean |chi| spectrum") {
    Scenario s;
    s.modulation.modulation_index = 0.0;
    const auto v = mean_abs_chi_spectrum(s, {0.0, 5e3}, 16);
    CHECK(v[0] == doctest::Approx(std::abs(eit_line(s.medium, 0.0, 0.0))));
    CHECK(v[1] == doctest::Approx(std::abs(eit_line(s.medium, 0.0, 5e3))));
    CHECK_THROWS_AS(mean_abs_chi_spectrum(s, {0.0}, 0), ValidationError);
}
