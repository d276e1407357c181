#include <cmath>
#include <random>

#include "doctest.h"

#include "eitsim/error.hpp"
#include "eitsim/model.hpp"

using namespace eit;

TEST_CASE("eit linewidth: coupling-off limit and operating point") {
    MediumSpec m;
    m.rabi_coupling_hz = 0.0;
    CHECK(eit_linewidth(m) == doctest::Approx(2000.0).epsilon(1e-15));

    // Rc^2 / (Gamma_D + Gamma) = 6 kHz with gamma_12 = 1 kHz gives 14 kHz.
    CHECK(eit_linewidth(MediumSpec{}) == doctest::Approx(14000.0).epsilon(1e-10));

    MediumSpec h;
    h.gamma_12_hz = 2e3;
    h.rabi_coupling_hz = 100e3;
    h.gamma_doppler_hz = 500e6;
    h.gamma_hom_hz = 100e6;
    CHECK(eit_linewidth(h) == doctest::Approx(2.0 * (2000.0 + 1e10 / 6e8)).epsilon(1e-14));
    CHECK(eit_linewidth(h) == doctest::Approx(4033.3333).epsilon(1e-7));
}

TEST_CASE("eit linewidth is monotone in each rate") {
    const MediumSpec base;
    const double g0 = eit_linewidth(base);
    auto up = [&](auto field, double k) {
        MediumSpec m = base;
        m.*field *= k;
        return eit_linewidth(m);
    };
    CHECK(up(&MediumSpec::rabi_coupling_hz, 1.1) > g0);
    CHECK(up(&MediumSpec::gamma_12_hz, 1.1) > g0);
    CHECK(up(&MediumSpec::gamma_hom_hz, 1.1) < g0);
    CHECK(up(&MediumSpec::gamma_doppler_hz, 1.1) < g0);
}

TEST_CASE("instantaneous frequency of the sine waveform") {
    ModulationSpec mod;  // M = 20, f_c = 5 kHz
    CHECK(instantaneous_frequency(mod, 0.0) == doctest::Approx(100e3));
    CHECK(std::abs(instantaneous_frequency(mod, 1.0 / (4.0 * mod.frequency_hz))) < 1e-9);
    for (double t : {1e-5, 7.3e-5, 1.9e-4})
        CHECK(instantaneous_frequency(mod, t) ==
              doctest::Approx(mod.modulation_index * mod.frequency_hz * std::cos(mod.omega() * t)));
}

TEST_CASE("instantaneous frequency integrates back to the phase") {
    for (const auto w : {Waveform::Sine, Waveform::Cosine}) {
        ModulationSpec mod{7.0, 3e3, w};
        const int n = 20000;
        const double T = mod.period(), h = T / n;
        double acc = 0.0, worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = i * h;
            acc += 0.5 * h * (instantaneous_frequency(mod, t) + instantaneous_frequency(mod, t + h));
            const double phi = (mod.phase(t + h) - mod.phase(0.0)) / kTwoPi;
            worst = std::max(worst, std::abs(acc - phi));
        }
        CHECK(worst / (mod.modulation_index / kTwoPi) < 1e-6);
    }
}

TEST_CASE("chirp rate") {
    ModulationSpec cos_mod{20.0, 5e3, Waveform::Cosine};
    CHECK(chirp_rate(cos_mod, 0.0) == doctest::Approx(-20.0 * 5e3 * cos_mod.omega()));
    ModulationSpec sin_mod{20.0, 5e3, Waveform::Sine};
    CHECK(std::abs(chirp_rate(sin_mod, 1.0 / (4.0 * 5e3))) == doctest::Approx(20.0 * 5e3 * sin_mod.omega()));
    ModulationSpec m10{10.0, 15e3, Waveform::Sine};
    const double w = kTwoPi * 15e3;
    CHECK(peak_chirp_angular(m10) == doctest::Approx(10.0 * w * w));
    CHECK(peak_chirp_angular(m10) == doctest::Approx(8.88e10).epsilon(1e-3));
}

TEST_CASE("beta") {
    ModulationSpec mod{20.0, 5e3, Waveform::Sine};
    // Rc angular = sqrt(M) Omega_c -> beta = 1.
    CHECK(beta(mod, std::sqrt(20.0) * 5e3) == doctest::Approx(1.0));
    CHECK(beta(mod, 30e3) == doctest::Approx(30000.0 / (std::sqrt(20.0) * 5000.0)));
    CHECK(beta(mod, 30e3) == doctest::Approx(1.342).epsilon(1e-3));
    CHECK(beta(mod, 60e3) == doctest::Approx(2.0 * beta(mod, 30e3)));
    ModulationSpec m4 = mod;
    m4.modulation_index *= 4.0;
    CHECK(beta(m4, 30e3) == doctest::Approx(0.5 * beta(mod, 30e3)));
    for (double k : {0.1, 3.0, 17.0}) {
        ModulationSpec mk = mod;
        mk.frequency_hz *= k;
        CHECK(beta(mk, 30e3 * k) == doctest::Approx(beta(mod, 30e3)).epsilon(1e-14));
    }
    ModulationSpec m0 = mod;
    m0.modulation_index = 0.0;
    CHECK_THROWS_AS(beta(m0, 30e3), ValidationError);
}

TEST_CASE("validate") {
    CHECK(validate(Scenario{}).empty());

    Scenario wide;
    wide.modulation.modulation_index = 40e3;  // M f_c = 200 MHz
    wide.medium.gamma_hom_hz = 100e6;
    const auto w = validate(wide);
    CHECK_FALSE(has_errors(w));
    REQUIRE_FALSE(w.empty());
    CHECK(w.front().severity == Severity::Warning);

    Scenario bad;
    bad.modulation.frequency_hz = 0.0;
    CHECK(has_errors(validate(bad)));
    CHECK_THROWS_AS(require_valid(bad), ValidationError);
    bad.modulation.frequency_hz = -5.0;
    CHECK(has_errors(validate(bad)));

    Scenario weights;
    weights.magnetic = MagneticSpec{};
    weights.magnetic->channels[0].weight = 0.5;
    CHECK(has_errors(validate(weights)));

    Scenario strong;
    strong.probe.rabi_probe_hz = 0.5 * strong.medium.rabi_coupling_hz;
    CHECK_FALSE(validate(strong).empty());
}

TEST_CASE("Zeeman shift") {
    MagneticSpec m;
    m.field_gauss = 0.05;
    // 2 * 1.3996 MHz/G * 0.5 * 0.05 G
    CHECK(m.zeeman_shift_hz(2) == doctest::Approx(69980.0).epsilon(1e-12));
    CHECK(m.zeeman_shift_hz(-2) == doctest::Approx(-69980.0).epsilon(1e-12));
    CHECK(m.zeeman_shift_hz(0) == 0.0);
}

TEST_CASE("model functions are pure") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1e-3);
    const ModulationSpec mod;
    for (int i = 0; i < 100; ++i) {
        const double t = u(rng);
        CHECK(instantaneous_frequency(mod, t) == instantaneous_frequency(mod, t));
        CHECK(mod.phase(t) == mod.phase(t));
    }
}
