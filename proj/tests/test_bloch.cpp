#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "eitsim/analysis.hpp"
#include "eitsim/bloch.hpp"
#include "eitsim/error.hpp"

using namespace eit;

namespace {

// Reduced rates so RK4 runs quickly: optical decay 200 kHz, Rc0 100 kHz.
ThreeLevelSystem small_system() {
    ThreeLevelSystem s;
    s.rabi_probe_hz = 2e3;
    s.rabi_coupling_hz = 100e3;
    s.excited_decay_hz = 200e3;
    s.ground_decoherence_hz = 1e3;
    s.modulation = {6.0, 5e3, Waveform::Sine};
    return s;
}

double hermitian_defect(const Matrix3c& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("Hamiltonians") {
    ThreeLevelSystem s = small_system();
    s.delta1_hz = 3e3;
    s.delta2_hz = -2e3;
    const Matrix3c h0 = bare_hamiltonian(s, 0.0);
    CHECK(h0(1, 1).real() == doctest::Approx(kTwoPi * -2e3));
    CHECK(h0(2, 2).real() == doctest::Approx(kTwoPi * 3e3));
    CHECK(h0(0, 2).real() == doctest::Approx(0.5 * kTwoPi * 2e3));
    CHECK(std::abs(h0(1, 2) - cplx{0.5 * kTwoPi * 100e3, 0.0}) < 1e-9);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> t(0.0, 1e-3);
    for (int k = 0; k < 50; ++k) {
        const double tk = t(rng);
        CHECK(hermitian_defect(bare_hamiltonian(s, tk)) == 0.0);
        CHECK(hermitian_defect(rotated_hamiltonian(s, tk)) == 0.0);
        // The coupling carries the modulation phase; its magnitude is fixed.
        CHECK(std::abs(bare_hamiltonian(s, tk)(2, 1)) == doctest::Approx(0.5 * kTwoPi * 100e3));
        CHECK(std::arg(bare_hamiltonian(s, tk)(2, 1)) ==
              doctest::Approx(std::remainder(-s.modulation.phase(tk), kTwoPi)).epsilon(1e-9));
    }

    // Rotated frame at t = 0 with a sine waveform: phi_dot = M Omega_c.
    ThreeLevelSystem r = small_system();
    r.delta2_hz = 7e3;
    const double md = s.modulation.modulation_index * s.modulation.omega();
    const Matrix3c hr = rotated_hamiltonian(r, 0.0);
    CHECK(hr(1, 1).real() == doctest::Approx(kTwoPi * 7e3 - 0.5 * md));
    CHECK(hr(2, 2).real() == doctest::Approx(0.5 * md));
    CHECK(hr(1, 2).real() == doctest::Approx(0.5 * kTwoPi * 100e3));

    // Unmodulated, no probe, on resonance: eigenvalues 0 and +-Rc0/2.
    ThreeLevelSystem u = small_system();
    u.modulation.modulation_index = 0.0;
    u.rabi_probe_hz = 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(bare_hamiltonian(u, 1e-4));
    const double half = 0.5 * kTwoPi * 100e3;
    CHECK(es.eigenvalues()(0) == doctest::Approx(-half));
    CHECK(std::abs(es.eigenvalues()(1)) < 1e-6);
    CHECK(es.eigenvalues()(2) == doctest::Approx(half));
}

TEST_CASE("dressed states against a numerical eigensolver") {
    const auto d0 = dressed_eigenvalues(0.0, 2.0, 0.0);
    CHECK(d0.eps_plus == doctest::Approx(1.0));
    CHECK(d0.eps_minus == doctest::Approx(-1.0));
    CHECK(d0.mixing_angle == doctest::Approx(0.0));
    const auto v0 = dressed_vector_plus(0.0, 2.0, 0.0);
    CHECK(v0[0] == doctest::Approx(std::sqrt(0.5)));
    CHECK(v0[1] == doctest::Approx(std::sqrt(0.5)));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int k = 0; k < 500; ++k) {
        const double d = u(rng), rc = std::abs(u(rng)) + 1e-3, pd = u(rng);
        Eigen::Matrix2d m;
        m << d - 0.5 * pd, 0.5 * rc, 0.5 * rc, 0.5 * pd;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
        const auto ds = dressed_eigenvalues(d, rc, pd);
        CHECK(ds.eps_minus == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
        CHECK(ds.eps_plus == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-10));
        CHECK(std::tan(2.0 * ds.mixing_angle) == doctest::Approx((pd - d) / rc).epsilon(1e-9));
        const auto v = dressed_vector_plus(d, rc, pd);
        const Eigen::Vector2d ref = es.eigenvectors().col(1);
        CHECK(std::abs(std::abs(v[0] * ref(0) + v[1] * ref(1)) - 1.0) < 1e-10);
        CHECK(v[0] == doctest::Approx(std::sin(M_PI / 4 - ds.mixing_angle)).epsilon(1e-10));
        CHECK(v[1] == doctest::Approx(std::cos(M_PI / 4 - ds.mixing_angle)).epsilon(1e-10));
    }
}

TEST_CASE("free evolution") {
    ThreeLevelSystem zero;
    DensityState psi;
    Eigen::Vector3cd v(1.0, cplx{0.0, 1.0}, 0.5);
    v.normalize();
    psi.rho = v * v.adjoint();
    const auto ev = evolve(zero, psi, TimeGrid{0.0, 1e-6, 50});
    CHECK((ev.final_state.rho - psi.rho).cwiseAbs().maxCoeff() < 1e-14);

    // No probe: |1> is dark and stays exactly put.
    ThreeLevelSystem s = small_system();
    s.rabi_probe_hz = 0.0;
    const auto dark = evolve(s, pure_state(1), TimeGrid{0.0, 2e-6, 200});
    CHECK((dark.final_state.rho - pure_state(1).rho).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& r : dark.rho13) CHECK(r == cplx{0.0, 0.0});
}

TEST_CASE("density matrix invariants") {
    ThreeLevelSystem s = small_system();
    s.rabi_probe_hz = 40e3;  // strong enough to move population
    s.delta2_hz = 4e3;
    EvolveOptions opt;
    opt.keep_states = true;
    const auto ev = evolve(s, pure_state(1), TimeGrid{0.0, 2e-6, 300}, opt);
    double moved = 0.0;
    for (const auto& st : ev.states) {
        CHECK(std::abs(st.rho.trace() - 1.0) < 1e-10);
        CHECK(hermitian_defect(st.rho) < 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix3c> es(st.rho);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
        CHECK((st.rho * st.rho).trace().real() <= 1.0 + 1e-10);
        moved = std::max(moved, 1.0 - st.rho(0, 0).real());
    }
    CHECK(moved > 1e-3);
    for (const auto& p : ev.populations)
        for (double x : p) CHECK((x > -1e-12 && x < 1.0 + 1e-12));
}

TEST_CASE("weak-probe linearity") {
    ThreeLevelSystem s = small_system();
    s.delta2_hz = 10e3;
    s.rabi_probe_hz = 100.0;
    const TimeGrid g{0.0, 2e-6, 200};
    const auto a = evolve(s, pure_state(1), g);
    s.rabi_probe_hz = 200.0;
    const auto b = evolve(s, pure_state(1), g);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.count; ++i) {
        worst = std::max(worst, std::abs(b.rho13[i] - 2.0 * a.rho13[i]));
        scale = std::max(scale, std::abs(b.rho13[i]));
    }
    CHECK(worst < 1e-5 * scale);
}

TEST_CASE("rotated frame is a basis change of the conjugate-phase bare frame") {
    // The rotated diagonal (delta - phi_dot/2, +phi_dot/2) with a static
    // coupling is the frame of a bare coupling carrying e^{+i phi}; the bare
    // Hamiltonian carries e^{-i phi}. Populations therefore match the bare
    // evolution with M -> -M. The probe is off since level 1 is not rotated.
    ThreeLevelSystem s = small_system();
    s.rabi_probe_hz = 0.0;
    s.excited_decay_hz = 50e3;
    s.delta2_hz = 10e3;
    ThreeLevelSystem conj = s;
    conj.modulation.modulation_index = -s.modulation.modulation_index;
    const TimeGrid g{0.0, 2e-6, 250};
    EvolveOptions bare, rot;
    rot.frame = Frame::Rotated;
    const auto a = evolve(conj, pure_state(2), g, bare);
    const auto b = evolve(s, pure_state(2), g, rot);
    double worst = 0.0, moved = 0.0;
    for (std::size_t i = 0; i < g.count; ++i)
        for (int k = 0; k < 3; ++k) {
            worst = std::max(worst, std::abs(a.populations[i][k] - b.populations[i][k]));
            moved = std::max(moved, b.populations[i][2]);
        }
    CHECK(moved > 0.1);
    CHECK(worst < 1e-6);
}

TEST_CASE("step-on probe rings at the two-photon detuning") {
    ThreeLevelSystem s = small_system();
    s.modulation.modulation_index = 0.0;
    s.delta2_hz = 100e3;
    s.rabi_coupling_hz = 40e3;
    s.excited_decay_hz = 400e3;
    s.probe_on_s = 0.0;
    // gamma_EIT = 2 (1 kHz + (Rc0/2)^2 / 400 kHz) = 4 kHz; ringing lasts ~0.1 ms.
    const TimeGrid g{0.0, 1e-6, 400};
    const auto ev = evolve(s, pure_state(1), g);
    std::vector<double> mag(g.count);
    for (std::size_t i = 0; i < g.count; ++i) mag[i] = std::abs(ev.rho13[i]);
    const double f = transient_frequency(g, mag, 5e-6, 3e-4);
    CHECK(f == doctest::Approx(100e3).epsilon(0.02));
}

TEST_CASE("convergence check and input validation") {
    ThreeLevelSystem s = small_system();
    EvolveOptions opt;
    opt.tolerance = 1e-30;
    CHECK_THROWS_AS(evolve(s, pure_state(1), TimeGrid{0.0, 2e-6, 50}, opt), NumericalError);
    CHECK_THROWS_AS(pure_state(4), ValidationError);
    DensityState bad;
    bad.rho(0, 0) = 2.0;
    CHECK_THROWS_AS(evolve(s, bad, TimeGrid{0.0, 1e-6, 10}), ValidationError);
    CHECK_THROWS_AS(evolve(s, pure_state(1), TimeGrid{0.0, 1e-6, 1}), ValidationError);
}

TEST_CASE("magnetic subsystems") {
    ThreeLevelSystem s = small_system();
    MagneticSpec m;
    m.field_gauss = 0.05;
    const auto subs = magnetic_subsystems(s, m);
    CHECK(subs[0].zeeman_offset_hz == doctest::Approx(-69980.0));
    CHECK(subs[1].zeeman_offset_hz == 0.0);
    CHECK(subs[2].zeeman_offset_hz == doctest::Approx(69980.0));

    // B = 0: the channel sum collapses to the single system.
    MagneticSpec none;
    const TimeGrid g{0.0, 2e-6, 100};
    const auto single = evolve(s, pure_state(1), g).rho13;
    const auto summed = evolve_magnetic(s, none, pure_state(1), g, {}, 3);
    for (std::size_t i = 0; i < g.count; ++i) CHECK(std::abs(summed[i] - single[i]) < 1e-15 + 1e-12 * std::abs(single[i]));
}

TEST_CASE("oracle mapping and comb agreement") {
    Scenario sc;
    sc.modulation.modulation_index = 6.0;
    sc.medium.gamma_hom_hz = 1e6;
    sc.medium.gamma_doppler_hz = 1e6;
    sc.medium.rabi_coupling_hz = 109544.51150103323;
    sc.probe.duration_s = 0.3e-3;
    sc.probe.rabi_probe_hz = 10954.451150103322;
    sc.probe.delta_two_photon_hz = 20e3;
    const auto sys = oracle_system(sc);
    CHECK(sys.rabi_coupling_hz == doctest::Approx(2.0 * sc.medium.rabi_coupling_hz));
    CHECK(sys.excited_decay_hz == doctest::Approx(2e6));
    CHECK(sys.probe_off_s == doctest::Approx(0.3e-3));
    CHECK(oracle_scale(sc) == doctest::Approx(M_PI * sc.probe.rabi_probe_hz));

    const auto grid = default_grid(sc);
    const auto cmp = compare_to_oracle(sc, grid);
    CHECK(cmp.nrms < 0.01);
    CHECK(cmp.settle_s == doctest::Approx(3.0 / (kTwoPi * eit_linewidth(sc.medium))));
}
