#include "eitsim/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eitsim/error.hpp"
#include "eitsim/parallel.hpp"

namespace eit {

namespace {

using cd = std::complex<double>;

double phase_rate_angular(const ModulationSpec& mod, double t) {
    return kTwoPi * instantaneous_frequency(mod, t);
}

// Relaxation: optical coherences decay at G, rho_12 at g. Built from radiative
// decay 3 -> 1, 2 plus a dephasing of the ground states against each other,
// which keeps the generator completely positive with exactly these rates.
void relax(const Matrix3c& rho, double g_opt, double g12, Matrix3c& d) {
    const double pop = 2.0 * std::max(0.0, g_opt - 0.25 * g12);
    const double p33 = rho(2, 2).real();
    d(0, 0) += 0.5 * pop * p33;
    d(1, 1) += 0.5 * pop * p33;
    d(2, 2) -= pop * p33;
    d(0, 1) -= g12 * rho(0, 1);
    d(1, 0) -= g12 * rho(1, 0);
    d(0, 2) -= g_opt * rho(0, 2);
    d(2, 0) -= g_opt * rho(2, 0);
    d(1, 2) -= g_opt * rho(1, 2);
    d(2, 1) -= g_opt * rho(2, 1);
}

struct Integrator {
    const ThreeLevelSystem& sys;
    Frame frame;
    double g_opt;
    double g12;

    Matrix3c rhs(const Matrix3c& rho, double t, double probe_hz) const {
        Matrix3c h = frame == Frame::Bare ? bare_hamiltonian(sys, t) : rotated_hamiltonian(sys, t);
        // The probe is piecewise constant; each step uses the value of its own interval.
        h(0, 2) = h(2, 0) = 0.5 * kTwoPi * probe_hz;
        Matrix3c d = cd{0.0, -1.0} * (h * rho - rho * h);
        relax(rho, g_opt, g12, d);
        return d;
    }

    void rk4(Matrix3c& rho, double t, double h) const {
        const double p = sys.probe_rabi_at(t + 0.5 * h);
        const Matrix3c k1 = rhs(rho, t, p);
        const Matrix3c k2 = rhs(rho + 0.5 * h * k1, t + 0.5 * h, p);
        const Matrix3c k3 = rhs(rho + 0.5 * h * k2, t + 0.5 * h, p);
        const Matrix3c k4 = rhs(rho + h * k3, t + h, p);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    // One substep, split at probe switching times so no RK4 stage straddles a jump.
    void step(Matrix3c& rho, double t, double h) const {
        double a = t;
        for (const double edge : {sys.probe_on_s, sys.probe_off_s}) {
            if (edge > a && edge < t + h) {
                rk4(rho, a, edge - a);
                a = edge;
            }
        }
        rk4(rho, a, t + h - a);
    }
};

Evolution run(const ThreeLevelSystem& sys, const DensityState& initial, const TimeGrid& grid,
              Frame frame, std::size_t substeps, bool keep) {
    Integrator in{sys, frame, kTwoPi * sys.excited_decay_hz, kTwoPi * sys.ground_decoherence_hz};
    Evolution ev;
    ev.grid = grid;
    ev.substeps = substeps;
    ev.rho13.resize(grid.count);
    ev.populations.resize(grid.count);
    if (keep) ev.states.resize(grid.count);
    Matrix3c rho = initial.rho;
    const double h = grid.step / static_cast<double>(substeps);
    for (std::size_t i = 0; i < grid.count; ++i) {
        if (i > 0) {
            const double t0 = grid.at(i - 1);
            for (std::size_t s = 0; s < substeps; ++s) in.step(rho, t0 + static_cast<double>(s) * h, h);
        }
        ev.rho13[i] = rho(0, 2);
        ev.populations[i] = {rho(0, 0).real(), rho(1, 1).real(), rho(2, 2).real()};
        if (keep) ev.states[i] = {rho, grid.at(i)};
    }
    ev.final_state = {rho, grid.at(grid.count - 1)};
    return ev;
}

}  // namespace

ThreeLevelSystem oracle_system(const Scenario& s) {
    ThreeLevelSystem sys;
    sys.rabi_probe_hz = s.probe.rabi_probe_hz;
    sys.rabi_coupling_hz = 2.0 * s.medium.rabi_coupling_hz;
    sys.delta1_hz = s.probe.delta_one_photon_hz;
    sys.delta2_hz = s.probe.delta_two_photon_hz;
    sys.modulation = s.modulation;
    sys.excited_decay_hz = s.medium.optical_width_hz();
    sys.ground_decoherence_hz = s.medium.gamma_12_hz;
    if (s.probe.shape == ProbeShape::SquarePulse) {
        sys.probe_on_s = s.probe.turn_on_s;
        sys.probe_off_s = s.probe.turn_on_s + s.probe.duration_s;
    } else {
        sys.probe_on_s = -std::numeric_limits<double>::infinity();
    }
    return sys;
}

ThreeLevelSystem oracle_system(const Scenario& s, const SynthesisGrid& grid) {
    ThreeLevelSystem sys = oracle_system(s);
    if (s.probe.shape == ProbeShape::SquarePulse) {
        const auto [j0, j1] = pulse_sample_range(s.probe, grid);
        const double dt = grid.time_step();
        sys.probe_on_s = (static_cast<double>(j0) - 0.5) * dt;
        sys.probe_off_s = (static_cast<double>(j1) - 0.5) * dt;
    }
    return sys;
}

double oracle_scale(const Scenario& s) {
    return 0.5 * kTwoPi * s.probe.rabi_probe_hz / (s.medium.alpha * s.probe.amplitude);
}

Matrix3c bare_hamiltonian(const ThreeLevelSystem& sys, double t) {
    const double rp = kTwoPi * sys.probe_rabi_at(t);
    const double rc0 = kTwoPi * sys.rabi_coupling_hz;
    const double phi = sys.modulation.phase(t);
    const cd rc = rc0 * cd{std::cos(phi), -std::sin(phi)};
    Matrix3c h = Matrix3c::Zero();
    h(1, 1) = kTwoPi * (sys.delta2_hz + sys.zeeman_offset_hz);
    h(2, 2) = kTwoPi * sys.delta1_hz;
    h(0, 2) = 0.5 * rp;
    h(2, 0) = 0.5 * rp;
    h(1, 2) = 0.5 * std::conj(rc);
    h(2, 1) = 0.5 * rc;
    return h;
}

Matrix3c rotated_hamiltonian(const ThreeLevelSystem& sys, double t) {
    const double rp = kTwoPi * sys.probe_rabi_at(t);
    const double rc0 = kTwoPi * sys.rabi_coupling_hz;
    const double phi_dot = phase_rate_angular(sys.modulation, t);
    Matrix3c h = Matrix3c::Zero();
    h(1, 1) = kTwoPi * (sys.delta2_hz + sys.zeeman_offset_hz) - 0.5 * phi_dot;
    h(2, 2) = kTwoPi * sys.delta1_hz + 0.5 * phi_dot;
    h(0, 2) = 0.5 * rp;
    h(2, 0) = 0.5 * rp;
    h(1, 2) = 0.5 * rc0;
    h(2, 1) = 0.5 * rc0;
    return h;
}

DressedState dressed_eigenvalues(double delta2, double rc0, double phi_dot) {
    DressedState d;
    const double r = std::hypot(delta2 - phi_dot, rc0);
    // The larger-magnitude root is formed directly, the other from the
    // determinant, to avoid cancellation.
    const double det = (delta2 - 0.5 * phi_dot) * (0.5 * phi_dot) - 0.25 * rc0 * rc0;
    if (delta2 >= 0.0) {
        d.eps_plus = 0.5 * (delta2 + r);
        d.eps_minus = d.eps_plus != 0.0 ? det / d.eps_plus : 0.0;
    } else {
        d.eps_minus = 0.5 * (delta2 - r);
        d.eps_plus = det / d.eps_minus;
    }
    d.mixing_angle = (rc0 == 0.0 && phi_dot == 0.0) ? 0.0 : 0.5 * std::atan2(phi_dot - delta2, rc0);
    return d;
}

std::array<double, 2> dressed_vector_plus(double delta2, double rc0, double phi_dot) {
    const double a = 0.5 * std::atan2(rc0, phi_dot - delta2);
    return {std::sin(a), std::cos(a)};
}

DensityState pure_state(int level, double time) {
    if (level < 1 || level > 3) throw ValidationError("level must be 1, 2 or 3");
    DensityState s;
    s.rho(level - 1, level - 1) = 1.0;
    s.time = time;
    return s;
}

Evolution evolve(const ThreeLevelSystem& sys, const DensityState& initial, const TimeGrid& grid,
                 const EvolveOptions& options) {
    if (grid.count < 2 || !(grid.step > 0.0)) throw ValidationError("time grid needs count >= 2 and step > 0");
    const Matrix3c& r = initial.rho;
    if ((r - r.adjoint()).cwiseAbs().maxCoeff() > 1e-12 || std::abs(r.trace() - 1.0) > 1e-9)
        throw ValidationError("initial density matrix must be Hermitian with unit trace");

    const auto& mod = sys.modulation;
    const double rate = std::max({sys.excited_decay_hz, sys.ground_decoherence_hz,
                                  mod.modulation_index * mod.frequency_hz, sys.rabi_coupling_hz,
                                  sys.rabi_probe_hz, std::abs(sys.delta1_hz),
                                  std::abs(sys.delta2_hz + sys.zeeman_offset_hz), mod.frequency_hz});
    double h_max = rate > 0.0 ? 1.0 / (50.0 * rate) : grid.step;
    if (options.max_step_s > 0.0) h_max = std::min(h_max, options.max_step_s);
    const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(grid.step / h_max - 1e-9)));

    Evolution fine = run(sys, initial, grid, options.frame, 2 * substeps, options.keep_states);
    if (!options.check_convergence) return fine;

    const Evolution coarse = run(sys, initial, grid, options.frame, substeps, false);
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < grid.count; ++i) {
        diff = std::max(diff, std::abs(fine.rho13[i] - coarse.rho13[i]));
        scale = std::max(scale, std::abs(fine.rho13[i]));
    }
    fine.convergence_error = scale > 0.0 ? diff / scale : diff;
    if (fine.convergence_error > options.tolerance) {
        std::ostringstream msg;
        msg << "RK4 step halving changed rho13 by " << fine.convergence_error
            << " (relative), tolerance " << options.tolerance << ", step " << grid.step / (2.0 * substeps)
            << " s";
        throw NumericalError(msg.str());
    }
    return fine;
}

std::array<ThreeLevelSystem, 3> magnetic_subsystems(const ThreeLevelSystem& sys,
                                                     const MagneticSpec& magnetic) {
    std::array<ThreeLevelSystem, 3> out{sys, sys, sys};
    for (std::size_t k = 0; k < 3; ++k)
        out[k].zeeman_offset_hz = magnetic.zeeman_shift_hz(magnetic.channels[k].delta_m);
    return out;
}

std::vector<std::complex<double>> evolve_magnetic(const ThreeLevelSystem& sys,
                                                  const MagneticSpec& magnetic,
                                                  const DensityState& initial, const TimeGrid& grid,
                                                  const EvolveOptions& options, unsigned threads) {
    const auto subs = magnetic_subsystems(sys, magnetic);
    std::array<std::vector<cd>, 3> parts;
    parallel_for(3, threads, [&](std::size_t k) { parts[k] = evolve(subs[k], initial, grid, options).rho13; });
    std::vector<cd> total(grid.count, cd{0.0, 0.0});
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < grid.count; ++i) total[i] += magnetic.channels[k].weight * parts[k][i];
    return total;
}


OracleComparison compare_to_oracle(const Scenario& scenario, const SynthesisGrid& grid,
                                   const TransmitOptions& options, unsigned threads) {
    const TimeTrace trace = transmit(scenario, grid, options);
    const ThreeLevelSystem sys = oracle_system(scenario, grid);
    OracleComparison out;
    out.grid = trace.grid;
    std::vector<cd> rho;
    if (scenario.magnetic) {
        rho = evolve_magnetic(sys, *scenario.magnetic, pure_state(1), trace.grid, {}, threads);
    } else {
        const Evolution ev = evolve(sys, pure_state(1), trace.grid);
        rho = ev.rho13;
        out.convergence_error = ev.convergence_error;
    }
    const double scale = oracle_scale(scenario);
    out.comb.resize(trace.grid.count);
    out.oracle.resize(trace.grid.count);
    for (std::size_t i = 0; i < trace.grid.count; ++i) {
        out.comb[i] = scale * std::abs(trace.amplitude[i]);
        out.oracle[i] = std::abs(rho[i]);
    }
    out.settle_s = scenario.probe.turn_on_s + 3.0 / (kTwoPi * eit_linewidth(scenario.medium));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < trace.grid.count; ++i) {
        if (trace.grid.at(i) < out.settle_s) continue;
        num += (out.comb[i] - out.oracle[i]) * (out.comb[i] - out.oracle[i]);
        den += out.oracle[i] * out.oracle[i];
    }
    if (!(den > 0.0)) throw NumericalError("oracle coherence vanishes after the settle window");
    out.nrms = std::sqrt(num / den);
    return out;
}

}  // namespace eit
