#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <limits>
#include <vector>

#include "eitsim/model.hpp"
#include "eitsim/synthesis.hpp"

namespace eit {

using Matrix3c = Eigen::Matrix3cd;

// Driven Lambda system. Levels 1 and 2 are the ground states, 3 the excited
// state; the probe couples 1-3 and the modulated coupling couples 2-3.
struct ThreeLevelSystem {
    double rabi_probe_hz = 0.0;     // R_p
    double rabi_coupling_hz = 0.0;  // Rc0
    double delta1_hz = 0.0;
    double delta2_hz = 0.0;
    ModulationSpec modulation;
    double excited_decay_hz = 0.0;       // optical coherence decay; |3> population decays at twice this
    double ground_decoherence_hz = 0.0;  // rho_12 dephasing
    double zeeman_offset_hz = 0.0;
    double probe_on_s = 0.0;
    double probe_off_s = std::numeric_limits<double>::infinity();

    double probe_rabi_at(double t) const {
        return (t >= probe_on_s && t < probe_off_s) ? rabi_probe_hz : 0.0;
    }
};

// Oracle counterpart of a medium scenario: Rc0 = 2 Rc, optical coherence
// decay Gamma + Gamma_D, probe window from the probe spec. In the weak-probe
// limit rho_13 then follows pi R_p / (alpha A) times the comb amplitude, A
// being the probe envelope amplitude.
ThreeLevelSystem oracle_system(const Scenario& scenario);

// As above, with the probe window matched to the sampled envelope used by
// transmit on this grid: each sample stands for the interval centred on it,
// so the pulse edges sit half a sample before the first on and first off
// samples.
ThreeLevelSystem oracle_system(const Scenario& scenario, const SynthesisGrid& grid);

// Scale factor from comb amplitude p(t) to oracle coherence rho_13(t).
double oracle_scale(const Scenario& scenario);

// Rotating-frame Hamiltonian in rad/s.
Matrix3c bare_hamiltonian(const ThreeLevelSystem& sys, double t);

// Frame with a static coupling; diagonal delta - phi_dot/2 and Delta + phi_dot/2.
Matrix3c rotated_hamiltonian(const ThreeLevelSystem& sys, double t);

struct DressedState {
    double eps_plus = 0.0;
    double eps_minus = 0.0;
    double mixing_angle = 0.0;  // theta with tan 2 theta = (phi_dot - delta)/Rc0
};

// Eigenvalues of [[delta - phi_dot/2, Rc0/2], [Rc0/2, phi_dot/2]] in the
// units of the inputs.
DressedState dressed_eigenvalues(double delta2, double rc0, double phi_dot);

// Components (on |2'>, |3'>) of the upper dressed state; equals
// (sin(pi/4 - theta), cos(pi/4 - theta)).
std::array<double, 2> dressed_vector_plus(double delta2, double rc0, double phi_dot);

struct DensityState {
    Matrix3c rho = Matrix3c::Zero();
    double time = 0.0;
};

// Pure state |level><level|, level in {1, 2, 3}.
DensityState pure_state(int level, double time = 0.0);

enum class Frame { Bare, Rotated };

struct EvolveOptions {
    Frame frame = Frame::Bare;
    double max_step_s = 0.0;  // 0 selects 1/(50 max rate)
    bool check_convergence = true;
    double tolerance = 1e-5;  // max |rho13(h) - rho13(h/2)| relative to max |rho13|
    bool keep_states = false;
};

struct Evolution {
    TimeGrid grid;
    std::vector<std::complex<double>> rho13;
    std::vector<std::array<double, 3>> populations;
    std::vector<DensityState> states;  // filled when keep_states
    DensityState final_state;
    std::size_t substeps = 0;
    double convergence_error = 0.0;
};

// Integrates d rho/dt = -i[H, rho] + relaxation with fixed-step RK4, samples
// at the grid points. The initial state is taken at grid.start. Throws
// NumericalError when step halving changes rho_13 by more than the tolerance.
Evolution evolve(const ThreeLevelSystem& sys, const DensityState& initial, const TimeGrid& grid,
                 const EvolveOptions& options = {});

std::array<ThreeLevelSystem, 3> magnetic_subsystems(const ThreeLevelSystem& sys,
                                                     const MagneticSpec& magnetic);

// Channel-weighted rho_13 over the three Zeeman subsystems.
std::vector<std::complex<double>> evolve_magnetic(const ThreeLevelSystem& sys,
                                                  const MagneticSpec& magnetic,
                                                  const DensityState& initial, const TimeGrid& grid,
                                                  const EvolveOptions& options = {},
                                                  unsigned threads = 1);

struct OracleComparison {
    TimeGrid grid;
    std::vector<double> comb;    // oracle_scale * |p(t)|
    std::vector<double> oracle;  // |rho_13(t)|
    double settle_s = 0.0;       // comparison starts here
    double nrms = 0.0;           // ||comb - oracle|| / ||oracle|| over t >= settle_s
    double convergence_error = 0.0;
};

// Runs the comb synthesis and the density-matrix oracle on the same grid,
// starting from |1>, and compares them after turn_on + 3/(2 pi gamma_EIT).
OracleComparison compare_to_oracle(const Scenario& scenario, const SynthesisGrid& grid,
                                   const TransmitOptions& options = {}, unsigned threads = 1);

}  // namespace eit
