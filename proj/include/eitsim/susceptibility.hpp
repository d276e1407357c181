#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "eitsim/bessel.hpp"
#include "eitsim/model.hpp"

namespace eit {

using cplx = std::complex<double>;

// Single EIT line i alpha / (Gamma_opt - i Delta + Rc^2/(gamma_12 - i delta)),
// with the denominator converted to angular units. Inputs in Hz.
cplx eit_line(const MediumSpec& medium, double delta1_hz, double delta2_hz);

// Channel-weighted line sum over the Zeeman channels; plain eit_line when
// magnetic is empty.
cplx zeeman_line(const MediumSpec& medium, const std::optional<MagneticSpec>& magnetic,
                 double delta1_hz, double delta2_hz);

// n-th comb term without the e^{i n Omega t} factor.
cplx chi_component(const MediumSpec& medium, const SidebandSet& sidebands, int n,
                   double delta1_hz, double delta2_hz);

// Full time-dependent susceptibility, periodic in t with period 1/f_c.
cplx chi_time(const MediumSpec& medium, const SidebandSet& sidebands, double delta1_hz,
              double delta2_hz, double t);

cplx chi_time_magnetic(const MediumSpec& medium, const SidebandSet& sidebands,
                       const MagneticSpec& magnetic, double delta1_hz, double delta2_hz,
                       double t);

// Per-sideband response chi_n(omega) on a probe-offset grid. A probe component
// at offset omega sees detunings (Delta - omega, delta - omega).
struct ChiComb {
    SidebandSet sidebands;
    FrequencyGrid grid;
    MediumSpec medium;
    std::optional<MagneticSpec> magnetic;
    std::vector<cplx> values;  // row n - n_min, column grid index

    cplx at(int n, std::size_t k) const {
        return values[static_cast<std::size_t>(n - sidebands.n_min()) * grid.count + k];
    }
};

ChiComb steady_spectrum(const MediumSpec& medium, const SidebandSet& sidebands,
                        const FrequencyGrid& grid, double delta1_hz, double delta2_hz,
                        const std::optional<MagneticSpec>& magnetic = std::nullopt);

}  // namespace eit
