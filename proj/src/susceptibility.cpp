#include "eitsim/susceptibility.hpp"

#include "eitsim/error.hpp"

namespace eit {

cplx eit_line(const MediumSpec& medium, double delta1_hz, double delta2_hz) {
    // i a / (2 pi [G - i D + Rc^2/(g - i d)]) rewritten without the inner
    // division so gamma_12 = 0 at two-photon resonance stays finite.
    const cplx two_photon{medium.gamma_12_hz, -delta2_hz};
    const cplx one_photon{medium.optical_width_hz(), -delta1_hz};
    const double rc2 = medium.rabi_coupling_hz * medium.rabi_coupling_hz;
    const cplx den = kTwoPi * (one_photon * two_photon + rc2);
    return cplx{0.0, medium.alpha} * two_photon / den;
}

cplx zeeman_line(const MediumSpec& medium, const std::optional<MagneticSpec>& magnetic,
                 double delta1_hz, double delta2_hz) {
    if (!magnetic) return eit_line(medium, delta1_hz, delta2_hz);
    cplx sum{0.0, 0.0};
    for (const auto& ch : magnetic->channels)
        sum += ch.weight * eit_line(medium, delta1_hz, delta2_hz - magnetic->zeeman_shift_hz(ch.delta_m));
    return sum;
}

cplx chi_component(const MediumSpec& medium, const SidebandSet& sidebands, int n,
                   double delta1_hz, double delta2_hz) {
    const double shift = static_cast<double>(n) * sidebands.modulation().frequency_hz;
    return sidebands.weight(n) * eit_line(medium, delta1_hz - shift, delta2_hz - shift);
}

cplx chi_time(const MediumSpec& medium, const SidebandSet& sidebands, double delta1_hz,
              double delta2_hz, double t) {
    cplx sum{0.0, 0.0};
    const auto& mod = sidebands.modulation();
    for (int n = sidebands.n_min(); n <= sidebands.n_max(); ++n)
        sum += harmonic(mod, n, t) * chi_component(medium, sidebands, n, delta1_hz, delta2_hz);
    return sum;
}

cplx chi_time_magnetic(const MediumSpec& medium, const SidebandSet& sidebands,
                       const MagneticSpec& magnetic, double delta1_hz, double delta2_hz,
                       double t) {
    cplx sum{0.0, 0.0};
    for (const auto& ch : magnetic.channels)
        sum += ch.weight * chi_time(medium, sidebands, delta1_hz,
                                    delta2_hz - magnetic.zeeman_shift_hz(ch.delta_m), t);
    return sum;
}

ChiComb steady_spectrum(const MediumSpec& medium, const SidebandSet& sidebands,
                        const FrequencyGrid& grid, double delta1_hz, double delta2_hz,
                        const std::optional<MagneticSpec>& magnetic) {
    const auto& mod = sidebands.modulation();
    if (grid.count < 2 || !(grid.step > 0.0)) throw ValidationError("frequency grid needs count >= 2 and step > 0");
    if (grid.span() < 2.0 * mod.modulation_index * mod.frequency_hz)
        throw ValidationError("frequency grid span is narrower than the modulation bandwidth 2 M f_c");

    ChiComb comb{sidebands, grid, medium, magnetic, {}};
    comb.values.resize(sidebands.size() * grid.count);
    std::size_t idx = 0;
    for (int n = sidebands.n_min(); n <= sidebands.n_max(); ++n) {
        const double shift = static_cast<double>(n) * mod.frequency_hz;
        const cplx w = sidebands.weight(n);
        for (std::size_t k = 0; k < grid.count; ++k) {
            const double omega = grid.at(k);
            comb.values[idx++] = w * zeeman_line(medium, magnetic, delta1_hz - shift - omega,
                                                 delta2_hz - shift - omega);
        }
    }
    return comb;
}

}  // namespace eit
