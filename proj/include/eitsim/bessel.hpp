#pragma once

#include <complex>
#include <vector>

#include "eitsim/model.hpp"

namespace eit {

// J_n(x) for integer n, via Miller's downward recurrence.
double bessel_j(int n, double x);

// J_0(x) .. J_{n_max}(x) from one downward pass.
std::vector<double> bessel_j_range(int n_max, double x);

// Default tail tolerance on sum_{|n|>n_max} J_n^2. Small enough that the
// truncated series reconstructs e^{-i phi} to better than 1e-10.
inline constexpr double kDefaultSidebandTolerance = 1e-24;

class SidebandSet {
public:
    SidebandSet() = default;
    SidebandSet(const ModulationSpec& mod, int n_max, std::vector<double> coefficients);

    int n_min() const { return -n_max_; }
    int n_max() const { return n_max_; }
    std::size_t size() const { return coefficients_.size(); }
    // J_n(-M).
    double bessel(int n) const { return coefficients_[static_cast<std::size_t>(n + n_max_)]; }
    // Comb weight c_n with e^{-i phi(t)} = sum_n c_n e^{i n Omega t}.
    // Equals J_n(-M) for the sine waveform and i^n J_n(-M) for cosine.
    std::complex<double> weight(int n) const;
    const std::vector<double>& coefficients() const { return coefficients_; }
    const ModulationSpec& modulation() const { return mod_; }

private:
    ModulationSpec mod_;
    int n_max_ = 0;
    std::vector<double> coefficients_;
};

SidebandSet sideband_set(const ModulationSpec& mod, double tolerance = kDefaultSidebandTolerance);

// Truncated sum_n c_n e^{i n Omega t}.
std::complex<double> reconstruct_phase_factor(const SidebandSet& sidebands, double t);

// e^{i n Omega t} evaluated with the phase reduced modulo one period.
std::complex<double> harmonic(const ModulationSpec& mod, int n, double t);

}  // namespace eit
