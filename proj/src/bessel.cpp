#include "eitsim/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eitsim/error.hpp"

namespace eit {

namespace {

constexpr double kRescale = 1e250;

int start_order(int n_max, double ax) {
    const double top = std::max(static_cast<double>(n_max), ax);
    int m = static_cast<int>(std::ceil(top + 20.0 + std::sqrt(60.0 * top)));
    return m + (m % 2);
}

}  // namespace

std::vector<double> bessel_j_range(int n_max, double x) {
    if (n_max < 0) throw std::invalid_argument("bessel_j_range: negative order");
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    const double ax = std::abs(x);
    if (ax == 0.0) {
        out[0] = 1.0;
        return out;
    }

    // Downward recurrence J_{k-1} = (2k/x) J_k - J_{k+1} from an even start
    // order far above max(n, x), normalized by J_0 + 2 sum J_{2k} = 1.
    const int m = start_order(n_max, ax);
    const double two_over_x = 2.0 / ax;
    double jp = 0.0;  // J_{k+1}
    double j = 1e-300;  // J_k, arbitrary seed
    double norm = 0.0;
    for (int k = m; k > 0; --k) {
        const double jm = static_cast<double>(k) * two_over_x * j - jp;
        jp = j;
        j = jm;  // now J_{k-1}
        const int order = k - 1;
        if (order <= n_max) out[static_cast<std::size_t>(order)] = j;
        if (order > 0 && order % 2 == 0) norm += 2.0 * j;
        if (std::abs(j) > kRescale) {
            j /= kRescale;
            jp /= kRescale;
            norm /= kRescale;
            for (int i = order; i <= n_max; ++i) out[static_cast<std::size_t>(i)] /= kRescale;
        }
    }
    norm += j;  // J_0
    for (double& v : out) v /= norm;

    if (x < 0.0)
        for (std::size_t n = 1; n < out.size(); n += 2) out[n] = -out[n];
    return out;
}

double bessel_j(int n, double x) {
    const int an = n < 0 ? -n : n;
    const double v = bessel_j_range(an, x)[static_cast<std::size_t>(an)];
    return (n < 0 && (an % 2 == 1)) ? -v : v;
}

SidebandSet::SidebandSet(const ModulationSpec& mod, int n_max, std::vector<double> coefficients)
    : mod_(mod), n_max_(n_max), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != static_cast<std::size_t>(2 * n_max + 1))
        throw std::invalid_argument("SidebandSet: coefficient count does not match range");
}

std::complex<double> SidebandSet::weight(int n) const {
    const double j = bessel(n);
    if (mod_.waveform == Waveform::Sine) return {j, 0.0};
    switch (((n % 4) + 4) % 4) {
        case 0: return {j, 0.0};
        case 1: return {0.0, j};
        case 2: return {-j, 0.0};
        default: return {0.0, -j};
    }
}

SidebandSet sideband_set(const ModulationSpec& mod, double tolerance) {
    if (!(tolerance > 0.0) || tolerance > 1e-3)
        throw ValidationError("sideband tolerance must lie in (0, 1e-3]");
    const double m = mod.modulation_index;
    if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError("modulation index must be non-negative");

    const int bound = static_cast<int>(std::ceil(m + 10.0 * std::cbrt(m) + 10.0));
    const auto j = bessel_j_range(bound, -m);

    // Tighten: smallest n_max whose two-sided tail energy is within tolerance.
    // The tail is accumulated from the top so tiny terms are not lost.
    int n_max = bound;
    double tail = 0.0;
    for (int n = bound; n >= 1; --n) {
        const double next = tail + 2.0 * j[static_cast<std::size_t>(n)] * j[static_cast<std::size_t>(n)];
        if (next > tolerance) break;
        tail = next;
        n_max = n - 1;
    }

    std::vector<double> coeffs(static_cast<std::size_t>(2 * n_max + 1));
    for (int n = -n_max; n <= n_max; ++n) {
        const int an = n < 0 ? -n : n;
        double v = j[static_cast<std::size_t>(an)];
        if (n < 0 && (an % 2 == 1)) v = -v;
        coeffs[static_cast<std::size_t>(n + n_max)] = v;
    }
    return SidebandSet(mod, n_max, std::move(coeffs));
}

std::complex<double> harmonic(const ModulationSpec& mod, int n, double t) {
    // Reduce n f_c t modulo 1 before forming the angle to keep precision for
    // large n and t.
    const double cycles = static_cast<double>(n) * mod.frequency_hz * t;
    const double frac = cycles - std::floor(cycles);
    const double angle = kTwoPi * frac;
    return {std::cos(angle), std::sin(angle)};
}

std::complex<double> reconstruct_phase_factor(const SidebandSet& sidebands, double t) {
    std::complex<double> sum{0.0, 0.0};
    const auto& mod = sidebands.modulation();
    for (int n = sidebands.n_min(); n <= sidebands.n_max(); ++n)
        sum += sidebands.weight(n) * harmonic(mod, n, t);
    return sum;
}

}  // namespace eit
