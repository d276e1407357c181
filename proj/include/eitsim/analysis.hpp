#pragma once

#include <string>
#include <utility>
#include <vector>

#include "eitsim/model.hpp"
#include "eitsim/synthesis.hpp"

namespace eit {

enum class Regime { Adiabatic, Intermediate, NonAdiabatic };

// Omega_c / (2 pi gamma_EIT) below 0.2 is adiabatic, above 5 non-adiabatic.
Regime classify_regime(double mod_frequency_hz, double gamma_eit_hz);
const char* regime_name(Regime regime);

struct TransitionMetrics {
    double beta = 0.0;
    double tau = 0.0;
    Regime regime = Regime::Intermediate;
    double fit_quality = 0.0;
};

struct Peak {
    double t = 0.0;
    double amplitude = 0.0;  // height above the mean of the two flanking troughs
};

// Local maxima of the signal within [t0, t1) whose ringing amplitude exceeds
// three times the median absolute deviation of the linearly detrended signal.
// Throws NumericalError when fewer than three peaks survive.
std::vector<Peak> find_ringing_peaks(const TimeGrid& grid, const std::vector<double>& signal,
                                     double t0, double t1);
std::vector<Peak> find_ringing_peaks(const TimeTrace& trace, double t0, double t1);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct DecayFit {
    double tau = 0.0;  // +infinity when the peaks do not decay
    double r_squared = 0.0;
    bool decaying = false;
};

// Least squares on (t, ln amplitude).
DecayFit fit_decay(const std::vector<Peak>& peaks);

struct DecayCurveOptions {
    // Coupling scale used in beta; 0 selects the medium coupling Rc.
    double beta_coupling_hz = 0.0;
    unsigned threads = 1;
};

struct DecayPoint {
    double beta = 0.0;
    double modulation_index = 0.0;
    double mod_frequency_hz = 0.0;
    double tau = 0.0;
    double r_squared = 0.0;
    std::size_t peaks = 0;
    bool ok = false;
    std::string error;
};

// One continuous-wave trace per beta at the base modulation frequency with
// M = (Rc_beta / (beta f_c))^2. The ringing after the instantaneous-frequency
// zero crossing at a quarter period is fitted up to the next crossing.
std::vector<DecayPoint> decay_vs_beta_curve(const Scenario& base, const std::vector<double>& betas,
                                            const DecayCurveOptions& options = {});

// Trace used for one beta point and its analysis window.
struct DecayRun {
    Scenario scenario;
    SynthesisGrid grid;
    double t0 = 0.0;
    double t1 = 0.0;
};
DecayRun decay_run(const Scenario& base, double beta, double beta_coupling_hz);

inline constexpr double kBohrMagnetonHzPerGauss = 1.3996e6;

// M f_c / (|delta_m| (mu_B/h) g_F), Gauss.
double bmax(const ModulationSpec& mod, int delta_m, double g_f,
            double bohr_magneton_hz_per_gauss = kBohrMagnetonHzPerGauss);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct TemplateEntry {
    double field_gauss = 0.0;
    std::vector<double> signal;  // |p(t)| over the analysis window
};

// |p(t)| of a trace restricted to samples with t0 <= t < t1.
std::vector<double> window_magnitude(const TimeTrace& trace, double t0, double t1);

// One template per field: the scenario (which must carry magnetic settings)
// transmitted at that field, cut to [t0, t1). Fields run in parallel.
std::vector<TemplateEntry> template_bank(const Scenario& scenario, const SynthesisGrid& grid,
                                         const std::vector<double>& fields_gauss, double t0, double t1,
                                         unsigned threads = 1);

struct FieldEstimate {
    double b_est = 0.0;
    std::size_t best_index = 0;
    double peak_correlation = 0.0;
    double gradient = 0.0;  // steepest |d r / d B| next to the estimate, 1/Gauss
    double contrast_ratio = 0.0;
    std::vector<double> fields;
    std::vector<double> correlation;
};

struct EstimateOptions {
    // Accepted range of measured/template modulation-depth ratio.
    double contrast_low = 0.8;
    double contrast_high = 1.25;
};

// Zero-lag Pearson correlation against every template, argmax with 3-point
// parabolic refinement. Throws AmbiguityError when the curve is flat, when
// the optimum lies beyond the upper end of the bank, or when the measured
// modulation depth is inconsistent with the best template (the Zeeman loci
// no longer cross, so the field is outside the unambiguous range).
FieldEstimate estimate_field(const std::vector<double>& measured, const std::vector<TemplateEntry>& bank,
                             const EstimateOptions& options = {});

// sqrt(t) N / (dA/dB).
double sensitivity(double noise, double gradient, double measurement_time_s);

// (hbar / (mu_B g_F)) sqrt(2 pi gamma_EIT / (N V)), Gauss/sqrt(Hz).
double ultimate_sensitivity(double gamma_eit_hz, double density_per_m3, double volume_m3, double g_f);

struct SensitivityReport {
    double noise = 0.0;
    double gradient = 0.0;
    double measurement_time_s = 0.0;
    double sensitivity = 0.0;
    double ultimate = 0.0;
    double b_max = 0.0;
};

// Dominant oscillation frequency of the mean-removed signal in [t0, t1).
double transient_frequency(const TimeGrid& grid, const std::vector<double>& signal, double t0, double t1);
double transient_frequency(const TimeTrace& trace, double t0, double t1);

// Ringing frequency from the spacing of successive peaks in [t0, t1): the
// inverse slope of peak time against peak index. Less biased than the
// spectral maximum when the ringing decays within a few cycles. The result
// must agree with transient_frequency to 25%, which rejects noise peaks.
double ringing_frequency(const TimeGrid& grid, const std::vector<double>& signal, double t0, double t1);
double ringing_frequency(const TimeTrace& trace, double t0, double t1);

// Indices of local maxima whose prominence exceeds min_prominence.
std::vector<std::size_t> find_spectral_peaks(const std::vector<double>& values, double min_prominence);

}  // namespace eit
