#include "eitsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eitsim/error.hpp"
#include "eitsim/fft.hpp"
#include "eitsim/parallel.hpp"

namespace eit {

namespace {

constexpr double kHbar = 1.054571817e-34;         // J s
constexpr double kBohrMagneton = 9.2740100783e-24;  // J/T
constexpr double kGaussPerTesla = 1e4;

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
    return 0.5 * (lo + hi);
}

// Samples with t0 <= t < t1.
std::pair<std::size_t, std::size_t> window_indices(const TimeGrid& grid, double t0, double t1) {
    if (!(t1 > t0)) throw ValidationError("analysis window must have t1 > t0");
    const double eps = 1e-9 * grid.step;
    if (t0 < grid.start - eps || t1 > grid.at(grid.count - 1) + grid.step + eps)
        throw ValidationError("analysis window lies outside the trace");
    std::size_t j0 = 0;
    while (j0 < grid.count && grid.at(j0) < t0 - eps) ++j0;
    std::size_t j1 = j0;
    while (j1 < grid.count && grid.at(j1) < t1 - eps) ++j1;
    return {j0, j1};
}

std::vector<double> detrended(const std::vector<double>& y) {
    std::vector<double> x(y.size());
    std::iota(x.begin(), x.end(), 0.0);
    const auto fit = linear_fit(x, y);
    std::vector<double> d(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] - (fit.intercept + fit.slope * x[i]);
    return d;
}

// Vertex of the parabola through three equally spaced samples: offset in
// samples and the interpolated value.
std::pair<double, double> parabolic_vertex(double ym, double y0, double yp) {
    const double den = ym - 2.0 * y0 + yp;
    if (den == 0.0) return {0.0, y0};
    const double off = std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5);
    return {off, y0 - 0.25 * (ym - yp) * off};
}

// Vertex abscissa of the parabola through three arbitrary points.
double vertex_x(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d1 = (y1 - y0) / (x1 - x0);
    const double d2 = (y2 - y1) / (x2 - x1);
    const double a = (d2 - d1) / (x2 - x0);
    if (a == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 0.5 * (x0 + x1) - d1 / (2.0 * a);
}

double coefficient_of_variation(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return mean != 0.0 ? std::sqrt(ss / n) / std::abs(mean) : 0.0;
}

}  // namespace

Regime classify_regime(double mod_frequency_hz, double gamma_eit_hz) {
    const double ratio = mod_frequency_hz / gamma_eit_hz;
    if (ratio < 0.2) return Regime::Adiabatic;
    if (ratio > 5.0) return Regime::NonAdiabatic;
    return Regime::Intermediate;
}

const char* regime_name(Regime regime) {
    switch (regime) {
        case Regime::Adiabatic: return "adiabatic";
        case Regime::NonAdiabatic: return "non-adiabatic";
        default: return "intermediate";
    }
}

std::vector<Peak> find_ringing_peaks(const TimeGrid& grid, const std::vector<double>& signal,
                                     double t0, double t1) {
    if (signal.size() != grid.count) throw ValidationError("signal length does not match its grid");
    const auto [j0, j1] = window_indices(grid, t0, t1);
    if (j1 - j0 < 5) throw NumericalError("analysis window holds too few samples for peak finding");
    const std::vector<double> y(signal.begin() + static_cast<long>(j0), signal.begin() + static_cast<long>(j1));
    const std::size_t n = y.size();

    const auto d = detrended(y);
    const double med = median(d);
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(d[i] - med);
    const double floor = 3.0 * median(dev);

    std::vector<std::size_t> maxima;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (y[i] > y[i - 1] && y[i] >= y[i + 1]) maxima.push_back(i);

    const auto refined_min = [&](std::size_t a, std::size_t b) {
        std::size_t k = a;
        for (std::size_t i = a; i <= b; ++i)
            if (y[i] < y[k]) k = i;
        if (k == 0 || k + 1 >= n) return y[k];
        return parabolic_vertex(y[k - 1], y[k], y[k + 1]).second;
    };

    std::vector<Peak> peaks;
    for (std::size_t m = 0; m < maxima.size(); ++m) {
        const std::size_t i = maxima[m];
        const std::size_t lo = m == 0 ? 0 : maxima[m - 1];
        const std::size_t hi = m + 1 == maxima.size() ? n - 1 : maxima[m + 1];
        const auto [off, top] = parabolic_vertex(y[i - 1], y[i], y[i + 1]);
        const double trough = 0.5 * (refined_min(lo, i) + refined_min(i, hi));
        const double amp = top - trough;
        if (amp > floor) peaks.push_back({grid.at(j0 + i) + off * grid.step, amp});
    }
    if (peaks.size() < 3) throw NumericalError("fewer than three ringing peaks above the noise floor");
    return peaks;
}

std::vector<Peak> find_ringing_peaks(const TimeTrace& trace, double t0, double t1) {
    std::vector<double> mag(trace.amplitude.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(trace.amplitude[i]);
    return find_ringing_peaks(trace.grid, mag, t0, t1);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("linear fit needs two or more paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ValidationError("linear fit needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return f;
}

DecayFit fit_decay(const std::vector<Peak>& peaks) {
    if (peaks.size() < 3) throw ValidationError("decay fit needs at least three peaks");
    std::vector<double> t, lna;
    for (const auto& p : peaks) {
        if (!(p.amplitude > 0.0)) throw ValidationError("decay fit needs positive peak amplitudes");
        t.push_back(p.t);
        lna.push_back(std::log(p.amplitude));
    }
    const auto fit = linear_fit(t, lna);
    DecayFit out;
    out.r_squared = fit.r_squared;
    out.decaying = fit.slope < 0.0;
    out.tau = out.decaying ? -1.0 / fit.slope : std::numeric_limits<double>::infinity();
    return out;
}

DecayRun decay_run(const Scenario& base, double beta_value, double beta_coupling_hz) {
    if (!(beta_value > 0.0)) throw ValidationError("beta must be positive");
    const double rc = beta_coupling_hz > 0.0 ? beta_coupling_hz : base.medium.rabi_coupling_hz;
    DecayRun run;
    run.scenario = base;
    run.scenario.probe.shape = ProbeShape::ContinuousWave;
    const double f = base.modulation.frequency_hz;
    const double ratio = rc / (beta_value * f);
    run.scenario.modulation.modulation_index = ratio * ratio;

    // Resolve ringing up to the peak sweep frequency with >= 16 samples per cycle.
    run.grid = default_grid(run.scenario);
    const double sweep = run.scenario.modulation.modulation_index * f;
    const auto need = static_cast<std::size_t>(std::ceil(16.0 * sweep / run.grid.freq_step_hz));
    run.grid.count = next_pow2(std::max(run.grid.count, need));

    const double period = 1.0 / f;
    const double tc = std::fmod(0.25 * period - base.modulation.sine_shift() + period, period);
    run.t0 = tc;
    run.t1 = tc + 0.5 * period;
    return run;
}

std::vector<DecayPoint> decay_vs_beta_curve(const Scenario& base, const std::vector<double>& betas,
                                            const DecayCurveOptions& options) {
    std::vector<DecayPoint> out(betas.size());
    parallel_for(betas.size(), options.threads, [&](std::size_t i) {
        DecayPoint& p = out[i];
        p.beta = betas[i];
        p.mod_frequency_hz = base.modulation.frequency_hz;
        try {
            const auto run = decay_run(base, betas[i], options.beta_coupling_hz);
            p.modulation_index = run.scenario.modulation.modulation_index;
            const auto trace = transmit(run.scenario, run.grid);
            const auto peaks = find_ringing_peaks(trace, run.t0, run.t1);
            const auto fit = fit_decay(peaks);
            p.peaks = peaks.size();
            p.tau = fit.tau;
            p.r_squared = fit.r_squared;
            p.ok = fit.decaying;
            if (!fit.decaying) p.error = "ringing peaks do not decay";
        } catch (const std::exception& e) {
            p.ok = false;
            p.error = e.what();
        }
    });
    return out;
}

double bmax(const ModulationSpec& mod, int delta_m, double g_f, double bohr_magneton_hz_per_gauss) {
    if (delta_m == 0) throw ValidationError("B_max is undefined for the field-insensitive delta_m = 0 channel");
    const double denom = std::abs(static_cast<double>(delta_m) * g_f) * bohr_magneton_hz_per_gauss;
    if (!(denom > 0.0)) throw ValidationError("B_max needs a non-zero g-factor");
    return mod.modulation_index * mod.frequency_hz / denom;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw ValidationError("correlation needs equal-length series");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> window_magnitude(const TimeTrace& trace, double t0, double t1) {
    const auto [j0, j1] = window_indices(trace.grid, t0, t1);
    std::vector<double> out(j1 - j0);
    for (std::size_t j = j0; j < j1; ++j) out[j - j0] = std::abs(trace.amplitude[j]);
    return out;
}

std::vector<TemplateEntry> template_bank(const Scenario& scenario, const SynthesisGrid& grid,
                                         const std::vector<double>& fields_gauss, double t0, double t1,
                                         unsigned threads) {
    if (!scenario.magnetic) throw ValidationError("template bank needs magnetic settings in the scenario");
    std::vector<TemplateEntry> bank(fields_gauss.size());
    parallel_for(fields_gauss.size(), threads, [&](std::size_t i) {
        Scenario s = scenario;
        s.magnetic->field_gauss = fields_gauss[i];
        bank[i] = {fields_gauss[i], window_magnitude(transmit(s, grid), t0, t1)};
    });
    return bank;
}

FieldEstimate estimate_field(const std::vector<double>& measured, const std::vector<TemplateEntry>& bank,
                             const EstimateOptions& options) {
    if (bank.size() < 3) throw ValidationError("template bank needs at least three fields");
    for (std::size_t i = 1; i < bank.size(); ++i)
        if (!(bank[i].field_gauss > bank[i - 1].field_gauss))
            throw ValidationError("template bank fields must be strictly increasing");

    FieldEstimate est;
    for (const auto& entry : bank) {
        if (entry.signal.size() != measured.size())
            throw ValidationError("template and measured trace lengths differ");
        est.fields.push_back(entry.field_gauss);
        est.correlation.push_back(pearson(measured, entry.signal));
    }
    const auto& r = est.correlation;
    const auto& b = est.fields;
    const std::size_t n = r.size();
    const auto [lo_it, hi_it] = std::minmax_element(r.begin(), r.end());
    if (*hi_it - *lo_it < 1e-3) throw AmbiguityError("correlation curve is flat; field is not identifiable");

    const std::size_t i = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    est.best_index = i;
    est.peak_correlation = r[i];

    if (r[i] >= 1.0 - 1e-12) {
        est.b_est = b[i];
    } else if (i > 0 && i + 1 < n) {
        est.b_est = vertex_x(b[i - 1], r[i - 1], b[i], r[i], b[i + 1], r[i + 1]);
        if (!std::isfinite(est.b_est)) est.b_est = b[i];
        est.b_est = std::clamp(est.b_est, b[i - 1], b[i + 1]);
    } else if (i == 0) {
        if (b[0] == 0.0) {
            est.b_est = 0.0;  // the response is even in B
        } else {
            const double v = vertex_x(b[0], r[0], b[1], r[1], b[2], r[2]);
            if (std::isfinite(v) && v < b[0] - 0.5 * (b[1] - b[0]))
                throw AmbiguityError("correlation optimum lies below the template bank");
            est.b_est = b[0];
        }
    } else {
        const double v = vertex_x(b[n - 3], r[n - 3], b[n - 2], r[n - 2], b[n - 1], r[n - 1]);
        if (!std::isfinite(v) || v > b[n - 1] + 0.5 * (b[n - 1] - b[n - 2]))
            throw AmbiguityError("correlation optimum lies beyond the template bank; field exceeds the unambiguous range");
        est.b_est = std::min(v, b[n - 1]);
        if (est.b_est < b[n - 2]) est.b_est = b[n - 1];
    }

    const double cv_t = coefficient_of_variation(bank[i].signal);
    const double cv_m = coefficient_of_variation(measured);
    est.contrast_ratio = cv_t > 0.0 ? cv_m / cv_t : 1.0;
    if (est.contrast_ratio < options.contrast_low || est.contrast_ratio > options.contrast_high)
        throw AmbiguityError("measured modulation depth does not match the best template; "
                             "field is outside the range where the Zeeman loci cross");

    double grad = 0.0;
    for (const std::size_t j : {i - 1, i + 1}) {
        if (j == static_cast<std::size_t>(-1) || j == 0 || j + 1 >= n) continue;
        grad = std::max(grad, std::abs(r[j + 1] - r[j - 1]) / (b[j + 1] - b[j - 1]));
    }
    if (grad == 0.0) {
        if (i > 0) grad = std::max(grad, std::abs(r[i] - r[i - 1]) / (b[i] - b[i - 1]));
        if (i + 1 < n) grad = std::max(grad, std::abs(r[i + 1] - r[i]) / (b[i + 1] - b[i]));
    }
    est.gradient = grad;
    return est;
}

double sensitivity(double noise, double gradient, double measurement_time_s) {
    if (!(gradient > 0.0)) throw ValidationError("sensitivity needs a positive signal gradient");
    if (!(noise >= 0.0) || !(measurement_time_s > 0.0))
        throw ValidationError("sensitivity needs non-negative noise and positive measurement time");
    return std::sqrt(measurement_time_s) * noise / gradient;
}

double ultimate_sensitivity(double gamma_eit_hz, double density_per_m3, double volume_m3, double g_f) {
    if (!(gamma_eit_hz > 0.0) || !(density_per_m3 > 0.0) || !(volume_m3 > 0.0) || !(g_f > 0.0))
        throw ValidationError("ultimate sensitivity needs positive inputs");
    const double tesla = kHbar / (kBohrMagneton * g_f) * std::sqrt(kTwoPi * gamma_eit_hz / (density_per_m3 * volume_m3));
    return tesla * kGaussPerTesla;
}

double transient_frequency(const TimeGrid& grid, const std::vector<double>& signal, double t0, double t1) {
    if (signal.size() != grid.count) throw ValidationError("signal length does not match its grid");
    const auto [j0, j1] = window_indices(grid, t0, t1);
    const std::size_t n = j1 - j0;
    if (n < 8) throw ValidationError("analysis window holds too few samples");
    // Mean removal only: a linear detrend across the turn-on edge injects a
    // ramp whose spectrum pulls the peak toward DC.
    double mean = 0.0;
    for (std::size_t i = j0; i < j1; ++i) mean += signal[i];
    mean /= static_cast<double>(n);

    const std::size_t npad = next_pow2(16 * n);
    std::vector<cplx> buf(npad, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) buf[i] = signal[j0 + i] - mean;
    fft_forward(buf);
    const std::size_t half = npad / 2;
    std::vector<double> mag(half + 1);
    for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(buf[k]);

    const auto k_min = static_cast<std::size_t>(std::ceil(1.5 * static_cast<double>(npad) / static_cast<double>(n)));
    if (k_min + 2 >= half) throw NumericalError("analysis window is too short for a frequency estimate");
    std::size_t k = k_min;
    for (std::size_t j = k_min; j < half; ++j)
        if (mag[j] > mag[k]) k = j;
    if (k == k_min) throw NumericalError("no oscillation: spectrum has no peak away from DC");
    const double floor = 5.0 * median(std::vector<double>(mag.begin() + 1, mag.end()));
    if (!(mag[k] > floor)) throw NumericalError("no spectral peak above the noise floor");

    const double off = parabolic_vertex(mag[k - 1], mag[k], mag[k + 1]).first;
    const double f = (static_cast<double>(k) + off) / (static_cast<double>(npad) * grid.step);
    if (f * static_cast<double>(n) * grid.step < 5.0)
        throw NumericalError("analysis window holds fewer than five oscillation cycles");
    return f;
}

double transient_frequency(const TimeTrace& trace, double t0, double t1) {
    std::vector<double> mag(trace.amplitude.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(trace.amplitude[i]);
    return transient_frequency(trace.grid, mag, t0, t1);
}

double ringing_frequency(const TimeGrid& grid, const std::vector<double>& signal, double t0, double t1) {
    const double coarse = transient_frequency(grid, signal, t0, t1);
    const auto peaks = find_ringing_peaks(grid, signal, t0, t1);
    if (peaks.size() < 3) throw NumericalError("fewer than three ringing peaks above the noise floor");
    std::vector<double> idx(peaks.size()), times(peaks.size());
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        idx[i] = static_cast<double>(i);
        times[i] = peaks[i].t;
    }
    const double f = 1.0 / linear_fit(idx, times).slope;
    if (!(std::abs(f / coarse - 1.0) <= 0.25))
        throw NumericalError("peak spacing disagrees with the spectral estimate");
    return f;
}

double ringing_frequency(const TimeTrace& trace, double t0, double t1) {
    std::vector<double> mag(trace.amplitude.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(trace.amplitude[i]);
    return ringing_frequency(trace.grid, mag, t0, t1);
}

std::vector<std::size_t> find_spectral_peaks(const std::vector<double>& v, double min_prominence) {
    std::vector<std::size_t> out;
    const std::size_t n = v.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(v[i] > v[i - 1] && v[i] >= v[i + 1])) continue;
        double left = v[i];
        for (std::size_t j = i; j-- > 0;) {
            if (v[j] > v[i]) break;
            left = std::min(left, v[j]);
        }
        double right = v[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (v[j] > v[i]) break;
            right = std::min(right, v[j]);
        }
        if (v[i] - std::max(left, right) >= min_prominence) out.push_back(i);
    }
    return out;
}

}  // namespace eit
