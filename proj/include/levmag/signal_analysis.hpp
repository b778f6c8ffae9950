#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"
#include "levmag/fft.hpp"
#include "levmag/fit.hpp"
#include "levmag/types.hpp"

// Measurement pipeline: digital lock-in demodulation, Welch spectra,
// ringdown and Lorentzian fits, and the SNR=1 crossing that defines the
// magnetic field resolution.
namespace levmag::signal {

// ---------------------------------------------------------------------------
// lock-in
// ---------------------------------------------------------------------------

/// ENBW coefficient c_n of a cascade of n identical single-pole low-pass
/// stages with time constant tau: ENBW = c_n / tau. c_4 = 5/64.
inline double lockin_enbw_coefficient(int order) {
    if (order < 1 || order > 8) throw invalid_input("lockin: filter order must be in [1, 8]");
    // integral of (1+u^2)^-n over [0, inf): I_n = I_{n-1} * (2n-3)/(2n-2)
    double integral = constants::pi / 2.0;
    for (int n = 2; n <= order; ++n)
        integral *= static_cast<double>(2 * n - 3) / static_cast<double>(2 * n - 2);
    return integral / (2.0 * constants::pi);
}

struct LockinOptions {
    int filter_order = 4;
    int min_samples_per_tau = 8; // decimation keeps at least this many
};

struct LockinResult {
    double sample_rate_hz = 0.0; // decimated output rate
    double start_time_s = 0.0;
    std::vector<double> x, y, amplitude, phase;
    double noise_bandwidth_hz = 0.0;
    double time_constant_s = 0.0;
    int decimation = 1;

    double time_at(std::size_t i) const {
        return start_time_s + static_cast<double>(i) / sample_rate_hz;
    }
    /// sqrt of the mean squared amplitude over t >= t_from.
    double rms_amplitude_after(double t_from) const {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < amplitude.size(); ++i)
            if (time_at(i) >= t_from) {
                s += amplitude[i] * amplitude[i];
                ++n;
            }
        if (n == 0) throw invalid_input("LockinResult: no samples after the requested time");
        return std::sqrt(s / static_cast<double>(n));
    }
};

/// Dual-phase demodulation at f_ref. Mixes with 2cos/-2sin (a tone
/// A cos(2 pi f_ref t + phi) settles to amplitude A, phase phi) and low-pass
/// filters both quadratures with an ENBW-matched cascade.
inline LockinResult lockin_demodulate(const TimeSeries& ts, double f_ref_hz,
                                      double noise_bandwidth_hz, const LockinOptions& opt = {}) {
    ts.validate();
    if (!(f_ref_hz > 0.0) || !(f_ref_hz < 0.5 * ts.sample_rate_hz))
        throw invalid_input("lockin: reference must satisfy 0 < f_ref < sample_rate/2 (aliasing)");
    if (!(noise_bandwidth_hz > 0.0)) throw invalid_input("lockin: noise bandwidth must be > 0");

    const double tau = lockin_enbw_coefficient(opt.filter_order) / noise_bandwidth_hz;
    const double dt = 1.0 / ts.sample_rate_hz;
    const double alpha = std::exp(-dt / tau);
    const int decim =
        std::max<int>(1, static_cast<int>(ts.sample_rate_hz * tau /
                                          static_cast<double>(opt.min_samples_per_tau)));

    LockinResult out;
    out.sample_rate_hz = ts.sample_rate_hz / decim;
    out.noise_bandwidth_hz = noise_bandwidth_hz;
    out.time_constant_s = tau;
    out.decimation = decim;

    std::vector<double> fx(static_cast<std::size_t>(opt.filter_order), 0.0);
    std::vector<double> fy(static_cast<std::size_t>(opt.filter_order), 0.0);
    const double w = 2.0 * constants::pi * f_ref_hz;
    bool first_out = true;
    for (std::size_t k = 0; k < ts.samples.size(); ++k) {
        const double t = ts.time_at(k);
        const double c = std::cos(w * t), s = std::sin(w * t);
        double vx = 2.0 * ts.samples[k] * c;
        double vy = -2.0 * ts.samples[k] * s;
        for (int j = 0; j < opt.filter_order; ++j) {
            fx[j] += (1.0 - alpha) * (vx - fx[j]);
            fy[j] += (1.0 - alpha) * (vy - fy[j]);
            vx = fx[j];
            vy = fy[j];
        }
        if (k % static_cast<std::size_t>(decim) == 0) {
            if (first_out) {
                out.start_time_s = t;
                first_out = false;
            }
            out.x.push_back(vx);
            out.y.push_back(vy);
            out.amplitude.push_back(std::hypot(vx, vy));
            out.phase.push_back(std::atan2(vy, vx));
        }
    }
    return out;
}

/// Magnitude response |H(nu)|^2 of the lock-in low-pass cascade at offset nu.
inline double lockin_filter_power(double nu_hz, double noise_bandwidth_hz, int order = 4) {
    const double tau = lockin_enbw_coefficient(order) / noise_bandwidth_hz;
    const double x = 2.0 * constants::pi * nu_hz * tau;
    return std::pow(1.0 + x * x, -order);
}

/// Lock-in noise bandwidth at which the SNR=1 conversion B_n^2 = S_B * df is
/// unbiased for a thermal line of width f0/Q observed at resonance: solves
/// 2 * int L(nu) |H(nu)|^2 dnu = df, where L is the unit-peak Lorentzian of
/// half-width f0/(2Q). For df well above pi*f0/Q the conversion
/// underestimates S_B; well below, it overestimates (limit 4x).
inline double matched_noise_bandwidth(double f0_hz, double quality_factor, int order = 4) {
    if (!(f0_hz > 0.0) || !(quality_factor > 0.0))
        throw invalid_input("matched_noise_bandwidth: f0 and Q must be > 0");
    const double h = f0_hz / (2.0 * quality_factor);

    auto line_power = [&](double df) {
        // 2 * integral over (-inf, inf) of L*|H|^2 = 4 * integral over [0, inf)
        auto integrand = [&](double nu) {
            return h * h / (nu * nu + h * h) * lockin_filter_power(nu, df, order);
        };
        // piecewise Simpson on log segments spanning both knees
        const double lo = std::min(h, df) * 1e-4;
        const double hi = std::max(h, df) * 1e5;
        double total = 0.0;
        // [0, lo] linear
        {
            const int n = 32;
            double s = integrand(0.0) + integrand(lo);
            for (int i = 1; i < n; ++i)
                s += (i % 2 ? 4.0 : 2.0) * integrand(lo * i / n);
            total += s * lo / (3.0 * n);
        }
        const int segs = static_cast<int>(std::ceil(std::log10(hi / lo))) * 4;
        for (int k = 0; k < segs; ++k) {
            const double a = lo * std::pow(hi / lo, static_cast<double>(k) / segs);
            const double b = lo * std::pow(hi / lo, static_cast<double>(k + 1) / segs);
            const int n = 64;
            double s = integrand(a) + integrand(b);
            for (int i = 1; i < n; ++i)
                s += (i % 2 ? 4.0 : 2.0) * integrand(a + (b - a) * i / n);
            total += s * (b - a) / (3.0 * n);
        }
        return 4.0 * total;
    };

    double lo = constants::pi * h / 100.0, hi = constants::pi * h * 400.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (line_power(mid) > mid)
            lo = mid;
        else
            hi = mid;
        if (hi / lo - 1.0 < 1e-12) break;
    }
    return std::sqrt(lo * hi);
}

// ---------------------------------------------------------------------------
// spectra
// ---------------------------------------------------------------------------

enum class Window { rectangular, hann, hamming, blackman };

inline std::vector<double> make_window(Window w, std::size_t n) {
    std::vector<double> out(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = 2.0 * constants::pi * static_cast<double>(i) / static_cast<double>(n);
        switch (w) {
            case Window::rectangular: break;
            case Window::hann: out[i] = 0.5 - 0.5 * std::cos(x); break;
            case Window::hamming: out[i] = 0.54 - 0.46 * std::cos(x); break;
            case Window::blackman:
                out[i] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
                break;
        }
    }
    return out;
}

struct Psd {
    std::vector<double> frequency_hz;
    std::vector<double> power; // one-sided, signal units^2 / Hz
    std::size_t n_segments = 0;
    double bin_width_hz = 0.0;

    /// integral of the PSD over frequency (Parseval check target)
    double total_power() const {
        double s = 0.0;
        for (double v : power) s += v;
        return s * bin_width_hz;
    }
};

/// Welch average of one-sided periodograms. overlap is a fraction of the
/// segment length (0.5 = 50%).
inline Psd welch_psd(const TimeSeries& ts, std::size_t segment_length, double overlap = 0.5,
                     Window window = Window::hann) {
    ts.validate();
    if (segment_length == 0 || segment_length > ts.samples.size())
        throw invalid_input("welch_psd: segment longer than the record");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw invalid_input("welch_psd: overlap in [0,1)");

    const std::size_t n = segment_length;
    const std::size_t step =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround((1.0 - overlap) * n)));
    const std::vector<double> win = make_window(window, n);
    double wss = 0.0;
    for (double v : win) wss += v * v;

    Psd out;
    out.bin_width_hz = ts.sample_rate_hz / static_cast<double>(n);
    const std::size_t nbins = n / 2 + 1;
    out.frequency_hz.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k) out.frequency_hz[k] = out.bin_width_hz * k;
    out.power.assign(nbins, 0.0);

    std::vector<fft::cplx> seg(n);
    for (std::size_t off = 0; off + n <= ts.samples.size(); off += step) {
        for (std::size_t i = 0; i < n; ++i) seg[i] = fft::cplx(ts.samples[off + i] * win[i], 0.0);
        std::vector<fft::cplx> sp = fft::dft(seg);
        for (std::size_t k = 0; k < nbins; ++k) {
            const double mag2 = std::norm(sp[k]);
            const double scale = (k == 0 || (n % 2 == 0 && k == nbins - 1)) ? 1.0 : 2.0;
            out.power[k] += scale * mag2 / (ts.sample_rate_hz * wss);
        }
        ++out.n_segments;
    }
    for (double& v : out.power) v /= static_cast<double>(out.n_segments);
    return out;
}

// ---------------------------------------------------------------------------
// ringdown
// ---------------------------------------------------------------------------

struct RingdownFit {
    double tau_s = 0.0;
    double sigma_tau_s = 0.0;
    double initial_amplitude = 0.0;
    double offset = 0.0;
    bool insufficient_decay = false; // record shorter than tau/2
    double reduced_chi2 = 0.0;
};

/// Least-squares fit of A0 exp(-t/tau) + c to an amplitude record.
inline RingdownFit fit_ringdown(const TimeSeries& amplitude) {
    amplitude.validate();
    const std::size_t n = amplitude.samples.size();
    if (n < 4) throw invalid_input("fit_ringdown: need at least 4 samples");
    const double duration = amplitude.duration_s();

    const std::size_t ntail = std::max<std::size_t>(1, n / 20);
    double c0 = 0.0;
    for (std::size_t i = n - ntail; i < n; ++i) c0 += amplitude.samples[i];
    c0 /= static_cast<double>(ntail);
    const double a0 = amplitude.samples.front() - c0;
    // crossing of (y - c)/a0 = 1/e gives the tau scale
    double tau0 = duration / 2.0;
    for (std::size_t i = 0; i < n; ++i)
        if (amplitude.samples[i] - c0 < a0 * 0.3679) { // 1/e crossing
            tau0 = std::max(amplitude.time_at(i) - amplitude.start_time_s, duration / 100.0);
            break;
        }

    auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        r.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = amplitude.time_at(i) - amplitude.start_time_s;
            r[i] = p[0] * std::exp(-t / std::fabs(p[1])) + p[2] - amplitude.samples[i];
        }
    };
    fit::Result fr2 = fit::least_squares(residuals, {a0, tau0, c0});
    RingdownFit out;
    out.tau_s = std::fabs(fr2.params[1]);
    out.initial_amplitude = fr2.params[0];
    out.offset = fr2.params[2];
    out.reduced_chi2 = fr2.reduced_chi2;
    const double scale = fr2.n_residuals > 3 ? fr2.chi2 / static_cast<double>(fr2.n_residuals - 3)
                                            : 0.0;
    out.sigma_tau_s = std::sqrt(std::max(fr2.covariance[1 * 3 + 1], 0.0) * scale);
    out.insufficient_decay = duration < 0.5 * out.tau_s;
    if (!(out.tau_s > 0.0)) throw convergence_error("fit_ringdown: nonpositive decay time");
    return out;
}

/// Q = pi f tau.
inline double q_from_ringdown(double frequency_hz, double tau_s) {
    if (!(frequency_hz > 0.0) || !(tau_s > 0.0))
        throw invalid_input("q_from_ringdown: inputs must be > 0");
    return constants::pi * frequency_hz * tau_s;
}

// ---------------------------------------------------------------------------
// Lorentzian line fit
// ---------------------------------------------------------------------------

struct LorentzianFit {
    double f0_hz = 0.0;
    double fwhm_hz = 0.0; // full width at half maximum of the power spectrum
    double amplitude = 0.0;
    double background = 0.0;
    double sigma_f0_hz = 0.0;
    double sigma_fwhm_hz = 0.0;
    double peak_height = 0.0; // amplitude/(fwhm/2)^2 above background
    double reduced_chi2 = 0.0;
};

/// Fit S(f) = A/((f-f0)^2 + (fwhm/2)^2) + bg. If n_averages > 0 the points
/// are weighted with sigma_i = S_model,i / sqrt(n_averages) (chi-squared
/// scatter of an averaged periodogram); otherwise the fit is unweighted and
/// the covariance is scaled by the reduced chi square.
inline LorentzianFit fit_lorentzian(const std::vector<double>& frequency_hz,
                                    const std::vector<double>& power, std::size_t n_averages = 0) {
    const std::size_t n = frequency_hz.size();
    if (n != power.size() || n < 5)
        throw invalid_input("fit_lorentzian: need matching arrays of at least 5 points");

    std::size_t ipk = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (power[i] > power[ipk]) ipk = i;
    if (ipk < 2 || ipk + 2 >= n)
        throw invalid_input("fit_lorentzian: peak at the edge of the frequency range");

    std::vector<double> sorted = power;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double bg0 = sorted[n / 2];
    const double peak0 = power[ipk] - bg0;
    if (!(peak0 > 0.0)) throw invalid_input("fit_lorentzian: no peak above background");
    const double half = bg0 + peak0 / 2.0;
    double flo = frequency_hz[ipk], fhi = frequency_hz[ipk];
    for (std::size_t i = ipk; i-- > 0;)
        if (power[i] < half) {
            flo = frequency_hz[i];
            break;
        }
    for (std::size_t i = ipk + 1; i < n; ++i)
        if (power[i] < half) {
            fhi = frequency_hz[i];
            break;
        }
    double hw0 = std::max(0.5 * (fhi - flo), frequency_hz[1] - frequency_hz[0]);

    const double navg = static_cast<double>(n_averages);
    auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        r.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double df = frequency_hz[i] - p[0];
            const double hw = std::fabs(p[1]);
            const double m = p[2] / (df * df + hw * hw) + p[3];
            const double sg = n_averages > 0 ? std::max(m, 1e-300) / std::sqrt(navg) : 1.0;
            r[i] = (m - power[i]) / sg;
        }
    };
    fit::Result fr =
        fit::least_squares(residuals, {frequency_hz[ipk], hw0, peak0 * hw0 * hw0, bg0});

    LorentzianFit out;
    out.f0_hz = fr.params[0];
    out.fwhm_hz = 2.0 * std::fabs(fr.params[1]);
    out.amplitude = fr.params[2];
    out.background = fr.params[3];
    out.peak_height = fr.params[2] / (fr.params[1] * fr.params[1]);
    out.reduced_chi2 = fr.reduced_chi2;
    const double scale = n_averages > 0 ? 1.0 : std::max(fr.reduced_chi2, 0.0);
    out.sigma_f0_hz = std::sqrt(std::max(fr.covariance[0], 0.0) * (n_averages > 0 ? 1.0 : scale));
    out.sigma_fwhm_hz =
        2.0 * std::sqrt(std::max(fr.covariance[1 * 4 + 1], 0.0) * (n_averages > 0 ? 1.0 : scale));
    if (!(out.fwhm_hz > 0.0)) throw convergence_error("fit_lorentzian: nonpositive linewidth");
    return out;
}

// ---------------------------------------------------------------------------
// SNR = 1 crossing
// ---------------------------------------------------------------------------

struct CrossingPoint {
    double current_a = 0.0;
    double amplitude = 0.0; // lock-in reading, arbitrary units
};

struct CrossingFit {
    double response_slope = 0.0; // units of amplitude per ampere
    double noise_floor = 0.0;    // amplitude units
    double i_snr1_a = 0.0;       // = noise_floor / response_slope
    double sigma_i_a = 0.0;
};

/// Fit amplitude(I) = sqrt((s I)^2 + n^2) by least squares in log-log space.
/// The data must show both regimes (driven and noise-floor).
inline CrossingFit extract_snr1_crossing(const std::vector<CrossingPoint>& points) {
    if (points.size() < 3) throw invalid_input("extract_snr1_crossing: need at least 3 points");
    double ymin = 1e300, ymax = 0.0, imax = 0.0;
    double imin_pos = 1e300;
    for (const auto& p : points) {
        if (!(p.amplitude > 0.0))
            throw invalid_input("extract_snr1_crossing: amplitudes must be > 0");
        if (p.current_a < 0.0)
            throw invalid_input("extract_snr1_crossing: currents must be >= 0");
        ymin = std::min(ymin, p.amplitude);
        ymax = std::max(ymax, p.amplitude);
        imax = std::max(imax, p.current_a);
        if (p.current_a > 0.0) imin_pos = std::min(imin_pos, p.current_a);
    }
    if (ymax / ymin < 3.0)
        throw degenerate_fit_error(
            "extract_snr1_crossing: single regime (max/min amplitude < 3), knee not bracketed");

    auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        r.resize(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double s = std::exp(p[0]), nf = std::exp(p[1]);
            const double m2 = s * s * points[i].current_a * points[i].current_a + nf * nf;
            r[i] = std::log(points[i].amplitude) - 0.5 * std::log(m2);
        }
    };
    const double s0 = ymax / imax;
    fit::Result fr = fit::least_squares(residuals, {std::log(s0), std::log(ymin)});

    CrossingFit out;
    out.response_slope = std::exp(fr.params[0]);
    out.noise_floor = std::exp(fr.params[1]);
    out.i_snr1_a = out.noise_floor / out.response_slope;
    const double scale = fr.n_residuals > 2
                             ? fr.chi2 / static_cast<double>(fr.n_residuals - 2)
                             : 0.0;
    // Var(ln I1) = Var(ln n) + Var(ln s) - 2 Cov
    const double vln = (fr.covariance[0] + fr.covariance[3] - 2.0 * fr.covariance[1]) * scale;
    out.sigma_i_a = out.i_snr1_a * std::sqrt(std::max(vln, 0.0));
    if (out.i_snr1_a < imin_pos || out.i_snr1_a > imax)
        throw degenerate_fit_error(
            "extract_snr1_crossing: fitted knee lies outside the measured current range");
    return out;
}

struct FieldResolution {
    double s_b = 0.0;       // T^2/Hz, optimal orientation
    double sigma_s_b = 0.0;
    double b_n_t = 0.0;     // equivalent field noise in the bandwidth
    double sigma_b_n_t = 0.0;
};

/// Convert the SNR=1 current into a field PSD: B_n = lambda I sin(theta)
/// (optimal-orientation correction), S_B = B_n^2 / df. Uncertainty combines
/// sigma_I with the coil calibration sigmas.
inline FieldResolution field_resolution_from_crossing(const CrossingFit& cross,
                                                      const CoilCalibration& coil,
                                                      double noise_bandwidth_hz) {
    coil.validate();
    if (!(noise_bandwidth_hz > 0.0))
        throw invalid_input("field_resolution_from_crossing: bandwidth must be > 0");
    const double st = std::sin(coil.theta_rad);
    FieldResolution out;
    out.b_n_t = coil.lambda_t_per_a * cross.i_snr1_a * st;
    out.s_b = out.b_n_t * out.b_n_t / noise_bandwidth_hz;
    double rel2 = 0.0;
    if (cross.i_snr1_a > 0.0) rel2 += std::pow(cross.sigma_i_a / cross.i_snr1_a, 2);
    if (coil.lambda_t_per_a > 0.0)
        rel2 += std::pow(coil.sigma_lambda_t_per_a / coil.lambda_t_per_a, 2);
    if (st != 0.0) rel2 += std::pow(coil.sigma_theta_rad * std::cos(coil.theta_rad) / st, 2);
    out.sigma_b_n_t = out.b_n_t * std::sqrt(rel2);
    out.sigma_s_b = out.s_b * 2.0 * std::sqrt(rel2);
    return out;
}

} // namespace levmag::signal
