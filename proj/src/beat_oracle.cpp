#include "homspec/beat_oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include "homspec/errors.hpp"
#include "homspec/kernels.hpp"
#include "homspec/levmar.hpp"
#include "homspec/rng.hpp"

namespace homspec::beat {

namespace {

constexpr double kPi = 3.14159265358979323846;

// FFTW plan creation is not thread-safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::vector<double> synthesize_beat(double delta_rad_s, double sigma_s, double duration_s,
                                    double sample_rate_hz, std::uint64_t seed) {
    if (!(sigma_s > 0.0)) throw DataError("synthesize_beat: sigma must be positive");
    if (!(duration_s > 0.0)) throw DataError("synthesize_beat: duration must be positive");
    const bool noiseless = std::isinf(sigma_s);
    const double required = 4.0 * (delta_rad_s / (2.0 * kPi) + (noiseless ? 0.0 : 2.0 / sigma_s));
    if (!(sample_rate_hz > required))
        throw DataError("synthesize_beat: Nyquist violation, need sample_rate > 4*(delta/2pi + 2/sigma)");

    const auto n = static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz));
    if (n < 16) throw DataError("synthesize_beat: series too short");
    const double dt = 1.0 / sample_rate_hz;

    std::vector<double> phase(n), intensity(n);
    CounterRng rng(seed, rng_stream::beat, 0);

    if (noiseless) {
        double psi = 2.0 * kPi * rng.next_double();
        for (std::size_t i = 0; i < n; ++i) {
            phase[i] = psi;
            psi += delta_rad_s * dt;
            if (psi > kPi) psi -= 2.0 * kPi * std::floor((psi + kPi) / (2.0 * kPi));
        }
    } else {
        // Each source's instantaneous frequency is an Ornstein-Uhlenbeck
        // process with std 1/(sigma*sqrt(2)): slow against the coherence
        // decay at ~2 sigma, so the field coherence is exp(-t^2/(4 sigma^2))
        // to well under a percent, and fast against the record length so the
        // averaged periodogram sees the full line.
        const double nu_std = 1.0 / (sigma_s * std::sqrt(2.0));
        const double t_corr = jitter_correlation_sigmas * sigma_s;
        const double alpha = std::exp(-dt / t_corr);
        const double kick = nu_std * std::sqrt(1.0 - alpha * alpha);
        double nu_a = nu_std * rng.next_gaussian();
        double nu_b = nu_std * rng.next_gaussian();
        double psi = 2.0 * kPi * rng.next_double();
        for (std::size_t i = 0; i < n; ++i) {
            phase[i] = psi;
            psi += (delta_rad_s + nu_b - nu_a) * dt;
            if (psi > kPi) psi -= 2.0 * kPi;
            if (psi < -kPi) psi += 2.0 * kPi;
            nu_a = alpha * nu_a + kick * rng.next_gaussian();
            nu_b = alpha * nu_b + kick * rng.next_gaussian();
        }
    }
    // |E_A + E_B|^2 for unit fields: 2 + 2 cos(relative phase).
    kernels::cos_intensity(phase.data(), intensity.data(), n, 2.0, 2.0);
    return intensity;
}

BeatSpectrum estimate_spectrum(std::span<const double> series, double sample_rate_hz,
                               std::size_t segment_length, double overlap) {
    if (!(sample_rate_hz > 0.0)) throw DataError("estimate_spectrum: bad sample rate");
    if (segment_length < 8 || segment_length > series.size())
        throw DataError("estimate_spectrum: degenerate segmentation");
    if (!(overlap >= 0.0) || !(overlap < 1.0))
        throw DataError("estimate_spectrum: overlap must be in [0, 1)");

    const std::size_t nseg = segment_length;
    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround((1.0 - overlap) * nseg)));

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double variance = 0.0;
    for (double v : series) variance += (v - mean) * (v - mean);
    variance /= static_cast<double>(series.size());

    // Periodic Hann window.
    std::vector<double> window(nseg);
    double wsum = 0.0, w2sum = 0.0;
    for (std::size_t k = 0; k < nseg; ++k) {
        window[k] = 0.5 * (1.0 - std::cos(2.0 * kPi * k / nseg));
        wsum += window[k];
        w2sum += window[k] * window[k];
    }

    const std::size_t nbins = nseg / 2 + 1;
    std::vector<double> psd(nbins, 0.0), buf(nseg);
    std::vector<std::complex<double>> out(nbins);

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(nseg), buf.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_ESTIMATE);
    }
    if (!plan) throw NumericalError("estimate_spectrum: FFT plan failed");

    int segments = 0;
    for (std::size_t start = 0; start + nseg <= series.size(); start += hop) {
        for (std::size_t k = 0; k < nseg; ++k) buf[k] = (series[start + k] - mean) * window[k];
        fftw_execute(plan);
        for (std::size_t k = 0; k < nbins; ++k) {
            const double one_sided = (k == 0 || (nseg % 2 == 0 && k == nbins - 1)) ? 1.0 : 2.0;
            psd[k] += one_sided * std::norm(out[k]);
        }
        ++segments;
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
    if (segments == 0) throw DataError("estimate_spectrum: no full segments");

    const double norm = 1.0 / (sample_rate_hz * w2sum * segments);
    BeatSpectrum spec;
    spec.freq_hz.resize(nbins);
    spec.psd.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k) {
        spec.freq_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(nseg);
        spec.psd[k] = psd[k] * norm;
    }
    spec.resolution_bw_hz = sample_rate_hz * w2sum / (wsum * wsum);  // ENBW
    spec.sample_rate_hz = sample_rate_hz;
    spec.segments_averaged = segments;
    spec.time_domain_variance = variance;
    return spec;
}

double spectrum_total_power(const BeatSpectrum& spectrum) {
    if (spectrum.freq_hz.size() < 2) throw DataError("spectrum_total_power: empty spectrum");
    const double df = spectrum.freq_hz[1] - spectrum.freq_hz[0];
    double total = 0.0;
    for (double v : spectrum.psd) total += v;
    return total * df;
}

LineFit fit_gaussian_line(const BeatSpectrum& spectrum) {
    const std::size_t n = spectrum.psd.size();
    if (n < 16) throw DataError("fit_gaussian_line: spectrum too short");
    const double df = spectrum.freq_hz[1] - spectrum.freq_hz[0];

    std::vector<double> sorted = spectrum.psd;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];

    std::size_t peak = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (spectrum.psd[k] > spectrum.psd[peak]) peak = k;
    const double peak_val = spectrum.psd[peak];
    if (!(peak_val > 3.0 * median))
        throw NumericalError("fit_gaussian_line: no dominant peak above 3x median");

    // Rough width from the half-maximum crossings around the peak. A line
    // folded at dc clips the left crossing, so take the wider of the two
    // half-widths.
    const double half_level = median + 0.5 * (peak_val - median);
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && spectrum.psd[lo] > half_level) --lo;
    while (hi + 1 < n && spectrum.psd[hi] > half_level) ++hi;
    const double hwhm =
        std::max({static_cast<double>(hi - peak), static_cast<double>(peak - lo), 1.0}) * df;
    const double w0 = 2.0 * hwhm / 1.1774;  // Gaussian: FWHM = w_e2 * sqrt(2 ln2)

    // Dominance: no comparable second peak outside the fitted neighborhood.
    const double guard = 5.0 * w0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (std::abs(spectrum.freq_hz[k] - spectrum.freq_hz[peak]) <= guard) continue;
        if (spectrum.psd[k] > 0.5 * peak_val && spectrum.psd[k] >= spectrum.psd[k - 1] &&
            spectrum.psd[k] >= spectrum.psd[k + 1])
            throw NumericalError("fit_gaussian_line: no dominant peak (two comparable peaks)");
    }

    const double f_lo = spectrum.freq_hz[peak] - 3.0 * w0;
    const double f_hi = spectrum.freq_hz[peak] + 3.0 * w0;
    std::vector<double> fs, ys;
    for (std::size_t k = 0; k < n; ++k) {
        if (spectrum.freq_hz[k] >= f_lo && spectrum.freq_hz[k] <= f_hi) {
            fs.push_back(spectrum.freq_hz[k]);
            ys.push_back(spectrum.psd[k]);
        }
    }
    if (fs.size() < 6) throw DataError("fit_gaussian_line: too few bins around the peak");

    // Parameters: A, c, w, b.
    std::vector<double> p0 = {peak_val - median, spectrum.freq_hz[peak], w0, median};
    const auto residual = [&](const std::vector<double>& p, double* r, double* jac) {
        const double A = p[0], c = p[1], w = p[2], b = p[3];
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const double u = fs[i] - c;
            const double e = std::exp(-2.0 * u * u / (w * w));
            r[i] = A * e + b - ys[i];
            if (jac) {
                jac[i * 4 + 0] = e;
                jac[i * 4 + 1] = A * e * 4.0 * u / (w * w);
                jac[i * 4 + 2] = A * e * 4.0 * u * u / (w * w * w);
                jac[i * 4 + 3] = 1.0;
            }
        }
    };

    levmar::Options opts;
    opts.scale_covariance_by_s2 = true;
    opts.param_scale = {peak_val, w0, w0, peak_val};
    const auto res =
        levmar::fit(residual, p0, {true, true, true, true}, fs.size(), opts);
    if (!res.converged) throw NumericalError("fit_gaussian_line: fit did not converge");

    LineFit fit;
    fit.amplitude = res.params[0];
    fit.center_hz = res.params[1];
    fit.halfwidth_e2_hz = std::abs(res.params[2]);
    fit.offset = res.params[3];
    fit.center_err_hz = std::sqrt(std::max(res.covariance[1 * 4 + 1], 0.0));
    fit.halfwidth_err_hz = std::sqrt(std::max(res.covariance[2 * 4 + 2], 0.0));
    fit.covariance = res.covariance;
    fit.iterations = res.iterations;
    if (!(fit.halfwidth_e2_hz > 0.0))
        throw NumericalError("fit_gaussian_line: degenerate width");
    return fit;
}

}  // namespace homspec::beat
