#pragma once

// Classical validation arm: synthesize the bright-field heterodyne beat of
// two frequency-displaced sources with Gaussian mutual coherence, estimate
// its spectrum with an averaged periodogram, and fit a Gaussian line. The
// digital stand-in for the electrical-spectrum-analyzer measurement.

#include <cstdint>
#include <span>
#include <vector>

namespace homspec::beat {

struct BeatSpectrum {
    std::vector<double> freq_hz;  // uniform, increasing, one-sided
    std::vector<double> psd;      // arbitrary units per Hz
    double resolution_bw_hz = 0.0;
    double sample_rate_hz = 0.0;
    int segments_averaged = 0;
    double time_domain_variance = 0.0;  // of the detrended series, for Parseval checks
};

struct LineFit {
    double center_hz = 0.0;
    double halfwidth_e2_hz = 0.0;  // half-width at 1/e^2 of the fitted Gaussian
    double amplitude = 0.0;
    double offset = 0.0;
    double center_err_hz = 0.0;
    double halfwidth_err_hz = 0.0;
    std::vector<double> covariance;  // 4x4 over (amplitude, center, halfwidth, offset)
    int iterations = 0;
};

// Correlation time of the synthesized frequency jitter, in units of sigma.
// Slow against the coherence decay (keeps the line Gaussian to well under a
// percent) but fast enough that a record of many correlation times samples
// the whole line. Line-parameter precision scales as 1/sqrt(duration / (this * sigma)).
inline constexpr double jitter_correlation_sigmas = 64.0;

// Detected beat intensity of two unit fields offset by delta, each carrying
// frozen-plus-drifting frequency jitter shaped so the per-field coherence is
// exp(-tau^2/(4 sigma^2)) (Gaussian line). sigma_s may be +infinity for a
// noiseless tone. Requires sample_rate > 4 (delta/2pi + 2/sigma).
std::vector<double> synthesize_beat(double delta_rad_s, double sigma_s,
                                    double duration_s, double sample_rate_hz,
                                    std::uint64_t seed);

// Welch averaged periodogram: Hann window, mean removal, one-sided density
// normalization. resolution_bw is the window's equivalent noise bandwidth.
BeatSpectrum estimate_spectrum(std::span<const double> series, double sample_rate_hz,
                               std::size_t segment_length, double overlap = 0.5);

// Least-squares Gaussian-plus-offset fit around the dominant peak:
//   A exp(-2 (f - c)^2 / w^2) + b.
// Requires one dominant peak above 3x the median PSD.
LineFit fit_gaussian_line(const BeatSpectrum& spectrum);

// Sum(psd) * df of the one-sided spectrum; equals the time-domain variance
// for a stationary input up to segment-averaging fluctuations.
double spectrum_total_power(const BeatSpectrum& spectrum);

}  // namespace homspec::beat
