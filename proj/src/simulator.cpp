#include "homspec/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "homspec/errors.hpp"
#include "homspec/kernels.hpp"
#include "homspec/rng.hpp"

namespace homspec::sim {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2Pi = 2.50662827463100050242;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

// Engine (a): scan-wide constants for the rejection sampler.
//
// The (1,1) acceptance weight g(tau, dtau) integrates over a uniform dtau
// window of width W to W_norm * 2 * P11_shape(tau), with W_norm = sigma*sqrt(2pi).
// Dividing by the global supremum M = 2 (attained at dtau = +-tau with the
// beat cosine at -1) and thinning by the N-detector efficiency makes the
// per-trial coincidence probability
//     (1,1):      lambda * eta_N * P11_shape(tau),
//     (2,0)/(0,2): lambda * eta_N * 1/2,
// with the same lambda = 2 sigma sqrt(2pi) / (W * M) for every class, so the
// class ratio of the final model is preserved exactly. The window spans the
// kernel support (peaks at dtau = +-tau, width sigma) with 6 sigma margin:
// truncation below 2e-8.
struct KernelEngineConstants {
    double window_halfwidth;
    double lambda;
    double accept_flat;   // lambda * eta_N / 2
    double thr_scale;     // accept (1,1) iff u * thr_scale < g; thr_scale = M / eta_N
};

KernelEngineConstants kernel_engine_constants(const ScanConfig& cfg) {
    double tau_max = 0.0;
    for (double t : cfg.delay_grid_s) tau_max = std::max(tau_max, std::abs(t));
    const double sigma = cfg.source.sigma_s;
    const double half = tau_max + cfg.detector_n.gate_width_s + 6.0 * sigma;
    const double w = 2.0 * half;
    KernelEngineConstants k;
    k.window_halfwidth = half;
    k.lambda = 2.0 * sigma * kSqrt2Pi / (w * 2.0);
    k.accept_flat = 0.5 * k.lambda * cfg.detector_n.efficiency;
    k.thr_scale = 2.0 / cfg.detector_n.efficiency;
    return k;
}

std::int64_t run_point_kernel(const ScanConfig& cfg, const KernelEngineConstants& kc,
                              std::size_t point, double tau) {
    CounterRng rng(cfg.rng_seed, rng_stream::scan_point, point);
    const double sigma = cfg.source.sigma_s;
    const double delta = cfg.source.delta_rad_s;
    const double tg = cfg.detector_n.gate_width_s;
    const double dark_n = cfg.detector_n.dark_count_prob;
    const bool smear = tg > 0.0;
    const bool triangular = cfg.gate_kernel == stats::GateKernel::triangular;
    const double one_minus_cos_fixed = 1.0 - std::cos(tau * delta);

    std::int64_t coinc = 0;

    if (dark_n <= 0.0) {
        // Fast path: batch the kernel evaluations.
        constexpr std::size_t batch = 2048;
        std::vector<double> dt_buf(batch), thr_buf(batch), tau_buf(batch), g_buf(batch);
        std::size_t fill = 0;
        const auto flush = [&] {
            if (fill == 0) return;
            if (smear) {
                kernels::kernel11_weight_tau(dt_buf.data(), tau_buf.data(), g_buf.data(),
                                             fill, delta, sigma);
            } else {
                kernels::kernel11_weight(dt_buf.data(), g_buf.data(), fill, tau,
                                         one_minus_cos_fixed, sigma);
            }
            for (std::size_t j = 0; j < fill; ++j)
                if (thr_buf[j] < g_buf[j]) ++coinc;
            fill = 0;
        };
        for (std::int64_t t = 0; t < cfg.trials_per_point; ++t) {
            if (rng.next_double() < 0.5) {  // (1,1): conditional weight 1/2
                const double dtau = (rng.next_double() - 0.5) * 2.0 * kc.window_halfwidth;
                double tau_eff = tau;
                if (smear) {
                    tau_eff += triangular
                                   ? (rng.next_double() - rng.next_double()) * tg
                                   : (rng.next_double() - 0.5) * tg;
                }
                const double thr = rng.next_double() * kc.thr_scale;
                if (thr < 2.0) {  // g <= 2 always; cheap pre-reject
                    dt_buf[fill] = dtau;
                    tau_buf[fill] = tau_eff;
                    thr_buf[fill] = thr;
                    if (++fill == batch) flush();
                }
            } else {  // (2,0) or (0,2): flat 1/2 acceptance
                if (rng.next_double() < kc.accept_flat) ++coinc;
            }
        }
        flush();
        return coinc;
    }

    // Dark-count path: per-trial decisions so the OR with the dark Bernoulli
    // stays per gate.
    for (std::int64_t t = 0; t < cfg.trials_per_point; ++t) {
        bool sig = false;
        if (rng.next_double() < 0.5) {
            const double dtau = (rng.next_double() - 0.5) * 2.0 * kc.window_halfwidth;
            double tau_eff = tau;
            if (smear) {
                tau_eff += triangular ? (rng.next_double() - rng.next_double()) * tg
                                      : (rng.next_double() - 0.5) * tg;
            }
            const double thr = rng.next_double() * kc.thr_scale;
            if (thr < 2.0) {
                double g;
                kernels::kernel11_weight_tau(&dtau, &tau_eff, &g, 1, delta, sigma);
                sig = thr < g;
            }
        } else {
            sig = rng.next_double() < kc.accept_flat;
        }
        if (sig || rng.next_double() < dark_n) ++coinc;
    }
    return coinc;
}

std::int64_t run_point_field(const ScanConfig& cfg, std::size_t point, double tau) {
    CounterRng rng(cfg.rng_seed, rng_stream::scan_point, point);
    const double mu = cfg.source.mu;
    const double sigma = cfg.source.sigma_s;
    const double delta = cfg.source.delta_rad_s;
    const double eta_m = cfg.detector_m.efficiency;
    const double eta_n = cfg.detector_n.efficiency;
    const double dark_m = cfg.detector_m.dark_count_prob;
    const double dark_n = cfg.detector_n.dark_count_prob;
    const double tg_m = cfg.detector_m.gate_width_s;
    const double tg_n = cfg.detector_n.gate_width_s;
    // Frozen frequency jitter: each source's field coherence is
    // exp(-t^2/(4 sigma^2)), so the difference jitter has std 1/sigma and the
    // coincidence envelope squares to exp(-t^2/(2 sigma^2)).
    const double jitter_std = 1.0 / sigma;
    const double p_herald_sup = 1.0 - (1.0 - dark_m) * std::exp(-2.0 * eta_m * mu);

    std::int64_t coinc = 0;
    for (std::int64_t t = 0; t < cfg.trials_per_point; ++t) {
        double chi0, omega, gate_m;
        // Rejection-sample field configurations conditioned on an M click.
        for (;;) {
            chi0 = 2.0 * kPi * rng.next_double();
            omega = delta + jitter_std * rng.next_gaussian();
            gate_m = sinc(0.5 * omega * tg_m);
            const double s_m = gate_m * std::sin(chi0 - 0.5 * omega * tg_m);
            const double p_m = 1.0 - (1.0 - dark_m) * std::exp(-eta_m * mu * (1.0 - s_m));
            if (rng.next_double() * p_herald_sup < p_m) break;
        }
        const double gate_n = sinc(0.5 * omega * tg_n);
        const double s_n = gate_n * std::sin(chi0 - omega * (tau + 0.5 * tg_n));
        const double p_n = 1.0 - (1.0 - dark_n) * std::exp(-eta_n * mu * (1.0 + s_n));
        if (rng.next_double() < p_n) ++coinc;
    }
    return coinc;
}

}  // namespace

void DetectorSpec::validate() const {
    // efficiency == 0 is tolerated here so a dark-count-only detector can be
    // modeled in the herald stream; simulate_scan requires > 0.
    if (!(efficiency >= 0.0) || !(efficiency <= 1.0))
        throw DataError("DetectorSpec: efficiency must be in [0, 1]");
    if (!(gate_width_s > 0.0)) throw DataError("DetectorSpec: gate width must be positive");
    if (!(gate_rate_hz > 0.0)) throw DataError("DetectorSpec: gate rate must be positive");
    if (!(dark_count_prob >= 0.0) || !(dark_count_prob < 1.0))
        throw DataError("DetectorSpec: dark count probability must be in [0, 1)");
}

void FmEmulationSpec::validate() const {
    if (!(mod_depth_hz >= 0.0)) throw DataError("FmEmulationSpec: modulation depth must be >= 0");
    if (!(period_s > 0.0)) throw DataError("FmEmulationSpec: period must be positive");
    if (!(fiber_delay_s > 0.0)) throw DataError("FmEmulationSpec: fiber delay must be positive");
    if (!(am_gate_width_s > 0.0) || !(am_gate_width_s < 0.5 * period_s))
        throw DataError(
            "FmEmulationSpec: AM gate must be positive and fit in half an FM period");
}

double delta_from_fm(const FmEmulationSpec& spec) {
    spec.validate();
    return 2.0 * kPi * (2.0 * spec.mod_depth_hz * spec.fiber_delay_s / spec.period_s);
}

double fiber_delay_s(double length_m, double group_index) {
    if (!(length_m > 0.0) || !(group_index >= 1.0))
        throw DataError("fiber_delay_s: invalid fiber parameters");
    return group_index * length_m / 299792458.0;
}

void ScanConfig::validate() const {
    if (delay_grid_s.empty()) throw DataError("ScanConfig: empty delay grid");
    for (std::size_t i = 1; i < delay_grid_s.size(); ++i)
        if (!(delay_grid_s[i] > delay_grid_s[i - 1]))
            throw DataError("ScanConfig: delay grid must be strictly increasing");
    if (trials_per_point <= 0) throw DataError("ScanConfig: trials_per_point must be positive");
    source.validate();
    detector_m.validate();
    detector_n.validate();
    if (!(detector_m.efficiency > 0.0) || !(detector_n.efficiency > 0.0))
        throw DataError("ScanConfig: detector efficiency must be positive for a scan");
}

CoincidenceScan simulate_scan(const ScanConfig& config) {
    config.validate();
    const std::size_t n = config.delay_grid_s.size();

    CoincidenceScan scan;
    scan.config = config;
    scan.delay_s = config.delay_grid_s;
    scan.coincidences.resize(n);
    scan.heralds.assign(n, config.trials_per_point);
    scan.truncation_warning = config.source.truncation_warning();

    const KernelEngineConstants kc = kernel_engine_constants(config);
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = config.delay_grid_s[i];
        scan.coincidences[i] = config.engine == Engine::two_photon_kernel
                                   ? run_point_kernel(config, kc, i, tau)
                                   : run_point_field(config, i, tau);
    }
    return scan;
}

double estimate_baseline(CoincidenceScan& scan, double window_min_abs_tau_s,
                         double sigma_hint_s) {
    if (!(sigma_hint_s > 0.0)) throw DataError("estimate_baseline: sigma hint must be positive");
    if (!(window_min_abs_tau_s > 4.0 * sigma_hint_s))
        throw DataError(
            "estimate_baseline: window overlaps the dip region (need |tau| > 4 sigma)");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < scan.delay_s.size(); ++i) {
        if (std::abs(scan.delay_s[i]) >= window_min_abs_tau_s) {
            sum += static_cast<double>(scan.coincidences[i]);
            ++count;
        }
    }
    if (count < 5) throw DataError("estimate_baseline: window contains fewer than 5 points");
    const double baseline = sum / static_cast<double>(count);
    if (!(baseline > 0.0)) throw DataError("estimate_baseline: zero baseline, cannot normalize");

    scan.baseline_estimate = baseline;
    scan.baseline_stderr = std::sqrt(sum) / static_cast<double>(count);  // pooled Poisson
    scan.baseline_window_min_abs_tau_s = window_min_abs_tau_s;

    const double var_b = scan.baseline_stderr * scan.baseline_stderr;
    scan.normalized.resize(scan.delay_s.size());
    scan.norm_err.resize(scan.delay_s.size());
    for (std::size_t i = 0; i < scan.delay_s.size(); ++i) {
        const double c = static_cast<double>(scan.coincidences[i]);
        scan.normalized[i] = c / baseline;
        scan.norm_err[i] =
            std::sqrt(std::max(c, 1.0) + (c / baseline) * (c / baseline) * var_b) / baseline;
    }
    return baseline;
}

double scan_visibility(const CoincidenceScan& scan) {
    if (!scan.is_normalized()) throw DataError("scan_visibility: scan is not normalized");
    const double min_norm = *std::min_element(scan.normalized.begin(), scan.normalized.end());
    return stats::visibility(1.0, min_norm);
}

std::int64_t heralded_gate_stream(const DetectorSpec& detector, double mu_at_m,
                                  double duration_s, std::uint64_t seed) {
    detector.validate();
    if (!(duration_s > 0.0)) throw DataError("heralded_gate_stream: duration must be positive");
    if (!(mu_at_m >= 0.0)) throw DataError("heralded_gate_stream: mu must be >= 0");
    const auto gates =
        static_cast<std::int64_t>(std::floor(duration_s * detector.gate_rate_hz));
    const double p =
        1.0 - (1.0 - detector.dark_count_prob) * std::exp(-detector.efficiency * mu_at_m);
    if (gates <= 0 || p <= 0.0) return 0;

    CounterRng rng(seed, rng_stream::herald, 0);
    if (gates <= (1 << 24)) {
        std::int64_t clicks = 0;
        for (std::int64_t g = 0; g < gates; ++g)
            if (rng.next_double() < p) ++clicks;
        return clicks;
    }
    // Large gate counts: normal approximation to the binomial (documented;
    // exact sampling is not worth 1e9 Bernoulli draws here).
    const double mean = static_cast<double>(gates) * p;
    const double sd = std::sqrt(mean * (1.0 - p));
    const double draw = mean + sd * rng.next_gaussian();
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::llround(draw)));
}

}  // namespace homspec::sim
