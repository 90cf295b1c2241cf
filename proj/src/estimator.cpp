#include "homspec/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "homspec/errors.hpp"
#include "homspec/kernels.hpp"
#include "homspec/levmar.hpp"

namespace homspec::est {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct UniformSignal {
    std::vector<double> tau;   // uniform grid
    std::vector<double> dip;   // baseline - counts, in baseline units
    double step;
};

// Resample (tau, 1 - normalized) onto a uniform grid when needed.
UniformSignal uniform_dip(const sim::CoincidenceScan& scan) {
    const auto& t = scan.delay_s;
    const std::size_t n = t.size();
    const double span = t.back() - t.front();
    const double step = span / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs((t[i] - t[i - 1]) - step) > 1e-9 * std::abs(step)) uniform = false;

    UniformSignal s;
    s.step = step;
    s.tau.resize(n);
    s.dip.resize(n);
    if (uniform) {
        for (std::size_t i = 0; i < n; ++i) {
            s.tau[i] = t[i];
            s.dip[i] = 1.0 - scan.normalized[i];
        }
        return s;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x = t.front() + step * static_cast<double>(i);
        const auto hi_it = std::upper_bound(t.begin(), t.end(), x);
        std::size_t hi = std::min<std::size_t>(std::distance(t.begin(), hi_it), n - 1);
        const std::size_t lo = hi > 0 ? hi - 1 : 0;
        const double f =
            t[hi] == t[lo] ? 0.0 : std::clamp((x - t[lo]) / (t[hi] - t[lo]), 0.0, 1.0);
        s.tau[i] = x;
        s.dip[i] = (1.0 - scan.normalized[lo]) * (1.0 - f) + (1.0 - scan.normalized[hi]) * f;
    }
    return s;
}

}  // namespace

InitialGuess initial_guess(const sim::CoincidenceScan& scan) {
    if (!scan.is_normalized()) throw DataError("initial_guess: scan is not normalized");
    const std::size_t n = scan.delay_s.size();
    if (n < 8) throw DataError("initial_guess: need at least 8 delay points");

    const UniformSignal sig = uniform_dip(scan);

    double max_dev = 0.0;
    for (double d : sig.dip) max_dev = std::max(max_dev, std::abs(d));
    std::vector<double> errs = scan.norm_err;
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    const double median_err = errs.empty() ? 0.0 : errs[errs.size() / 2];
    // The maximum of ~n noise-only deviations sits near 3 sigma; 4.5 flags
    // genuinely flat scans without tripping on shallow structure.
    if (max_dev < std::max(4.5 * median_err, 1e-12))
        throw DataError("initial_guess: nothing to fit (flat scan)");

    // A beat is present exactly when the scan rises above the baseline
    // (the model ranges over [1/2, 3/2] of it); a plain dip never does.
    double min_dip = 0.0;
    for (double d : sig.dip) min_dip = std::min(min_dip, d);
    const bool beat_present =
        min_dip < -std::max(4.5 * median_err, 1e-9 * max_dev);

    // Beat frequency from the dominant nonzero DFT bin of the dip; ties go
    // to the lower frequency.
    double delta0 = 0.0;
    if (beat_present) {
        const std::size_t half = n / 2;
        std::size_t k_star = 1;
        double best = -1.0;
        for (std::size_t k = 1; k <= half; ++k) {
            double re = 0.0, im = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double ang =
                    2.0 * kPi * static_cast<double>(k * i) / static_cast<double>(n);
                re += sig.dip[i] * std::cos(ang);
                im -= sig.dip[i] * std::sin(ang);
            }
            const double mag = std::hypot(re, im);
            if (mag > best) {
                best = mag;
                k_star = k;
            }
        }
        delta0 =
            2.0 * kPi * static_cast<double>(k_star) / (static_cast<double>(n) * sig.step);
    }

    // Envelope scale from the RMS delay width of |dip|.
    double wsum = 0.0, mean_tau = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        wsum += std::abs(sig.dip[i]);
        mean_tau += std::abs(sig.dip[i]) * sig.tau[i];
    }
    mean_tau /= wsum;
    double var_tau = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        var_tau += std::abs(sig.dip[i]) * (sig.tau[i] - mean_tau) * (sig.tau[i] - mean_tau);
    var_tau /= wsum;

    InitialGuess g;
    g.baseline = scan.baseline_estimate;
    g.visibility = std::clamp(max_dev, 0.05, 1.0);
    g.sigma_s = std::sqrt(std::max(var_tau, sig.step * sig.step));
    g.delta_rad_s = delta0;
    g.center_s = mean_tau;
    g.phase_rad = 0.0;
    return g;
}

FitResult fit_hom_model(const sim::CoincidenceScan& scan, std::optional<InitialGuess> init,
                        const FitOptions& options) {
    if (!scan.is_normalized()) throw DataError("fit_hom_model: scan is not normalized");
    const std::size_t n = scan.delay_s.size();
    if (n < 8) throw DataError("fit_hom_model: need at least 8 delay points");
    if (std::all_of(scan.coincidences.begin(), scan.coincidences.end(),
                    [](std::int64_t c) { return c == 0; }))
        throw DataError("fit_hom_model: all-zero counts");

    const InitialGuess g = init ? *init : initial_guess(scan);

    // Weights: Poisson, variance = counts floored at 1.
    std::vector<double> inv_sigma(n), counts(n);
    for (std::size_t i = 0; i < n; ++i) {
        counts[i] = static_cast<double>(scan.coincidences[i]);
        inv_sigma[i] = 1.0 / std::sqrt(std::max(counts[i], 1.0));
    }

    // Parameters: (B, V, sigma, delta, tc, phi).
    std::vector<double> p0 = {g.baseline, g.visibility, g.sigma_s,
                              g.delta_rad_s, g.center_s, g.phase_rad};
    std::vector<bool> free_mask = {true, true, true, true, true, true};
    if (options.pure_model) {
        p0[0] = scan.baseline_estimate;
        p0[1] = 0.5;
        free_mask[0] = free_mask[1] = false;
    }
    // With no detected beat the phase multiplies an identically-zero
    // derivative and only creates a V-phi degeneracy; pin it.
    if (g.delta_rad_s == 0.0) free_mask[5] = false;

    const auto& tau = scan.delay_s;
    std::vector<double> env(n), cosv(n), sinv(n);
    const auto residual = [&](const std::vector<double>& p, double* r, double* jac) {
        const double B = p[0], V = p[1], sg = p[2], dl = p[3], tc = p[4], ph = p[5];
        kernels::env_cos_sin(tau.data(), n, sg, dl, tc, ph, env.data(), cosv.data(),
                             sinv.data());
        for (std::size_t i = 0; i < n; ++i) {
            const double u = tau[i] - tc;
            const double beat = env[i] * cosv[i];
            const double f = B * (1.0 - V * beat);
            r[i] = (f - counts[i]) * inv_sigma[i];
            if (jac) {
                const double w = inv_sigma[i];
                const double s2 = sg * sg;
                jac[i * 6 + 0] = (1.0 - V * beat) * w;
                jac[i * 6 + 1] = -B * beat * w;
                jac[i * 6 + 2] = -B * V * beat * u * u / (s2 * sg) * w;
                jac[i * 6 + 3] = B * V * env[i] * sinv[i] * u * w;
                jac[i * 6 + 4] = -B * V * env[i] * (u * cosv[i] / s2 + dl * sinv[i]) * w;
                jac[i * 6 + 5] = B * V * env[i] * sinv[i] * w;
            }
        }
    };

    std::size_t n_free = 0;
    for (bool f : free_mask) n_free += f;
    if (n < n_free) throw DataError("fit_hom_model: fewer points than free parameters");

    levmar::Options lopts;
    lopts.max_iterations = options.max_iterations;
    lopts.step_tol = 1e-8;
    const double span = tau.back() - tau.front();
    lopts.param_scale = {g.baseline, 0.5, g.sigma_s, 2.0 * kPi / span, g.sigma_s, 1.0};

    const auto res = levmar::fit(residual, p0, free_mask, n, lopts);

    FitResult out;
    out.baseline = res.params[0];
    out.visibility = res.params[1];
    out.sigma_s = std::abs(res.params[2]);
    out.delta_rad_s = std::abs(res.params[3]);  // the sign is unobservable
    out.center_s = res.params[4];
    out.phase_rad = res.params[5];
    out.covariance = res.covariance;
    out.sigma_err_s = std::sqrt(std::max(res.covariance[2 * 6 + 2], 0.0));
    out.delta_err_rad_s = std::sqrt(std::max(res.covariance[3 * 6 + 3], 0.0));
    out.visibility_err = std::sqrt(std::max(res.covariance[1 * 6 + 1], 0.0));
    out.chi2_per_dof = res.chi2_per_dof;
    out.converged = res.converged;
    out.singular_covariance = res.singular_covariance;
    out.iterations = res.iterations;
    return out;
}

double relative_error(double a, double b) {
    if (a == 0.0 && b == 0.0) return 0.0;
    const double mean = 0.5 * (a + b);
    if (mean == 0.0) throw DataError("relative_error: degenerate mean (a + b = 0)");
    return std::abs(a - b) / std::abs(mean);
}

ComparisonReport correlate_techniques(std::span<const ComparisonRow> rows) {
    if (rows.size() < 3) throw DataError("correlate_techniques: need at least 3 settings");
    ComparisonReport rep;
    rep.rows.assign(rows.begin(), rows.end());
    for (auto& row : rep.rows) {
        row.rel_err_delta = relative_error(row.delta_hom_hz, row.delta_esa_hz);
        row.rel_err_width = relative_error(row.width_hom_hz, row.width_esa_hz);
    }

    const double n = static_cast<double>(rows.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& r : rows) {
        sx += r.delta_esa_hz;
        sy += r.delta_hom_hz;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& r : rows) {
        sxx += (r.delta_esa_hz - mx) * (r.delta_esa_hz - mx);
        sxy += (r.delta_esa_hz - mx) * (r.delta_hom_hz - my);
    }
    if (!(sxx > 0.0)) throw DataError("correlate_techniques: degenerate abscissa");
    rep.slope = sxy / sxx;
    rep.intercept_hz = my - rep.slope * mx;

    double sse = 0.0;
    for (const auto& r : rows) {
        const double e = r.delta_hom_hz - (rep.intercept_hz + rep.slope * r.delta_esa_hz);
        sse += e * e;
    }
    const double s2 = sse / std::max(n - 2.0, 1.0);
    rep.slope_err = std::sqrt(s2 / sxx);
    rep.intercept_err_hz = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    return rep;
}

}  // namespace homspec::est
