#pragma once

// Fit the quantum-beat model to coincidence scans and compare the recovered
// parameters against the classical beat-spectrum oracle.
//
// The fitted model is the nuisance-extended coincidence curve on raw counts,
//   y(tau) = B * [1 - V exp(-(tau-tc)^2/(2 sigma^2)) cos((tau-tc) delta + phi)],
// with Poisson weights (variance = observed counts, floored at 1). V is the
// dip visibility directly; the normalized two-source model corresponds to
// (B = baseline, V = 1/2).

#include <optional>
#include <span>
#include <vector>

#include "homspec/simulator.hpp"

namespace homspec::est {

struct InitialGuess {
    double baseline = 0.0;     // counts
    double visibility = 0.5;
    double sigma_s = 0.0;
    double delta_rad_s = 0.0;
    double center_s = 0.0;
    double phase_rad = 0.0;
};

struct FitResult {
    double delta_rad_s = 0.0;
    double sigma_s = 0.0;
    double visibility = 0.0;
    double baseline = 0.0;    // counts
    double center_s = 0.0;
    double phase_rad = 0.0;
    // 6x6 row-major over (B, V, sigma, delta, tc, phi); zero rows for fixed.
    std::vector<double> covariance;
    double delta_err_rad_s = 0.0;
    double sigma_err_s = 0.0;
    double visibility_err = 0.0;
    double chi2_per_dof = 0.0;
    bool converged = false;
    bool singular_covariance = false;
    int iterations = 0;
};

struct FitOptions {
    // Constrain to the pure two-source model: B fixed to the scan baseline
    // and V fixed to 1/2; only shape parameters float.
    bool pure_model = false;
    int max_iterations = 200;
};

// Data-driven starting point: beat frequency from the dominant nonzero DFT
// peak of (baseline - counts), envelope width from the RMS delay spread,
// depth from the peak deviation. Throws DataError("nothing to fit") on flat
// scans. Non-uniform grids are resampled internally by linear interpolation.
InitialGuess initial_guess(const sim::CoincidenceScan& scan);

// Weighted nonlinear least squares (damped Gauss-Newton, relative step
// tolerance 1e-8, iteration cap per options). Non-convergence is reported in
// the result, not thrown. Requires a normalized scan with at least 8 points.
FitResult fit_hom_model(const sim::CoincidenceScan& scan,
                        std::optional<InitialGuess> init = std::nullopt,
                        const FitOptions& options = {});

// |a - b| / ((a + b) / 2). Defined as 0 when both are exactly zero.
double relative_error(double a, double b);

struct ComparisonRow {
    double delta_hom_hz = 0.0;
    double delta_esa_hz = 0.0;
    double width_hom_hz = 0.0;  // 1/(pi sigma_hat), half-width at 1/e^2
    double width_esa_hz = 0.0;
    double rel_err_delta = 0.0;  // filled by correlate_techniques
    double rel_err_width = 0.0;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    double slope = 0.0;
    double intercept_hz = 0.0;
    double slope_err = 0.0;
    double intercept_err_hz = 0.0;
};

// Ordinary least squares of delta_hom against delta_esa plus per-row relative
// errors. Requires at least 3 rows.
ComparisonReport correlate_techniques(std::span<const ComparisonRow> rows);

// Width conversion: envelope sigma to the beat line's half-width at 1/e^2.
inline double sigma_to_halfwidth_e2_hz(double sigma_s) {
    return 1.0 / (3.14159265358979323846 * sigma_s);
}

}  // namespace homspec::est
