#pragma once

// Small damped Gauss-Newton (Levenberg-Marquardt) engine for the handful of
// low-dimensional weighted least-squares fits in this project. Dense normal
// equations with Cholesky solves; parameters can be frozen with a mask.

#include <functional>
#include <vector>

namespace homspec::levmar {

// Fills residuals r (size m) and, when jac != nullptr, the row-major m x n
// Jacobian d r_i / d p_j. Residuals are caller-weighted.
using ResidualFn = std::function<void(const std::vector<double>& p, double* r, double* jac)>;

struct Options {
    int max_iterations = 200;
    double step_tol = 1e-8;      // convergence: max relative parameter step
    double lambda0 = 1e-3;
    // Scale floor per parameter so "relative step" stays meaningful near 0.
    std::vector<double> param_scale;
    // Scale the covariance by chi2/dof (unweighted fits); off for
    // counting-statistics weights where (J^T J)^-1 is already the covariance.
    bool scale_covariance_by_s2 = false;
};

struct Result {
    std::vector<double> params;
    std::vector<double> covariance;  // n x n row-major over all params (0 for fixed)
    double chi2 = 0.0;
    double chi2_per_dof = 0.0;
    int iterations = 0;
    bool converged = false;
    bool singular_covariance = false;
};

Result fit(const ResidualFn& fn, std::vector<double> p0, const std::vector<bool>& free_mask,
           std::size_t m, const Options& opts = {});

}  // namespace homspec::levmar
