#include "homspec/levmar.hpp"

#include <cmath>
#include <cstddef>

#include "homspec/errors.hpp"

namespace homspec::levmar {

namespace {

// Cholesky solve of A x = b for a symmetric positive-definite n x n matrix
// (row-major, overwritten). Returns false if a pivot collapses.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (!(s > 0.0)) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
        x[ii] = s / a[ii * n + ii];
    }
    return true;
}

bool cholesky_inverse(const std::vector<double>& a, std::size_t n,
                      std::vector<double>& inv) {
    inv.assign(n * n, 0.0);
    std::vector<double> e(n, 0.0), col;
    for (std::size_t j = 0; j < n; ++j) {
        e.assign(n, 0.0);
        e[j] = 1.0;
        if (!cholesky_solve(a, e, n, col)) return false;
        for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    }
    return true;
}

}  // namespace

Result fit(const ResidualFn& fn, std::vector<double> p0, const std::vector<bool>& free_mask,
           std::size_t m, const Options& opts) {
    const std::size_t n = p0.size();
    if (free_mask.size() != n) throw DataError("levmar: mask size mismatch");
    std::vector<std::size_t> free_idx;
    for (std::size_t j = 0; j < n; ++j)
        if (free_mask[j]) free_idx.push_back(j);
    const std::size_t nf = free_idx.size();
    if (nf == 0) throw DataError("levmar: no free parameters");
    if (m < nf) throw DataError("levmar: fewer residuals than free parameters");

    std::vector<double> r(m), jac(m * n);
    std::vector<double> normal(nf * nf), grad(nf), step_free, scratch;

    const auto chi2_of = [&](const std::vector<double>& p) {
        fn(p, r.data(), nullptr);
        double c = 0.0;
        for (double v : r) c += v * v;
        return c;
    };

    Result res;
    res.params = std::move(p0);
    double chi2 = chi2_of(res.params);
    double lambda = opts.lambda0;

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        res.iterations = iter;
        fn(res.params, r.data(), jac.data());
        for (std::size_t a = 0; a < nf; ++a) {
            grad[a] = 0.0;
            for (std::size_t b = a; b < nf; ++b) {
                double s = 0.0;
                const std::size_t ja = free_idx[a], jb = free_idx[b];
                for (std::size_t i = 0; i < m; ++i) s += jac[i * n + ja] * jac[i * n + jb];
                normal[a * nf + b] = s;
                normal[b * nf + a] = s;
            }
            for (std::size_t i = 0; i < m; ++i) grad[a] += jac[i * n + free_idx[a]] * r[i];
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 16 && !stepped; ++attempt) {
            scratch = normal;
            for (std::size_t a = 0; a < nf; ++a) {
                const double d = normal[a * nf + a];
                scratch[a * nf + a] = d * (1.0 + lambda) + 1e-300;
            }
            if (!cholesky_solve(scratch, grad, nf, step_free)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial = res.params;
            for (std::size_t a = 0; a < nf; ++a) trial[free_idx[a]] -= step_free[a];
            const double chi2_try = chi2_of(trial);
            if (chi2_try <= chi2) {
                double max_rel_step = 0.0;
                for (std::size_t a = 0; a < nf; ++a) {
                    const std::size_t j = free_idx[a];
                    const double scale =
                        std::abs(res.params[j]) +
                        (j < opts.param_scale.size() ? opts.param_scale[j] : 0.0) + 1e-300;
                    max_rel_step = std::max(max_rel_step, std::abs(step_free[a]) / scale);
                }
                res.params = std::move(trial);
                chi2 = chi2_try;
                lambda = std::max(lambda / 3.0, 1e-14);
                stepped = true;
                if (max_rel_step < opts.step_tol) {
                    res.converged = true;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (res.converged || !stepped) {
            // A full round of rejected steps means the damped step is below
            // noise; treat a tiny lambda-limited step as converged too.
            if (!stepped && lambda > 1e12) res.converged = true;
            if (res.converged) break;
            if (!stepped) break;
        }
    }

    res.chi2 = chi2;
    const std::size_t dof = m > nf ? m - nf : 1;
    res.chi2_per_dof = chi2 / static_cast<double>(dof);

    // Covariance from the undamped normal equations at the optimum.
    fn(res.params, r.data(), jac.data());
    for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = a; b < nf; ++b) {
            double s = 0.0;
            const std::size_t ja = free_idx[a], jb = free_idx[b];
            for (std::size_t i = 0; i < m; ++i) s += jac[i * n + ja] * jac[i * n + jb];
            normal[a * nf + b] = s;
            normal[b * nf + a] = s;
        }
    std::vector<double> inv;
    if (!cholesky_inverse(normal, nf, inv)) {
        res.singular_covariance = true;
        // Ridge just enough to invert; the affected directions come out with
        // huge variances, which is the honest statement.
        double trace = 0.0;
        for (std::size_t a = 0; a < nf; ++a) trace += normal[a * nf + a];
        scratch = normal;
        for (std::size_t a = 0; a < nf; ++a)
            scratch[a * nf + a] += std::max(trace, 1e-300) * 1e-12 + 1e-300;
        if (!cholesky_inverse(scratch, nf, inv)) inv.assign(nf * nf, 0.0);
    }
    const double cov_scale = opts.scale_covariance_by_s2 ? res.chi2_per_dof : 1.0;
    res.covariance.assign(n * n, 0.0);
    for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = 0; b < nf; ++b)
            res.covariance[free_idx[a] * n + free_idx[b]] = inv[a * nf + b] * cov_scale;
    return res;
}

}  // namespace homspec::levmar
