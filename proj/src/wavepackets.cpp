#include "homspec/wavepackets.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "homspec/errors.hpp"

namespace homspec::wavepackets {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Integration window: +-12 sigma around the integrand's support, widened by
// the delay offsets so the Gaussian tails are truncated below 1e-30 relative.
using gk15 = boost::math::quadrature::gauss_kronrod<double, 15>;

double adaptive_integrate(const auto& f, double lo, double hi) {
    return gk15::integrate(f, lo, hi, /*max_depth=*/14, /*tol=*/1e-11);
}

}  // namespace

void GaussianMode::validate() const {
    if (!(sigma_s > 0.0) || !std::isfinite(sigma_s))
        throw DataError("GaussianMode: sigma must be positive and finite");
    if (!std::isfinite(center_time_s) || !std::isfinite(omega_offset_rad_s))
        throw DataError("GaussianMode: non-finite field");
}

std::complex<double> mode_amplitude(const GaussianMode& mode, double t_s) {
    const double norm = std::pow(kPi * mode.sigma_s * mode.sigma_s, -0.25);
    const double u = (t_s - mode.center_time_s) / mode.sigma_s;
    const double env = norm * std::exp(-0.5 * u * u);
    const double phi = -mode.omega_offset_rad_s * t_s;
    return {env * std::cos(phi), env * std::sin(phi)};
}

double coincidence_kernel_11(const GaussianMode& a, const GaussianMode& b,
                             double tau0_s, double tau_s) {
    a.validate();
    b.validate();
    const std::complex<double> m1 =
        mode_amplitude(a, tau0_s + tau_s) * mode_amplitude(b, tau0_s);
    const std::complex<double> m2 =
        mode_amplitude(a, tau0_s) * mode_amplitude(b, tau0_s + tau_s);
    return 0.25 * std::norm(m1 - m2);
}

double coincidence_kernel_11_expanded(const GaussianMode& a, const GaussianMode& b,
                                      double tau0_s, double tau_s) {
    a.validate();
    b.validate();
    const auto envelope = [](const GaussianMode& m, double t) {
        const double u = (t - m.center_time_s) / m.sigma_s;
        return std::pow(kPi * m.sigma_s * m.sigma_s, -0.25) * std::exp(-0.5 * u * u);
    };
    const double ea0 = envelope(a, tau0_s);
    const double ea1 = envelope(a, tau0_s + tau_s);
    const double eb0 = envelope(b, tau0_s);
    const double eb1 = envelope(b, tau0_s + tau_s);
    // phi_k(t) = omega_k t; the combination collapses to the offset difference
    const double phase = (a.omega_offset_rad_s - b.omega_offset_rad_s) * tau0_s -
                         (a.omega_offset_rad_s - b.omega_offset_rad_s) * (tau0_s + tau_s);
    return 0.25 * ea1 * ea1 * eb0 * eb0 + 0.25 * ea0 * ea0 * eb1 * eb1 -
           0.5 * ea0 * eb0 * ea1 * eb1 * std::cos(phase);
}

double kernel_closed_form(double sigma_s, double delta_rad_s, double dtau_s,
                          double tau0_s, double tau_s) {
    if (!(sigma_s > 0.0)) throw DataError("kernel_closed_form: sigma must be positive");
    const double s2 = sigma_s * sigma_s;
    // Combined Gaussian exponent and cosh argument. E +- a <= 0 for all inputs
    // (the minimum over tau0 of the quadratic is -tau^2/2), so both amplitudes
    // stay in [0, 1] and no overflow guard is needed beyond this form.
    const double E = -(0.5 * dtau_s * dtau_s + tau_s * tau_s + 2.0 * tau0_s * tau0_s +
                       2.0 * tau0_s * tau_s) /
                     s2;
    const double arg = tau_s * dtau_s / s2;
    const double r = std::exp(0.5 * (E + arg));
    const double s = std::exp(0.5 * (E - arg));
    const double sh = std::sin(0.5 * tau_s * delta_rad_s);
    const double pref = 1.0 / (2.0 * kPi * s2);
    return pref * (0.5 * (r - s) * (r - s) + 2.0 * r * s * sh * sh);
}

double integrate_over_tau0(double sigma_s, double delta_rad_s, double dtau_s,
                           double tau_s) {
    if (!(sigma_s > 0.0)) throw DataError("integrate_over_tau0: sigma must be positive");
    const double s2 = sigma_s * sigma_s;
    const double E = -0.5 * (dtau_s * dtau_s + tau_s * tau_s) / s2;
    const double arg = tau_s * dtau_s / s2;
    const double r = std::exp(0.5 * (E + arg));
    const double s = std::exp(0.5 * (E - arg));
    const double sh = std::sin(0.5 * tau_s * delta_rad_s);
    const double pref = 1.0 / (4.0 * sigma_s * std::sqrt(2.0 * kPi));
    return pref * (0.5 * (r - s) * (r - s) + 2.0 * r * s * sh * sh);
}

double integrate_over_tau0_numeric(double sigma_s, double delta_rad_s, double dtau_s,
                                   double tau_s) {
    if (!(sigma_s > 0.0)) throw DataError("integrate_over_tau0_numeric: sigma must be positive");
    const double half = 12.0 * sigma_s + std::abs(tau_s);
    const auto f = [&](double tau0) {
        return kernel_closed_form(sigma_s, delta_rad_s, dtau_s, tau0, tau_s);
    };
    return adaptive_integrate(f, -half, half);
}

double integrate_over_dtau(double sigma_s, double delta_rad_s, double tau_s) {
    if (!(sigma_s > 0.0)) throw DataError("integrate_over_dtau: sigma must be positive");
    const double env = std::exp(-0.5 * tau_s * tau_s / (sigma_s * sigma_s));
    return 0.5 * (1.0 - env * std::cos(tau_s * delta_rad_s));
}

double integrate_over_dtau_numeric(double sigma_s, double delta_rad_s, double tau_s) {
    if (!(sigma_s > 0.0)) throw DataError("integrate_over_dtau_numeric: sigma must be positive");
    const double half = 12.0 * sigma_s + std::abs(tau_s);
    const auto f = [&](double dtau) {
        return integrate_over_tau0(sigma_s, delta_rad_s, dtau, tau_s);
    };
    return adaptive_integrate(f, -half, half);
}

void KernelGrid::validate() const {
    const auto strictly_increasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1])) return false;
        return true;
    };
    if (!strictly_increasing(tau0_values_s) || !strictly_increasing(tau_values_s))
        throw DataError("KernelGrid: grid sequences must be strictly increasing");
    if (values.size() != tau0_values_s.size() * tau_values_s.size())
        throw DataError("KernelGrid: value matrix shape mismatch");
    for (double v : values)
        if (!(v >= 0.0)) throw DataError("KernelGrid: negative kernel value");
}

KernelGrid sample_kernel_grid(const GaussianMode& a, const GaussianMode& b,
                              std::vector<double> tau0_values_s,
                              std::vector<double> tau_values_s) {
    KernelGrid grid;
    grid.tau0_values_s = std::move(tau0_values_s);
    grid.tau_values_s = std::move(tau_values_s);
    grid.values.resize(grid.tau0_values_s.size() * grid.tau_values_s.size());
    std::size_t idx = 0;
    for (double tau0 : grid.tau0_values_s)
        for (double tau : grid.tau_values_s)
            grid.values[idx++] = coincidence_kernel_11(a, b, tau0, tau);
    grid.validate();
    return grid;
}

}  // namespace homspec::wavepackets
