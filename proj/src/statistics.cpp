#include "homspec/statistics.hpp"

#include <array>
#include <cmath>

#include "homspec/errors.hpp"

namespace homspec::stats {

namespace {

// 32-point Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton
// iteration on the Legendre recurrence. Plenty for gate kernels a few beat
// periods wide.
struct GaussLegendre32 {
    std::array<double, 32> x{};
    std::array<double, 32> w{};
    GaussLegendre32() {
        constexpr int n = 32;
        constexpr double pi = 3.14159265358979323846;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double xi = std::cos(pi * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * xi * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (xi * p0 - p1) / (xi * xi - 1.0);
                const double dx = p0 / pp;
                xi -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            x[i] = -xi;
            x[n - 1 - i] = xi;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * pp * pp);
        }
    }
};

const GaussLegendre32& gl32() {
    static const GaussLegendre32 table;
    return table;
}

double gl_integrate(const auto& f, double lo, double hi) {
    const auto& t = gl32();
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int i = 0; i < 32; ++i) acc += t.w[i] * f(mid + half * t.x[i]);
    return acc * half;
}

}  // namespace

void SourcePairSpec::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw DataError("SourcePairSpec: mu must be positive");
    if (!(sigma_s > 0.0) || !std::isfinite(sigma_s))
        throw DataError("SourcePairSpec: sigma must be positive");
    if (!(delta_rad_s >= 0.0) || !std::isfinite(delta_rad_s))
        throw DataError("SourcePairSpec: delta must be non-negative");
}

double poisson_pn(int n, double mu) {
    if (n < 0) throw DataError("poisson_pn: n must be non-negative");
    if (!(mu > 0.0)) throw DataError("poisson_pn: mu must be positive");
    if (n <= 20) {
        double p = std::exp(-mu);
        for (int k = 1; k <= n; ++k) p *= mu / k;
        return p;
    }
    return std::exp(n * std::log(mu) - mu - std::lgamma(n + 1.0));
}

double joint_fock_probability(int m, int n, double mu) {
    if (m < 0 || n < 0) throw DataError("joint_fock_probability: counts must be non-negative");
    if (!(mu > 0.0)) throw DataError("joint_fock_probability: mu must be positive");
    if (m + n <= 20) {
        double p = std::exp(-2.0 * mu);
        for (int k = 1; k <= m; ++k) p *= mu / k;
        for (int k = 1; k <= n; ++k) p *= mu / k;
        return p;
    }
    return std::exp((m + n) * std::log(mu) - 2.0 * mu - std::lgamma(m + 1.0) -
                    std::lgamma(n + 1.0));
}

double truncation_tail(double mu) {
    if (!(mu > 0.0)) throw DataError("truncation_tail: mu must be positive");
    const double lam = 2.0 * mu;
    return 1.0 - std::exp(-lam) * (1.0 + lam + 0.5 * lam * lam);
}

double truncation_tail_conditional(double mu) {
    if (!(mu > 0.0)) throw DataError("truncation_tail_conditional: mu must be positive");
    const double lam = 2.0 * mu;
    const double p_ge2 = 1.0 - std::exp(-lam) * (1.0 + lam);
    return truncation_tail(mu) / p_ge2;
}

EventClassWeights event_weights(double mu) {
    if (!(mu > 0.0)) throw DataError("event_weights: mu must be positive");
    const double p11 = mu * mu * std::exp(-2.0 * mu);
    EventClassWeights w;
    w.p11 = p11;
    w.p20 = 0.5 * p11;
    w.p02 = 0.5 * p11;
    w.normalizer = 2.0 * p11;
    return w;
}

double model_coincidence(double tau_s, double sigma_s, double delta_rad_s) {
    if (!(sigma_s > 0.0)) throw DataError("model_coincidence: sigma must be positive");
    const double u = tau_s / sigma_s;
    return 0.5 - 0.25 * std::exp(-0.5 * u * u) * std::cos(tau_s * delta_rad_s);
}

double visibility(double baseline, double minimum) {
    if (!(baseline > 0.0)) throw DataError("visibility: unusable normalization (baseline <= 0)");
    return (baseline - minimum) / baseline;
}

double gate_averaged_model(double tau_s, double sigma_s, double delta_rad_s,
                           double gate_width_s, GateKernel kernel) {
    if (gate_width_s < 0.0) throw DataError("gate_averaged_model: gate width must be >= 0");
    if (gate_width_s == 0.0) return model_coincidence(tau_s, sigma_s, delta_rad_s);
    const double tg = gate_width_s;
    const auto f = [&](double s) { return model_coincidence(tau_s - s, sigma_s, delta_rad_s); };
    if (kernel == GateKernel::boxcar) {
        return gl_integrate(f, -0.5 * tg, 0.5 * tg) / tg;
    }
    // Triangular kernel (1 - |s|/Tg)/Tg on [-Tg, Tg]: what two equal gates do.
    const auto ft = [&](double s) { return f(s) * (1.0 - std::abs(s) / tg) / tg; };
    return gl_integrate(ft, -tg, 0.0) + gl_integrate(ft, 0.0, tg);
}

}  // namespace homspec::stats
