#pragma once

// Array kernels for the arithmetic inner loops: analytic coincidence curves,
// Monte Carlo rejection weights, beat-note intensities. Scalar reference and
// AVX2 implementations share one templated body and are bit-identical; the
// backend is selected at runtime (overridable with HOMSPEC_SIMD=scalar|avx2).

#include <cstddef>
#include <string>

namespace homspec::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
std::string backend_name(Backend b);
// Test hook. Requesting avx2 on a machine without it keeps scalar.
void force_backend(Backend b);
bool cpu_has_avx2();

// y[i] = baseline * (1 - vis * exp(-u^2/(2 sigma^2)) * cos(u*delta + phase)),
// u = tau[i] - center. The quantum-beat coincidence curve.
void hom_curve(const double* tau, double* y, std::size_t n, double baseline,
               double vis, double sigma, double delta, double center, double phase);

// Envelope / cosine / sine arrays for the same curve, as needed by the
// fit Jacobian: env = exp(-u^2/(2 sigma^2)), c = cos(u*delta + phase), s = sin(...).
void env_cos_sin(const double* tau, std::size_t n, double sigma, double delta,
                 double center, double phase, double* env, double* c, double* s);

// Rejection weight for the (1,1) event class at fixed detection-time
// difference tau, for a batch of wave-packet arrival offsets dtau:
//   g = 0.5*(p - q)^2 + p*q*one_minus_cos_beat,
//   p = exp(-(tau-dtau)^2/(4 sigma^2)), q = exp(-(tau+dtau)^2/(4 sigma^2)).
// one_minus_cos_beat = 1 - cos(tau*delta). Bounded above by 2 for all inputs.
void kernel11_weight(const double* dtau, double* g, std::size_t n, double tau,
                     double one_minus_cos_beat, double sigma);

// Same weight with per-element tau (used when detector-gate smearing makes
// the effective delay vary trial by trial); computes cos(tau*delta) inside.
void kernel11_weight_tau(const double* dtau, const double* tau, double* g,
                         std::size_t n, double delta, double sigma);

// out[i] = dc + amp * cos(phase[i]); phases should be range-reduced by the
// caller (the synthesizer wraps to (-pi, pi]).
void cos_intensity(const double* phase, double* out, std::size_t n, double dc,
                   double amp);

// Elementwise transcendentals, exposed for the accuracy/equivalence tests.
void vexp(const double* x, double* y, std::size_t n);
void vsincos(const double* x, double* s, double* c, std::size_t n);

}  // namespace homspec::kernels
