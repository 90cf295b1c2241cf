#pragma once

// Kernel bodies, templated over the lane pack. Included by the scalar and
// AVX2 translation units; the remainder loop always runs on the scalar pack,
// which executes the same per-lane operation sequence, so both backends
// produce bit-identical arrays.

#include <cstddef>

#include "vec.hpp"

namespace homspec::kernels::detail {

template <class V>
inline void hom_curve_t(const double* tau, double* y, std::size_t n, double baseline,
                        double vis, double sigma, double delta, double center,
                        double phase) {
    const double a = -0.5 / (sigma * sigma);
    std::size_t i = 0;
    auto body = [&](auto pack, std::size_t idx) {
        using P = decltype(pack);
        const P u = P::load(tau + idx) - P::set1(center);
        const P env = vec::exp_pd(P::fma(u * u, P::set1(a), P::set1(0.0)));
        P s, c;
        vec::sincos_pd(P::fma(u, P::set1(delta), P::set1(phase)), &s, &c);
        const P beat = env * c;
        const P out = P::set1(baseline) * P::fma(P::neg(P::set1(vis)), beat, P::set1(1.0));
        out.store(y + idx);
    };
    for (; i + V::width <= n; i += V::width) body(V{}, i);
    for (; i < n; ++i) body(vec::ScalarD{}, i);
}

template <class V>
inline void env_cos_sin_t(const double* tau, std::size_t n, double sigma, double delta,
                          double center, double phase, double* env, double* c,
                          double* s) {
    const double a = -0.5 / (sigma * sigma);
    std::size_t i = 0;
    auto body = [&](auto pack, std::size_t idx) {
        using P = decltype(pack);
        const P u = P::load(tau + idx) - P::set1(center);
        const P e = vec::exp_pd(P::fma(u * u, P::set1(a), P::set1(0.0)));
        P sv, cv;
        vec::sincos_pd(P::fma(u, P::set1(delta), P::set1(phase)), &sv, &cv);
        e.store(env + idx);
        cv.store(c + idx);
        sv.store(s + idx);
    };
    for (; i + V::width <= n; i += V::width) body(V{}, i);
    for (; i < n; ++i) body(vec::ScalarD{}, i);
}

template <class V>
inline void kernel11_weight_t(const double* dtau, double* g, std::size_t n, double tau,
                              double one_minus_cos_beat, double sigma) {
    const double b = -0.25 / (sigma * sigma);
    std::size_t i = 0;
    auto body = [&](auto pack, std::size_t idx) {
        using P = decltype(pack);
        const P dt = P::load(dtau + idx);
        const P d1 = P::set1(tau) - dt;
        const P d2 = P::set1(tau) + dt;
        const P p = vec::exp_pd(d1 * d1 * P::set1(b));
        const P q = vec::exp_pd(d2 * d2 * P::set1(b));
        const P diff = p - q;
        const P out = P::fma(P::set1(0.5) * diff, diff, p * q * P::set1(one_minus_cos_beat));
        out.store(g + idx);
    };
    for (; i + V::width <= n; i += V::width) body(V{}, i);
    for (; i < n; ++i) body(vec::ScalarD{}, i);
}

template <class V>
inline void kernel11_weight_tau_t(const double* dtau, const double* tau, double* g,
                                  std::size_t n, double delta, double sigma) {
    const double b = -0.25 / (sigma * sigma);
    std::size_t i = 0;
    auto body = [&](auto pack, std::size_t idx) {
        using P = decltype(pack);
        const P t = P::load(tau + idx);
        const P dt = P::load(dtau + idx);
        const P d1 = t - dt;
        const P d2 = t + dt;
        const P p = vec::exp_pd(d1 * d1 * P::set1(b));
        const P q = vec::exp_pd(d2 * d2 * P::set1(b));
        P sv, cv;
        vec::sincos_pd(t * P::set1(delta), &sv, &cv);
        const P omc = P::set1(1.0) - cv;
        const P diff = p - q;
        const P out = P::fma(P::set1(0.5) * diff, diff, p * q * omc);
        out.store(g + idx);
    };
    for (; i + V::width <= n; i += V::width) body(V{}, i);
    for (; i < n; ++i) body(vec::ScalarD{}, i);
}

template <class V>
inline void cos_intensity_t(const double* phase, double* out, std::size_t n, double dc,
                            double amp) {
    std::size_t i = 0;
    auto body = [&](auto pack, std::size_t idx) {
        using P = decltype(pack);
        P sv, cv;
        vec::sincos_pd(P::load(phase + idx), &sv, &cv);
        P::fma(P::set1(amp), cv, P::set1(dc)).store(out + idx);
    };
    for (; i + V::width <= n; i += V::width) body(V{}, i);
    for (; i < n; ++i) body(vec::ScalarD{}, i);
}

template <class V>
inline void vexp_t(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    auto body = [&](auto pack, std::size_t idx) {
        using P = decltype(pack);
        vec::exp_pd(P::load(x + idx)).store(y + idx);
    };
    for (; i + V::width <= n; i += V::width) body(V{}, i);
    for (; i < n; ++i) body(vec::ScalarD{}, i);
}

template <class V>
inline void vsincos_t(const double* x, double* s, double* c, std::size_t n) {
    std::size_t i = 0;
    auto body = [&](auto pack, std::size_t idx) {
        using P = decltype(pack);
        P sv, cv;
        vec::sincos_pd(P::load(x + idx), &sv, &cv);
        sv.store(s + idx);
        cv.store(c + idx);
    };
    for (; i + V::width <= n; i += V::width) body(V{}, i);
    for (; i < n; ++i) body(vec::ScalarD{}, i);
}

}  // namespace homspec::kernels::detail

// Expands to the backend-specific entry points in the enclosing namespace.
#define HOMSPEC_DEFINE_KERNEL_BACKEND(PACK)                                              \
    void hom_curve(const double* tau, double* y, std::size_t n, double baseline,         \
                   double vis, double sigma, double delta, double center,                \
                   double phase) {                                                       \
        detail::hom_curve_t<PACK>(tau, y, n, baseline, vis, sigma, delta, center,        \
                                  phase);                                                \
    }                                                                                    \
    void env_cos_sin(const double* tau, std::size_t n, double sigma, double delta,       \
                     double center, double phase, double* env, double* c, double* s) {   \
        detail::env_cos_sin_t<PACK>(tau, n, sigma, delta, center, phase, env, c, s);     \
    }                                                                                    \
    void kernel11_weight(const double* dtau, double* g, std::size_t n, double tau,       \
                         double one_minus_cos_beat, double sigma) {                      \
        detail::kernel11_weight_t<PACK>(dtau, g, n, tau, one_minus_cos_beat, sigma);     \
    }                                                                                    \
    void kernel11_weight_tau(const double* dtau, const double* tau, double* g,           \
                             std::size_t n, double delta, double sigma) {                \
        detail::kernel11_weight_tau_t<PACK>(dtau, tau, g, n, delta, sigma);              \
    }                                                                                    \
    void cos_intensity(const double* phase, double* out, std::size_t n, double dc,       \
                       double amp) {                                                     \
        detail::cos_intensity_t<PACK>(phase, out, n, dc, amp);                           \
    }                                                                                    \
    void vexp(const double* x, double* y, std::size_t n) {                               \
        detail::vexp_t<PACK>(x, y, n);                                                   \
    }                                                                                    \
    void vsincos(const double* x, double* s, double* c, std::size_t n) {                 \
        detail::vsincos_t<PACK>(x, s, c, n);                                             \
    }
