#include "homspec/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace homspec::kernels {

#define HOMSPEC_DECLARE_BACKEND(NS)                                                      \
    namespace NS {                                                                       \
    void hom_curve(const double*, double*, std::size_t, double, double, double, double,  \
                   double, double);                                                      \
    void env_cos_sin(const double*, std::size_t, double, double, double, double,         \
                     double*, double*, double*);                                         \
    void kernel11_weight(const double*, double*, std::size_t, double, double, double);   \
    void kernel11_weight_tau(const double*, const double*, double*, std::size_t, double, \
                             double);                                                    \
    void cos_intensity(const double*, double*, std::size_t, double, double);             \
    void vexp(const double*, double*, std::size_t);                                      \
    void vsincos(const double*, double*, double*, std::size_t);                          \
    }

HOMSPEC_DECLARE_BACKEND(scalar_backend)
#ifdef HOMSPEC_HAVE_AVX2_BACKEND
HOMSPEC_DECLARE_BACKEND(avx2_backend)
#endif

bool cpu_has_avx2() {
#if defined(HOMSPEC_HAVE_AVX2_BACKEND) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend detect_backend() {
    if (const char* env = std::getenv("HOMSPEC_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
        if (std::strcmp(env, "avx2") == 0) return Backend::scalar;
    }
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend> g_backend{detect_backend()};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
    if (b == Backend::avx2 && !cpu_has_avx2()) b = Backend::scalar;
    g_backend.store(b, std::memory_order_relaxed);
}

#ifdef HOMSPEC_HAVE_AVX2_BACKEND
#define HOMSPEC_DISPATCH(fn, ...)                                 \
    if (active_backend() == Backend::avx2) {                      \
        avx2_backend::fn(__VA_ARGS__);                            \
    } else {                                                      \
        scalar_backend::fn(__VA_ARGS__);                          \
    }
#else
#define HOMSPEC_DISPATCH(fn, ...) scalar_backend::fn(__VA_ARGS__);
#endif

void hom_curve(const double* tau, double* y, std::size_t n, double baseline, double vis,
               double sigma, double delta, double center, double phase) {
    HOMSPEC_DISPATCH(hom_curve, tau, y, n, baseline, vis, sigma, delta, center, phase)
}

void env_cos_sin(const double* tau, std::size_t n, double sigma, double delta,
                 double center, double phase, double* env, double* c, double* s) {
    HOMSPEC_DISPATCH(env_cos_sin, tau, n, sigma, delta, center, phase, env, c, s)
}

void kernel11_weight(const double* dtau, double* g, std::size_t n, double tau,
                     double one_minus_cos_beat, double sigma) {
    HOMSPEC_DISPATCH(kernel11_weight, dtau, g, n, tau, one_minus_cos_beat, sigma)
}

void kernel11_weight_tau(const double* dtau, const double* tau, double* g, std::size_t n,
                         double delta, double sigma) {
    HOMSPEC_DISPATCH(kernel11_weight_tau, dtau, tau, g, n, delta, sigma)
}

void cos_intensity(const double* phase, double* out, std::size_t n, double dc,
                   double amp) {
    HOMSPEC_DISPATCH(cos_intensity, phase, out, n, dc, amp)
}

void vexp(const double* x, double* y, std::size_t n) { HOMSPEC_DISPATCH(vexp, x, y, n) }

void vsincos(const double* x, double* s, double* c, std::size_t n) {
    HOMSPEC_DISPATCH(vsincos, x, s, c, n)
}

}  // namespace homspec::kernels
