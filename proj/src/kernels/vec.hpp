#pragma once

// Lane abstraction shared by the scalar and AVX2 kernel backends.
//
// Both packs expose the same operation set, and every operation maps to a
// single correctly-rounded IEEE-754 double operation per lane (fma included).
// Kernel bodies are templated over the pack type, so the scalar and AVX2
// builds execute the identical operation sequence lane-by-lane and produce
// bit-identical outputs. The equivalence tests assert exactly that.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define HOMSPEC_VEC_AVX2 1
#endif

namespace homspec::kernels::vec {

// Magic constant: adding 1.5*2^52 to a double whose value is an integer k
// with |k| < 2^51 places k (two's complement) in the low mantissa bits.
inline constexpr double kMagic = 6755399441055744.0;  // 1.5 * 2^52

struct ScalarD {
    static constexpr std::size_t width = 1;
    double v;

    struct Int {
        std::int64_t v;
    };

    static ScalarD load(const double* p) { return {*p}; }
    static ScalarD set1(double x) { return {x}; }
    void store(double* p) const { *p = v; }

    friend ScalarD operator+(ScalarD a, ScalarD b) { return {a.v + b.v}; }
    friend ScalarD operator-(ScalarD a, ScalarD b) { return {a.v - b.v}; }
    friend ScalarD operator*(ScalarD a, ScalarD b) { return {a.v * b.v}; }
    friend ScalarD operator/(ScalarD a, ScalarD b) { return {a.v / b.v}; }

    static ScalarD fma(ScalarD a, ScalarD b, ScalarD c) { return {std::fma(a.v, b.v, c.v)}; }
    static ScalarD neg(ScalarD a) { return {-a.v}; }
    static ScalarD min(ScalarD a, ScalarD b) { return {a.v < b.v ? a.v : b.v}; }
    static ScalarD max(ScalarD a, ScalarD b) { return {a.v > b.v ? a.v : b.v}; }
    static ScalarD round_nearest(ScalarD a) { return {std::nearbyint(a.v)}; }

    // Mask: all-ones / all-zeros double bit pattern; select keys on sign bit
    // to match _mm256_blendv_pd semantics.
    static ScalarD cmp_lt(ScalarD a, ScalarD b) {
        return {std::bit_cast<double>(a.v < b.v ? ~0ull : 0ull)};
    }
    static ScalarD cmp_gt(ScalarD a, ScalarD b) {
        return {std::bit_cast<double>(a.v > b.v ? ~0ull : 0ull)};
    }
    static ScalarD select(ScalarD mask, ScalarD a, ScalarD b) {
        return {(std::bit_cast<std::uint64_t>(mask.v) >> 63) ? a.v : b.v};
    }
    static ScalarD flip_sign_if(ScalarD a, ScalarD mask) {
        const std::uint64_t sign = std::bit_cast<std::uint64_t>(mask.v) & 0x8000000000000000ull;
        return {std::bit_cast<double>(std::bit_cast<std::uint64_t>(a.v) ^ sign)};
    }

    // Integer lane ops used by exponent construction and quadrant logic.
    static Int to_int(ScalarD k) {  // k must hold an integer, |k| < 2^51
        return {std::bit_cast<std::int64_t>(k.v + kMagic) -
                std::bit_cast<std::int64_t>(kMagic)};
    }
    static Int iadd(Int a, std::int64_t b) { return {a.v + b}; }
    static Int iand(Int a, std::int64_t b) { return {a.v & b}; }
    static Int ishr1_floor(Int a) { return {((a.v + 2048) >> 1) - 1024}; }
    static Int isub(Int a, Int b) { return {a.v - b.v}; }
    static ScalarD exponent_scale(Int j) {  // 2^j for -1022 <= j <= 1023
        return {std::bit_cast<double>((j.v + 1023) << 52)};
    }
    static ScalarD mask_int_eq(Int a, std::int64_t b) {
        return {std::bit_cast<double>(a.v == b ? ~0ull : 0ull)};
    }
};

#ifdef HOMSPEC_VEC_AVX2

struct AvxD {
    static constexpr std::size_t width = 4;
    __m256d v;

    struct Int {
        __m256i v;
    };

    static AvxD load(const double* p) { return {_mm256_loadu_pd(p)}; }
    static AvxD set1(double x) { return {_mm256_set1_pd(x)}; }
    void store(double* p) const { _mm256_storeu_pd(p, v); }

    friend AvxD operator+(AvxD a, AvxD b) { return {_mm256_add_pd(a.v, b.v)}; }
    friend AvxD operator-(AvxD a, AvxD b) { return {_mm256_sub_pd(a.v, b.v)}; }
    friend AvxD operator*(AvxD a, AvxD b) { return {_mm256_mul_pd(a.v, b.v)}; }
    friend AvxD operator/(AvxD a, AvxD b) { return {_mm256_div_pd(a.v, b.v)}; }

    static AvxD fma(AvxD a, AvxD b, AvxD c) { return {_mm256_fmadd_pd(a.v, b.v, c.v)}; }
    static AvxD neg(AvxD a) { return {_mm256_xor_pd(a.v, _mm256_set1_pd(-0.0))}; }
    static AvxD min(AvxD a, AvxD b) { return {_mm256_min_pd(a.v, b.v)}; }
    static AvxD max(AvxD a, AvxD b) { return {_mm256_max_pd(a.v, b.v)}; }
    static AvxD round_nearest(AvxD a) {
        return {_mm256_round_pd(a.v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC)};
    }

    static AvxD cmp_lt(AvxD a, AvxD b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_LT_OQ)}; }
    static AvxD cmp_gt(AvxD a, AvxD b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_GT_OQ)}; }
    static AvxD select(AvxD mask, AvxD a, AvxD b) {
        return {_mm256_blendv_pd(b.v, a.v, mask.v)};
    }
    static AvxD flip_sign_if(AvxD a, AvxD mask) {
        const __m256d sign = _mm256_and_pd(mask.v, _mm256_set1_pd(-0.0));
        return {_mm256_xor_pd(a.v, sign)};
    }

    static Int to_int(AvxD k) {
        const __m256d magic = _mm256_set1_pd(kMagic);
        return {_mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(k.v, magic)),
                                 _mm256_castpd_si256(magic))};
    }
    static Int iadd(Int a, std::int64_t b) {
        return {_mm256_add_epi64(a.v, _mm256_set1_epi64x(b))};
    }
    static Int iand(Int a, std::int64_t b) {
        return {_mm256_and_si256(a.v, _mm256_set1_epi64x(b))};
    }
    static Int ishr1_floor(Int a) {
        const __m256i biased = _mm256_add_epi64(a.v, _mm256_set1_epi64x(2048));
        return {_mm256_sub_epi64(_mm256_srli_epi64(biased, 1), _mm256_set1_epi64x(1024))};
    }
    static Int isub(Int a, Int b) { return {_mm256_sub_epi64(a.v, b.v)}; }
    static AvxD exponent_scale(Int j) {
        const __m256i bits =
            _mm256_slli_epi64(_mm256_add_epi64(j.v, _mm256_set1_epi64x(1023)), 52);
        return {_mm256_castsi256_pd(bits)};
    }
    static AvxD mask_int_eq(Int a, std::int64_t b) {
        return {_mm256_castsi256_pd(_mm256_cmpeq_epi64(a.v, _mm256_set1_epi64x(b)))};
    }
};

#endif  // HOMSPEC_VEC_AVX2

// ---------------------------------------------------------------------------
// exp for doubles. Cody-Waite reduction plus the Cephes rational kernel,
// 2^k applied in two exponent halves so inputs down to the underflow edge
// stay in normal-exponent territory. Accurate to ~1 ulp over [-745, 709].
// ---------------------------------------------------------------------------
template <class V>
inline V exp_pd(V x) {
    const V of_mask = V::cmp_gt(x, V::set1(709.782712893383996));
    const V uf_mask = V::cmp_lt(x, V::set1(-745.2));
    x = V::min(V::max(x, V::set1(-745.2)), V::set1(709.782712893383996));

    const V k = V::round_nearest(x * V::set1(1.4426950408889634074));  // log2(e)
    V r = V::fma(k, V::set1(-6.93145751953125e-1), x);
    r = V::fma(k, V::set1(-1.42860682030941723212e-6), r);

    const V xx = r * r;
    V px = V::fma(V::set1(1.26177193074810590878e-4), xx,
                  V::set1(3.02994407707441961300e-2));
    px = V::fma(px, xx, V::set1(9.99999999999999999910e-1));
    px = px * r;
    V qx = V::fma(V::set1(3.00198505138664455042e-6), xx,
                  V::set1(2.52448340349684104192e-3));
    qx = V::fma(qx, xx, V::set1(2.27265548208155028766e-1));
    qx = V::fma(qx, xx, V::set1(2.0));
    V e = V::set1(1.0) + (px + px) / (qx - px);

    const auto ki = V::to_int(k);
    const auto k1 = V::ishr1_floor(ki);
    const auto k2 = V::isub(ki, k1);
    e = e * V::exponent_scale(k1) * V::exponent_scale(k2);

    e = V::select(of_mask, V::set1(std::numeric_limits<double>::infinity()), e);
    e = V::select(uf_mask, V::set1(0.0), e);
    return e;
}

// ---------------------------------------------------------------------------
// sin and cos together. Three-term Cody-Waite pi/2 reduction (valid for
// |x| up to ~1e8) and the Cephes minimax polynomials on |r| <= pi/4.
// ---------------------------------------------------------------------------
template <class V>
inline void sincos_pd(V x, V* sin_out, V* cos_out) {
    const V k = V::round_nearest(x * V::set1(0.63661977236758134308));  // 2/pi
    V r = V::fma(k, V::set1(-1.57079632673412561417e+0), x);
    r = V::fma(k, V::set1(-6.07710050650619224932e-11), r);
    r = V::fma(k, V::set1(-2.02226624879595063154e-21), r);

    const V z = r * r;

    V sp = V::fma(V::set1(1.58962301576546568060e-10), z,
                  V::set1(-2.50507477628578072866e-8));
    sp = V::fma(sp, z, V::set1(2.75573136213857245213e-6));
    sp = V::fma(sp, z, V::set1(-1.98412698295895385996e-4));
    sp = V::fma(sp, z, V::set1(8.33333333332211858878e-3));
    sp = V::fma(sp, z, V::set1(-1.66666666666666307295e-1));
    sp = V::fma(sp * z, r, r);

    V cp = V::fma(V::set1(-1.13585365213876817300e-11), z,
                  V::set1(2.08757008419747316778e-9));
    cp = V::fma(cp, z, V::set1(-2.75573141792967388112e-7));
    cp = V::fma(cp, z, V::set1(2.48015872888517179684e-5));
    cp = V::fma(cp, z, V::set1(-1.38888888888730564116e-3));
    cp = V::fma(cp, z, V::set1(4.16666666666665929218e-2));
    cp = V::fma(cp * z, z, V::fma(z, V::set1(-0.5), V::set1(1.0)));

    const auto q = V::to_int(k);
    const V swap = V::mask_int_eq(V::iand(q, 1), 1);
    const V sin_neg = V::mask_int_eq(V::iand(q, 2), 2);
    const V cos_neg = V::mask_int_eq(V::iand(V::iadd(q, 1), 2), 2);

    *sin_out = V::flip_sign_if(V::select(swap, cp, sp), sin_neg);
    *cos_out = V::flip_sign_if(V::select(swap, sp, cp), cos_neg);
}

}  // namespace homspec::kernels::vec
