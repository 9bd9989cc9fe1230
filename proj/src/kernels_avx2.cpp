// Compiled with -mavx2 -mfma. Only intrinsics and plain loops live here so no
// AVX2-encoded inline function can leak into other translation units.

#include "ineat/kernels.hpp"

#include <immintrin.h>

namespace ineat::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

} // namespace

double dot(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        const __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
        const __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
        const __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
        const __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
        acc0 = _mm256_fmadd_pd(a0, b0, acc0);
        acc1 = _mm256_fmadd_pd(a1, b1, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

double sum(const float* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(va)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void descend(float* v, const double* g, double eta, bool clamp, std::size_t n) {
    const __m256d veta = _mm256_set1_pd(eta);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d cur = _mm256_cvtps_pd(_mm_loadu_ps(v + i));
        __m256d t = _mm256_fnmadd_pd(veta, _mm256_loadu_pd(g + i), cur);
        if (clamp) t = _mm256_max_pd(t, zero);
        _mm_storeu_ps(v + i, _mm256_cvtpd_ps(t));
    }
    for (; i < n; ++i) {
        double t = static_cast<double>(v[i]) - eta * g[i];
        if (clamp && t < 0.0) t = 0.0;
        v[i] = static_cast<float>(t);
    }
}

} // namespace ineat::simd::avx2

namespace ineat::simd::avx2 {

namespace {

struct Lanes {
    __m128i base;  // int32 flat index of the (i0, j0, k0) corner
    __m256d w[8];
};

inline void axis(__m256d g, __m256d top, __m256d cap, __m128i& i0, __m256d& w0, __m256d& w1) {
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d gc = _mm256_max_pd(g, _mm256_setzero_pd());
    gc = _mm256_min_pd(gc, top);
    __m256d fl = _mm256_floor_pd(gc);
    fl = _mm256_min_pd(fl, cap);
    const __m256d f = _mm256_sub_pd(gc, fl);
    i0 = _mm256_cvttpd_epi32(fl);
    w0 = _mm256_sub_pd(one, f);
    w1 = f;
}

inline Lanes lanes(const DenseRay& r, int k) {
    const __m256d kk = _mm256_set_pd(k + 3.5, k + 2.5, k + 1.5, k + 0.5);
    const __m256d t = _mm256_add_pd(_mm256_set1_pd(r.t0), _mm256_mul_pd(kk, _mm256_set1_pd(r.dt)));
    __m128i i[3];
    __m256d w0[3], w1[3];
    for (int a = 0; a < 3; ++a) {
        const __m256d g = _mm256_add_pd(_mm256_set1_pd(r.origin[a]), _mm256_mul_pd(_mm256_set1_pd(r.slope[a]), t));
        axis(g, _mm256_set1_pd(r.n[a] - 1), _mm256_set1_pd(r.n[a] - 2), i[a], w0[a], w1[a]);
    }
    Lanes l;
    const __m128i ny = _mm_set1_epi32(r.n[1]);
    const __m128i nx = _mm_set1_epi32(r.n[0]);
    l.base = _mm_add_epi32(i[0], _mm_mullo_epi32(nx, _mm_add_epi32(i[1], _mm_mullo_epi32(ny, i[2]))));
    const __m256d xy00 = _mm256_mul_pd(w0[0], w0[1]);
    const __m256d xy10 = _mm256_mul_pd(w1[0], w0[1]);
    const __m256d xy01 = _mm256_mul_pd(w0[0], w1[1]);
    const __m256d xy11 = _mm256_mul_pd(w1[0], w1[1]);
    l.w[0] = _mm256_mul_pd(xy00, w0[2]);
    l.w[1] = _mm256_mul_pd(xy10, w0[2]);
    l.w[2] = _mm256_mul_pd(xy01, w0[2]);
    l.w[3] = _mm256_mul_pd(xy11, w0[2]);
    l.w[4] = _mm256_mul_pd(xy00, w1[2]);
    l.w[5] = _mm256_mul_pd(xy10, w1[2]);
    l.w[6] = _mm256_mul_pd(xy01, w1[2]);
    l.w[7] = _mm256_mul_pd(xy11, w1[2]);
    return l;
}

} // namespace

double ray_sum(const DenseRay& r) {
    const int sy = r.n[0];
    const int sz = r.n[0] * r.n[1];
    const int off[8] = {0, 1, sy, 1 + sy, sz, 1 + sz, sy + sz, 1 + sy + sz};
    __m256d acc = _mm256_setzero_pd();
    int k = 0;
    for (; k + 4 <= r.count; k += 4) {
        const Lanes l = lanes(r, k);
        __m256d v[8];
        for (int c = 0; c < 8; ++c) {
            const __m128i idx = _mm_add_epi32(l.base, _mm_set1_epi32(off[c]));
            v[c] = _mm256_cvtps_pd(_mm_i32gather_ps(r.data, idx, 4));
        }
        const __m256d a = _mm256_add_pd(_mm256_mul_pd(l.w[0], v[0]), _mm256_mul_pd(l.w[1], v[1]));
        const __m256d b = _mm256_add_pd(_mm256_mul_pd(l.w[2], v[2]), _mm256_mul_pd(l.w[3], v[3]));
        const __m256d c = _mm256_add_pd(_mm256_mul_pd(l.w[4], v[4]), _mm256_mul_pd(l.w[5], v[5]));
        const __m256d e = _mm256_add_pd(_mm256_mul_pd(l.w[6], v[6]), _mm256_mul_pd(l.w[7], v[7]));
        acc = _mm256_add_pd(acc, _mm256_add_pd(_mm256_add_pd(a, b), _mm256_add_pd(c, e)));
    }
    alignas(32) double part[4];
    _mm256_store_pd(part, acc);
    if (k < r.count) {
        // Tail: evaluate a full 4-lane block and keep only the live lanes.
        const Lanes l = lanes(r, k);
        alignas(16) int base[4];
        _mm_store_si128(reinterpret_cast<__m128i*>(base), l.base);
        alignas(32) double w[8][4];
        for (int c = 0; c < 8; ++c) _mm256_store_pd(w[c], l.w[c]);
        for (int j = 0; k + j < r.count; ++j) {
            const float* d = r.data + base[j];
            const double a = w[0][j] * static_cast<double>(d[off[0]]) + w[1][j] * static_cast<double>(d[off[1]]);
            const double b = w[2][j] * static_cast<double>(d[off[2]]) + w[3][j] * static_cast<double>(d[off[3]]);
            const double c = w[4][j] * static_cast<double>(d[off[4]]) + w[5][j] * static_cast<double>(d[off[5]]);
            const double e = w[6][j] * static_cast<double>(d[off[6]]) + w[7][j] * static_cast<double>(d[off[7]]);
            part[j] += (a + b) + (c + e);
        }
    }
    return (part[0] + part[1]) + (part[2] + part[3]);
}

void ray_scatter(const DenseRay& r, double* grad, double value) {
    const int sy = r.n[0];
    const int sz = r.n[0] * r.n[1];
    const int off[8] = {0, 1, sy, 1 + sy, sz, 1 + sz, sy + sz, 1 + sy + sz};
    const __m256d vv = _mm256_set1_pd(value);
    for (int k = 0; k < r.count; k += 4) {
        const Lanes l = lanes(r, k);
        alignas(16) int base[4];
        _mm_store_si128(reinterpret_cast<__m128i*>(base), l.base);
        alignas(32) double w[8][4];
        for (int c = 0; c < 8; ++c) _mm256_store_pd(w[c], _mm256_mul_pd(vv, l.w[c]));
        const int live = r.count - k < 4 ? r.count - k : 4;
        for (int j = 0; j < live; ++j) {
            double* g = grad + base[j];
            for (int c = 0; c < 8; ++c) g[off[c]] += w[c][j];
        }
    }
}

} // namespace ineat::simd::avx2
