#include "ineat/kernels.hpp"

#include <cmath>

namespace ineat::simd::scalar {

double dot(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

double sum(const float* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void descend(float* v, const double* g, double eta, bool clamp, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(v[i]) - eta * g[i];
        if (clamp && t < 0.0) t = 0.0;
        v[i] = static_cast<float>(t);
    }
}

} // namespace ineat::simd::scalar

namespace ineat::simd::scalar {

namespace {

struct Axis {
    int i0;
    double w0;
    double w1;
};

// Must stay arithmetically identical to the AVX2 lane code.
inline Axis axis(double g, int n) {
    double gc = g > 0.0 ? g : 0.0;
    const double top = n - 1;
    if (gc > top) gc = top;
    double fl = std::floor(gc);
    const double cap = n - 2;
    if (fl > cap) fl = cap;
    const double f = gc - fl;
    return {static_cast<int>(fl), 1.0 - f, f};
}

struct Stencil {
    int base;
    double w[8];
};

inline Stencil stencil(const DenseRay& r, int k) {
    const double t = r.t0 + (k + 0.5) * r.dt;
    const Axis x = axis(r.origin[0] + r.slope[0] * t, r.n[0]);
    const Axis y = axis(r.origin[1] + r.slope[1] * t, r.n[1]);
    const Axis z = axis(r.origin[2] + r.slope[2] * t, r.n[2]);
    Stencil s;
    s.base = x.i0 + r.n[0] * (y.i0 + r.n[1] * z.i0);
    const double xy00 = x.w0 * y.w0, xy10 = x.w1 * y.w0, xy01 = x.w0 * y.w1, xy11 = x.w1 * y.w1;
    s.w[0] = xy00 * z.w0;
    s.w[1] = xy10 * z.w0;
    s.w[2] = xy01 * z.w0;
    s.w[3] = xy11 * z.w0;
    s.w[4] = xy00 * z.w1;
    s.w[5] = xy10 * z.w1;
    s.w[6] = xy01 * z.w1;
    s.w[7] = xy11 * z.w1;
    return s;
}

} // namespace

double ray_sum(const DenseRay& r) {
    const int sy = r.n[0];
    const int sz = r.n[0] * r.n[1];
    const int off[8] = {0, 1, sy, 1 + sy, sz, 1 + sz, sy + sz, 1 + sy + sz};
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k < r.count; ++k) {
        const Stencil s = stencil(r, k);
        const float* d = r.data + s.base;
        const double a = s.w[0] * static_cast<double>(d[off[0]]) + s.w[1] * static_cast<double>(d[off[1]]);
        const double b = s.w[2] * static_cast<double>(d[off[2]]) + s.w[3] * static_cast<double>(d[off[3]]);
        const double c = s.w[4] * static_cast<double>(d[off[4]]) + s.w[5] * static_cast<double>(d[off[5]]);
        const double e = s.w[6] * static_cast<double>(d[off[6]]) + s.w[7] * static_cast<double>(d[off[7]]);
        acc[k & 3] += (a + b) + (c + e);
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void ray_scatter(const DenseRay& r, double* grad, double value) {
    const int sy = r.n[0];
    const int sz = r.n[0] * r.n[1];
    const int off[8] = {0, 1, sy, 1 + sy, sz, 1 + sz, sy + sz, 1 + sy + sz};
    for (int k = 0; k < r.count; ++k) {
        const Stencil s = stencil(r, k);
        double* g = grad + s.base;
        for (int c = 0; c < 8; ++c) g[off[c]] += value * s.w[c];
    }
}

} // namespace ineat::simd::scalar
