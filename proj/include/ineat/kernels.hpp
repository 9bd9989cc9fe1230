#pragma once

// Data-parallel inner loops used by matching and the gradient update.
// Every kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant. The variant is chosen once at startup from CPUID; INEAT_ISA=scalar
// in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace ineat::simd {

enum class Isa { scalar, avx2 };

// One ray through a dense x-fastest grid: quadrature point k sits at
// t = t0 + (k + 0.5)·dt, its continuous lattice coordinate on each axis is
// origin[a] + slope[a]·t, clamped to [0, n_a - 1].
struct DenseRay {
    const float* data;
    int n[3];
    double origin[3];
    double slope[3];
    double t0;
    double dt;
    int count;
};

struct KernelTable {
    std::string_view name;
    // Σ a[i]·b[i], accumulated in double.
    double (*dot)(const float* a, const float* b, std::size_t n);
    // Σ a[i], accumulated in double.
    double (*sum)(const float* a, std::size_t n);
    // y[i] += alpha·x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // v[i] = v[i] − eta·g[i], then max(·, 0) when clamp is set.
    void (*descend)(float* v, const double* g, double eta, bool clamp, std::size_t n);
    // Σ_k trilinear(point_k). Samples are accumulated round-robin into four
    // partial sums combined as (s0 + s1) + (s2 + s3); variants are bitwise equal.
    double (*ray_sum)(const DenseRay& ray);
    // grad[corner] += value·weight for every stencil corner of every point, in
    // point order.
    void (*ray_scatter)(const DenseRay& ray, double* grad, double value);
};

bool isa_supported(Isa isa);
const KernelTable& kernels_for(Isa isa);

Isa active_isa();
void select_isa(Isa isa);
const KernelTable& active();

namespace scalar {
double dot(const float* a, const float* b, std::size_t n);
double sum(const float* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void descend(float* v, const double* g, double eta, bool clamp, std::size_t n);
double ray_sum(const DenseRay& ray);
void ray_scatter(const DenseRay& ray, double* grad, double value);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define INEAT_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const float* a, const float* b, std::size_t n);
double sum(const float* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void descend(float* v, const double* g, double eta, bool clamp, std::size_t n);
double ray_sum(const DenseRay& ray);
void ray_scatter(const DenseRay& ray, double* grad, double value);
} // namespace avx2
#endif

inline double dot(std::span<const float> a, std::span<const float> b) {
    return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

inline double sum(std::span<const float> a) { return active().sum(a.data(), a.size()); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

inline void descend(std::span<float> v, std::span<const double> g, double eta, bool clamp) {
    active().descend(v.data(), g.data(), eta, clamp, v.size() < g.size() ? v.size() : g.size());
}

} // namespace ineat::simd
