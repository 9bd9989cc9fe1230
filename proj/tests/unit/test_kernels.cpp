#include "doctest.h"

#include "ineat/kernels.hpp"
#include "ineat/phantom.hpp"
#include "ineat/projector.hpp"

#include <cstring>
#include <random>
#include <vector>

using namespace ineat;

namespace {

std::vector<float> random_floats(std::size_t n, unsigned seed, float lo = -1.0f, float hi = 1.0f) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> d(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Reference trilinear sum along a ray, straight from the per-point sampler.
double naive_ray(const DenseVolume& vol, const RayQuadrature& q) {
    double acc[4] = {0, 0, 0, 0};
    int k = 0;
    vol.visit_ray(q, [&](const std::size_t* idx, const double* w, int count) {
        acc[k++ & 3] += detail::stencil_sum(idx, w, count, vol.payload().data());
    });
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

} // namespace

TEST_CASE("scalar kernels") {
    const auto a = random_floats(1003, 1);
    const auto b = random_floats(1003, 2);
    double dot = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        sum += a[i];
    }
    CHECK(simd::scalar::dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-12));
    CHECK(simd::scalar::sum(a.data(), a.size()) == doctest::Approx(sum).epsilon(1e-12));

    std::vector<float> v = {1.0f, 0.5f, -2.0f};
    std::vector<double> g = {1.0, 1.0, -1.0};
    simd::scalar::descend(v.data(), g.data(), 0.75, true, v.size());
    CHECK(v[0] == 0.25f);
    CHECK(v[1] == 0.0f);
    CHECK(v[2] == 0.0f);
}

TEST_CASE("scalar ray kernel walks the same stencils as the volume") {
    const auto vol = spiral_cube_phantom({});
    ConeBeamGeometry geom;
    ViewFrame frame(geom, 33.0, 1.0);
    for (int v = 0; v < geom.det_nv; v += 7)
        for (int u = 0; u < geom.det_nu; u += 5) {
            const auto q = make_quadrature(frame.ray(u, v), 0.0071);
            if (q.count == 0) continue;
            CHECK(same_bits(simd::scalar::ray_sum(dense_ray(vol, q)), naive_ray(vol, q)));
        }
}

#ifdef INEAT_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!simd::isa_supported(simd::Isa::avx2)) return;
    for (std::size_t n : {0u, 1u, 3u, 8u, 15u, 16u, 17u, 1000u, 4099u}) {
        const auto a = random_floats(n, 10 + static_cast<unsigned>(n));
        const auto b = random_floats(n, 20 + static_cast<unsigned>(n));
        CHECK(simd::avx2::dot(a.data(), b.data(), n) ==
              doctest::Approx(simd::scalar::dot(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(simd::avx2::sum(a.data(), n) == doctest::Approx(simd::scalar::sum(a.data(), n)).epsilon(1e-12));

        std::vector<double> x(n), y1(n), y2(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = a[i], y1[i] = y2[i] = b[i];
        simd::scalar::axpy(0.3, x.data(), y1.data(), n);
        simd::avx2::axpy(0.3, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

        auto v1 = a, v2 = a;
        simd::scalar::descend(v1.data(), x.data(), 0.7, true, n);
        simd::avx2::descend(v2.data(), x.data(), 0.7, true, n);
        CHECK(v1 == v2);
    }
}

TEST_CASE("avx2 ray kernels are bitwise equal to the scalar reference") {
    if (!simd::isa_supported(simd::Isa::avx2)) return;
    auto data = random_floats(20 * 17 * 23, 5, 0.0f, 2.0f);
    const DenseVolume vol(20, 17, 23, 1.3, data);
    ConeBeamGeometry geom;
    geom.det_nu = 24;
    geom.det_nv = 19;
    geom.det_pitch = 0.13;
    for (double theta : {0.0, 17.3, 90.0, 211.7}) {
        for (double step : {0.013, 0.05, 0.41}) {
            ViewFrame frame(geom, theta, vol.extent_edge());
            for (int v = 0; v < geom.det_nv; ++v)
                for (int u = 0; u < geom.det_nu; ++u) {
                    const auto q = make_quadrature(frame.ray(u, v), step);
                    if (q.count == 0) continue;
                    const auto r = dense_ray(vol, q);
                    REQUIRE(same_bits(simd::avx2::ray_sum(r), simd::scalar::ray_sum(r)));
                    std::vector<double> g1(vol.payload_size(), 0.0), g2(vol.payload_size(), 0.0);
                    simd::scalar::ray_scatter(r, g1.data(), 0.37);
                    simd::avx2::ray_scatter(r, g2.data(), 0.37);
                    REQUIRE(g1 == g2);
                }
        }
    }
}
#endif

TEST_CASE("INEAT_ISA selection") {
    const auto before = simd::active_isa();
    simd::select_isa(simd::Isa::scalar);
    CHECK(simd::active().name == "scalar");
    simd::select_isa(before);
    CHECK(simd::active_isa() == before);
}
