#include "doctest.h"

#include "ineat/error.hpp"
#include "ineat/geometry.hpp"

#include <cmath>
#include <numeric>

using namespace ineat;

namespace {

std::vector<double> increments(const AngleSequence& s) {
    std::vector<double> d;
    for (std::size_t i = 1; i < s.size(); ++i) d.push_back(s[i] - s[i - 1]);
    return d;
}

// Sum of the trapezoidal increments a·(i + 1/2) on each ramp plus d in cruise,
// added one by one.
double summed_sweep(int n, double d, double a) {
    const int na = static_cast<int>(std::lround(d / a));
    double total = 0.0;
    for (int i = 0; i < n - 1; ++i) {
        const int from_end = n - 2 - i;
        if (i < na) total += a * (i + 0.5);
        else if (from_end < na) total += a * (from_end + 0.5);
        else total += d;
    }
    return total;
}

double distance_to_line(const Vec3& p, const Ray& r) { return norm(cross(p - r.origin, r.direction)); }

} // namespace

TEST_CASE("uniform_angles") {
    CHECK(uniform_angles(4, 90).angles_deg == std::vector<double>{0, 90, 180, 270});
    const auto s = uniform_angles(180, 2);
    CHECK(s.size() == 180);
    CHECK(s[179] == 358.0);
    CHECK(s.provenance == AngleProvenance::uniform);
    CHECK(uniform_angles(1, 2).angles_deg == std::vector<double>{0});
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s[i] - s[i - 1] - 2.0) <= 1e-12 * i);
    CHECK_THROWS_AS(uniform_angles(0, 2), Error);
    CHECK_THROWS_AS(uniform_angles(3, 0), Error);
}

TEST_CASE("perturbed_angles") {
    TrajectoryConfig cfg;
    SUBCASE("zero perturbation is uniform") {
        CHECK(perturbed_angles(cfg).angles_deg == uniform_angles(180, 2).angles_deg);
    }
    SUBCASE("increments stay within the bound") {
        cfg.delta_max = 1.5;
        cfg.seed = 7;
        const auto s = perturbed_angles(cfg);
        CHECK(s[0] == 0.0);
        CHECK(s.provenance == AngleProvenance::perturbed);
        for (double d : increments(s)) {
            CHECK(d >= 0.5);
            CHECK(d <= 3.5);
        }
        CHECK(perturbed_angles(cfg).angles_deg == s.angles_deg);
    }
    SUBCASE("delta_max must stay below d") {
        cfg.delta_max = 2.0;
        CHECK_THROWS_AS(perturbed_angles(cfg), Error);
        cfg.delta_max = 0.5;
        cfg.accel = 0.1;
        CHECK_THROWS_AS(perturbed_angles(cfg), Error);
    }
    SUBCASE("jitter is centred") {
        cfg.n_views = 100001;
        cfg.delta_max = 1.0;
        cfg.seed = 11;
        const auto d = increments(perturbed_angles(cfg));
        double mean = 0.0;
        for (double x : d) mean += x - 2.0;
        mean /= static_cast<double>(d.size());
        CHECK(std::abs(mean) <= 3.0 * cfg.delta_max / std::sqrt(3.0e5));
    }
}

TEST_CASE("accel_angles") {
    TrajectoryConfig cfg;
    SUBCASE("a = 0.05") {
        cfg.accel = 0.05;
        const auto s = accel_angles(cfg);
        CHECK(ramp_length(cfg) == 40);
        CHECK(s[0] == 0.0);
        CHECK(s.provenance == AngleProvenance::accelerated);
        CHECK(s.angles_deg.back() == 278.0);
        CHECK(summed_sweep(180, 2.0, 0.05) == doctest::Approx(278.0).epsilon(1e-12));
    }
    SUBCASE("a = 0.1") {
        cfg.accel = 0.1;
        const auto s = accel_angles(cfg);
        CHECK(s.angles_deg.back() == 318.0);
        CHECK(summed_sweep(180, 2.0, 0.1) == doctest::Approx(318.0).epsilon(1e-12));
    }
    SUBCASE("a = d gives single-step ramps") {
        cfg.accel = 2.0;
        const auto d = increments(accel_angles(cfg));
        CHECK(d.front() == doctest::Approx(1.0));
        CHECK(d.back() == doctest::Approx(1.0));
        for (std::size_t i = 1; i + 1 < d.size(); ++i) CHECK(d[i] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(accel_angles(cfg).angles_deg.back() == doctest::Approx(356.0).epsilon(1e-14));
    }
    SUBCASE("increments are symmetric and cruise at d") {
        for (double a : {0.05, 0.1, 0.25, 0.5}) {
            cfg.accel = a;
            const auto d = increments(accel_angles(cfg));
            const int na = ramp_length(cfg);
            for (std::size_t i = 0; i < d.size(); ++i) {
                CHECK(d[i] == doctest::Approx(d[d.size() - 1 - i]).epsilon(1e-9));
                if (static_cast<int>(i) >= na && static_cast<int>(d.size() - 1 - i) >= na) {
                    CHECK(d[i] == doctest::Approx(2.0).epsilon(1e-9));
                }
                if (static_cast<int>(i) < na) CHECK(d[i] == doctest::Approx(a * (i + 0.5)).epsilon(1e-9));
            }
            CHECK(accel_angles(cfg).angles_deg.back() == doctest::Approx(179 * 2.0 - 2.0 * na).epsilon(1e-12));
        }
    }
    SUBCASE("invalid ramps") {
        cfg.accel = 0.3;
        CHECK_THROWS_AS(accel_angles(cfg), Error);
        cfg.accel = 0.01;  // N_a = 200 > n/2
        CHECK_THROWS_AS(accel_angles(cfg), Error);
        cfg.accel = 0.0;
        CHECK_THROWS_AS(accel_angles(cfg), Error);
    }
}

TEST_CASE("combined_angles") {
    TrajectoryConfig cfg;
    cfg.accel = 0.1;
    CHECK(combined_angles(cfg).angles_deg == accel_angles(cfg).angles_deg);
    cfg.delta_max = 0.5;
    cfg.seed = 3;
    const auto b = combined_angles(cfg);
    CHECK(b.provenance == AngleProvenance::combined);
    CHECK(b[0] == 0.0);
    const auto base = increments(accel_angles(cfg));
    const auto d = increments(b);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(d[i] - base[i]) <= 0.5 + 1e-12);
    cfg.accel = 0.05;
    cfg.delta_max = 1.5;
    CHECK_NOTHROW(combined_angles(cfg));
}

TEST_CASE("uniform_jitter is reproducible and bounded") {
    const auto a = uniform_jitter(1000, 0.7, 42);
    CHECK(a == uniform_jitter(1000, 0.7, 42));
    CHECK(a != uniform_jitter(1000, 0.7, 43));
    for (double x : a) {
        CHECK(x >= -0.7);
        CHECK(x < 0.7);
    }
}

TEST_CASE("angle wrapping") {
    CHECK(wrap_360(-0.5) == doctest::Approx(359.5));
    CHECK(wrap_360(720.0) == 0.0);
    CHECK(wrap_180(180.0) == 180.0);
    CHECK(wrap_180(-180.0) == 180.0);
    CHECK(circular_distance(359.95, 0.05) == doctest::Approx(0.1));
    CHECK(circular_distance(10, 190) == doctest::Approx(180));
}

TEST_CASE("ray_for_pixel") {
    ConeBeamGeometry g;
    g.det_nu = 65;
    g.det_nv = 65;
    SUBCASE("central pixel passes through the centre") {
        const Ray r = ray_for_pixel(g, 0.0, 32, 32);
        CHECK(distance_to_line({0, 0, 0}, r) < 1e-9);
        CHECK(r.hits);
        CHECK(r.t_near <= r.t_far);
        const Ray back = ray_for_pixel(g, 180.0, 32, 32);
        CHECK(dot(r.direction, back.direction) == doctest::Approx(-1.0));
        CHECK(norm(r.origin + back.origin) < 1e-12);
    }
    SUBCASE("directions are unit, periodic and inside the cone") {
        const double half_angle = std::atan(std::hypot(g.det_nu, g.det_nv) * g.det_pitch / (2.0 * g.sdd));
        for (double theta : {0.0, 37.0, 200.5}) {
            for (int v : {0, 10, 64})
                for (int u : {0, 33, 64}) {
                    const Ray r = ray_for_pixel(g, theta, u, v);
                    CHECK(std::abs(norm(r.direction) - 1.0) < 1e-9);
                    const Ray p = ray_for_pixel(g, theta + 360.0, u, v);
                    CHECK(norm(r.direction - p.direction) < 1e-9);
                    CHECK(norm(r.origin - p.origin) < 1e-9);
                    const Vec3 axis = normalized(Vec3{0, 0, 0} - r.origin);
                    CHECK(std::acos(std::min(1.0, dot(axis, r.direction))) <= half_angle + 1e-12);
                }
        }
    }
    SUBCASE("parallel rays share a direction") {
        g.beam_mode = BeamMode::parallel;
        const Ray a = ray_for_pixel(g, 30.0, 0, 0);
        const Ray b = ray_for_pixel(g, 30.0, 64, 40);
        CHECK(norm(a.direction - b.direction) < 1e-12);
    }
    SUBCASE("pixel range") {
        CHECK_THROWS_AS(ray_for_pixel(g, 0.0, -1, 0), Error);
        CHECK_THROWS_AS(ray_for_pixel(g, 0.0, 0, 65), Error);
    }
    SUBCASE("rays that miss") {
        g.det_pitch = 1.0;
        const Ray r = ray_for_pixel(g, 0.0, 0, 0);
        CHECK_FALSE(r.hits);
        CHECK(make_quadrature(r, 0.01).count == 0);
    }
}

TEST_CASE("geometry validation") {
    ConeBeamGeometry g;
    CHECK_NOTHROW(g.validate());
    g.sdd = 1.0;
    CHECK_THROWS_AS(g.validate(), Error);
    g.beam_mode = BeamMode::parallel;
    CHECK_NOTHROW(g.validate());
    g.det_pitch = 0.0;
    CHECK_THROWS_AS(g.validate(), Error);
}
