#pragma once

#include "ineat/vec3.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace ineat {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }

// Wraps an angle to [0, 360).
double wrap_360(double deg);
// Wraps an angular difference to (-180, 180].
double wrap_180(double deg);
// Shortest distance between two angles on the circle, in [0, 180].
double circular_distance(double a_deg, double b_deg);

enum class BeamMode { cone, parallel };

std::string_view to_string(BeamMode mode);
BeamMode beam_mode_from_string(std::string_view s);

// Source rotates about the z axis at radius `sad`. The flat detector sits at
// distance `sdd` from the source, perpendicular to the source-axis line, with
// its u axis tangential and its v axis along +z.
struct ConeBeamGeometry {
    double sad = 2.0;
    double sdd = 4.0;
    int det_nu = 64;
    int det_nv = 64;
    double det_pitch = 0.05;
    BeamMode beam_mode = BeamMode::cone;

    void validate() const;
    std::size_t pixel_count() const { return static_cast<std::size_t>(det_nu) * static_cast<std::size_t>(det_nv); }
};

enum class AngleProvenance { uniform, perturbed, accelerated, combined, corrected };

std::string_view to_string(AngleProvenance p);
AngleProvenance provenance_from_string(std::string_view s);

struct AngleSequence {
    std::vector<double> angles_deg;
    AngleProvenance provenance = AngleProvenance::uniform;
    std::optional<std::uint64_t> seed;

    std::size_t size() const { return angles_deg.size(); }
    double operator[](std::size_t i) const { return angles_deg[i]; }
};

struct TrajectoryConfig {
    int n_views = 180;
    double d_deg = 2.0;
    double delta_max = 0.0;
    double accel = 0.0;
    std::uint64_t seed = 0;
};

AngleSequence uniform_angles(int n, double d_deg);
AngleSequence perturbed_angles(const TrajectoryConfig& cfg);
AngleSequence accel_angles(const TrajectoryConfig& cfg);
AngleSequence combined_angles(const TrajectoryConfig& cfg);

// Number of ramp increments d/a; throws unless it is a positive integer.
int ramp_length(const TrajectoryConfig& cfg);

// Deterministic uniform draws on [-bound, bound): mt19937_64 output mapped
// through its top 53 bits, so the stream is fixed by the seed alone.
std::vector<double> uniform_jitter(std::size_t count, double bound, std::uint64_t seed);

struct Ray {
    Vec3 origin;
    Vec3 direction;
    double t_near = 0.0;
    double t_far = 0.0;
    bool hits = false;

    Vec3 at(double t) const { return origin + direction * t; }
};

// Midpoint rule over [t_near, t_far] with count = ceil(length / step) equal
// sub-intervals of width `weight`.
struct RayQuadrature {
    Vec3 origin;
    Vec3 direction;
    double t0 = 0.0;
    double weight = 0.0;
    int count = 0;

    Vec3 point(int k) const { return origin + direction * (t0 + (k + 0.5) * weight); }
};

inline RayQuadrature make_quadrature(const Ray& ray, double step) {
    RayQuadrature q;
    if (!ray.hits) return q;
    const double len = ray.t_far - ray.t_near;
    q.count = static_cast<int>(std::ceil(len / step));
    if (q.count <= 0) return RayQuadrature{};
    q.origin = ray.origin;
    q.direction = ray.direction;
    q.t0 = ray.t_near;
    q.weight = len / q.count;
    return q;
}

// Slab intersection against the axis-aligned cube of edge `edge` centred at
// the origin. Cone rays start at the source, so t_near is clamped to 0 there.
void intersect_cube(Ray& ray, double edge, bool clamp_at_origin);

Ray ray_for_pixel(const ConeBeamGeometry& geom, double theta_deg, int u, int v, double volume_edge = 1.0);

// Per-view frame so that per-pixel rays can be produced without repeating the
// trig; ray_for_pixel is a thin wrapper around this.
class ViewFrame {
public:
    ViewFrame(const ConeBeamGeometry& geom, double theta_deg, double volume_edge);

    Ray ray(int u, int v) const;

private:
    int nu_;
    int nv_;
    double pitch_;
    double sdd_;
    BeamMode mode_;
    double edge_;
    Vec3 source_;
    Vec3 axis_;
    Vec3 u_axis_;
    Vec3 v_axis_;
};

} // namespace ineat
