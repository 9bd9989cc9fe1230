#include "ineat/geometry.hpp"

#include "ineat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace ineat {

double wrap_360(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) w += 360.0;
    if (w >= 360.0) w -= 360.0;
    return w;
}

double wrap_180(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

double circular_distance(double a_deg, double b_deg) { return std::abs(wrap_180(a_deg - b_deg)); }

std::string_view to_string(BeamMode mode) { return mode == BeamMode::cone ? "cone" : "parallel"; }

BeamMode beam_mode_from_string(std::string_view s) {
    if (s == "cone") return BeamMode::cone;
    if (s == "parallel") return BeamMode::parallel;
    fail(ErrorKind::invalid_argument, "unknown beam_mode '" + std::string(s) + "'");
}

void ConeBeamGeometry::validate() const {
    require(sad > 0.0, "geometry: sad must be > 0");
    if (beam_mode == BeamMode::cone) require(sdd > sad, "geometry: sdd must exceed sad in cone mode");
    require(det_nu >= 1 && det_nv >= 1, "geometry: detector needs at least one pixel per axis");
    require(det_pitch > 0.0, "geometry: det_pitch must be > 0");
}

std::string_view to_string(AngleProvenance p) {
    switch (p) {
    case AngleProvenance::uniform: return "uniform";
    case AngleProvenance::perturbed: return "perturbed";
    case AngleProvenance::accelerated: return "accelerated";
    case AngleProvenance::combined: return "combined";
    case AngleProvenance::corrected: return "corrected";
    }
    return "uniform";
}

AngleProvenance provenance_from_string(std::string_view s) {
    for (auto p : {AngleProvenance::uniform, AngleProvenance::perturbed, AngleProvenance::accelerated,
                   AngleProvenance::combined, AngleProvenance::corrected}) {
        if (to_string(p) == s) return p;
    }
    fail(ErrorKind::invalid_argument, "unknown angle provenance '" + std::string(s) + "'");
}

AngleSequence uniform_angles(int n, double d_deg) {
    require(n >= 1, "uniform_angles: need at least one view");
    require(d_deg > 0.0, "uniform_angles: increment must be > 0");
    AngleSequence seq;
    seq.angles_deg.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) seq.angles_deg[static_cast<std::size_t>(i)] = i * d_deg;
    seq.provenance = AngleProvenance::uniform;
    return seq;
}

std::vector<double> uniform_jitter(std::size_t count, double bound, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> out(count);
    for (auto& x : out) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        x = bound * (2.0 * u - 1.0);
    }
    return out;
}

namespace {

void check_common(const TrajectoryConfig& cfg) {
    require(cfg.n_views >= 1, "trajectory: n_views must be >= 1");
    require(cfg.d_deg > 0.0, "trajectory: d_deg must be > 0");
    require(cfg.delta_max >= 0.0, "trajectory: delta_max must be >= 0");
    require(cfg.delta_max == 0.0 || cfg.delta_max < cfg.d_deg,
            "trajectory: delta_max must be smaller than d_deg (angles would stop increasing)");
}

// Closed-form positions of the trapezoidal ramp; the ramp integral is exact at
// the ramp ends so the total sweep is (n-1)·d - d·N_a without accumulated error.
std::vector<double> ramp_positions(const TrajectoryConfig& cfg, int na) {
    const int n = cfg.n_views;
    const double d = cfg.d_deg;
    const int last = n - 1;
    const double total = last * d - d * na;
    std::vector<double> pos(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double v;
        if (k <= na) {
            v = d * static_cast<double>(k) * static_cast<double>(k) / (2.0 * na);
        } else if (k >= last - na) {
            const double j = static_cast<double>(last - k);
            v = total - d * j * j / (2.0 * na);
        } else {
            v = d * na / 2.0 + d * (k - na);
        }
        pos[static_cast<std::size_t>(k)] = v;
    }
    return pos;
}

} // namespace

int ramp_length(const TrajectoryConfig& cfg) {
    require(cfg.accel > 0.0, "trajectory: accel must be > 0");
    require(cfg.d_deg > 0.0, "trajectory: d_deg must be > 0");
    const double ratio = cfg.d_deg / cfg.accel;
    const double rounded = std::round(ratio);
    require(rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio),
            "trajectory: d_deg / accel must be a positive integer");
    return static_cast<int>(rounded);
}

AngleSequence perturbed_angles(const TrajectoryConfig& cfg) {
    check_common(cfg);
    require(cfg.accel == 0.0, "perturbed_angles: accel must be 0 (use combined_angles)");
    const auto n = static_cast<std::size_t>(cfg.n_views);
    const auto jitter = uniform_jitter(n - 1, cfg.delta_max, cfg.seed);
    AngleSequence seq;
    seq.angles_deg.resize(n);
    double offset = 0.0;
    seq.angles_deg[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        offset += jitter[k - 1];
        seq.angles_deg[k] = static_cast<double>(k) * cfg.d_deg + offset;
    }
    seq.provenance = AngleProvenance::perturbed;
    seq.seed = cfg.seed;
    return seq;
}

AngleSequence accel_angles(const TrajectoryConfig& cfg) {
    check_common(cfg);
    const int na = ramp_length(cfg);
    require(cfg.n_views > 2 * na, "accel_angles: acceleration and deceleration ramps overlap");
    AngleSequence seq;
    seq.angles_deg = ramp_positions(cfg, na);
    seq.provenance = AngleProvenance::accelerated;
    return seq;
}

AngleSequence combined_angles(const TrajectoryConfig& cfg) {
    check_common(cfg);
    const int na = ramp_length(cfg);
    require(cfg.n_views > 2 * na, "combined_angles: acceleration and deceleration ramps overlap");
    auto pos = ramp_positions(cfg, na);
    const auto jitter = uniform_jitter(pos.size() - 1, cfg.delta_max, cfg.seed);
    double offset = 0.0;
    for (std::size_t k = 1; k < pos.size(); ++k) {
        offset += jitter[k - 1];
        pos[k] += offset;
    }
    AngleSequence seq;
    seq.angles_deg = std::move(pos);
    seq.provenance = AngleProvenance::combined;
    seq.seed = cfg.seed;
    return seq;
}

void intersect_cube(Ray& ray, double edge, bool clamp_at_origin) {
    const double half = 0.5 * edge;
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a];
        const double d = ray.direction[a];
        if (std::abs(d) < 1e-300) {
            if (o < -half || o > half) {
                ray.hits = false;
                ray.t_near = ray.t_far = 0.0;
                return;
            }
            continue;
        }
        double ta = (-half - o) / d;
        double tb = (half - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (clamp_at_origin) t0 = std::max(t0, 0.0);
    ray.hits = t0 < t1;
    ray.t_near = ray.hits ? t0 : 0.0;
    ray.t_far = ray.hits ? t1 : 0.0;
}

ViewFrame::ViewFrame(const ConeBeamGeometry& geom, double theta_deg, double volume_edge)
    : nu_(geom.det_nu), nv_(geom.det_nv), pitch_(geom.det_pitch), sdd_(geom.sdd), mode_(geom.beam_mode),
      edge_(volume_edge) {
    const double th = deg_to_rad(theta_deg);
    const double c = std::cos(th);
    const double s = std::sin(th);
    source_ = Vec3{geom.sad * c, geom.sad * s, 0.0};
    axis_ = Vec3{-c, -s, 0.0};
    u_axis_ = Vec3{-s, c, 0.0};
    v_axis_ = Vec3{0.0, 0.0, 1.0};
}

Ray ViewFrame::ray(int u, int v) const {
    if (u < 0 || u >= nu_ || v < 0 || v >= nv_) {
        fail(ErrorKind::invalid_argument, "ray_for_pixel: pixel index out of range");
    }
    const double uc = (u - 0.5 * (nu_ - 1)) * pitch_;
    const double vc = (v - 0.5 * (nv_ - 1)) * pitch_;
    Ray r;
    if (mode_ == BeamMode::cone) {
        const Vec3 pixel = source_ + axis_ * sdd_ + u_axis_ * uc + v_axis_ * vc;
        r.origin = source_;
        r.direction = normalized(pixel - source_);
        intersect_cube(r, edge_, true);
    } else {
        r.origin = source_ + u_axis_ * uc + v_axis_ * vc;
        r.direction = axis_;
        intersect_cube(r, edge_, false);
    }
    return r;
}

Ray ray_for_pixel(const ConeBeamGeometry& geom, double theta_deg, int u, int v, double volume_edge) {
    geom.validate();
    return ViewFrame(geom, theta_deg, volume_edge).ray(u, v);
}

} // namespace ineat
