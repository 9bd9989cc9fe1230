#pragma once

// Discretised line integrals through a density field (attenuation domain:
// each pixel stores ∫σ dt, i.e. the source log-intensity is taken as 0) and
// the exact adjoint that spreads per-pixel weights back onto the field.

#include "ineat/error.hpp"
#include "ineat/field.hpp"
#include "ineat/geometry.hpp"
#include "ineat/image.hpp"
#include "ineat/kernels.hpp"
#include "ineat/parallel.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace ineat {

struct ProjectionSet {
    ConeBeamGeometry geometry;
    std::vector<ProjectionImage> images;
    double source_log_intensity = 0.0;

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }
    std::vector<double> angles() const;
    void validate() const;
};

// Σ_k sample(point_k) · weight. Fields walk their own lattice along the ray
// (visit_ray) so forward and adjoint share one discretisation.
template <class Field>
double ray_integral(const Field& field, const RayQuadrature& q) {
    if (q.count == 0) return 0.0;
    const float* data = field.payload().data();
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    int k = 0;
    field.visit_ray(q, [&](const std::size_t* idx, const double* w, int count) {
        acc[k++ & 3] += detail::stencil_sum(idx, w, count, data);
    });
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) * q.weight;
}

template <class Field>
void ray_scatter(const Field& field, FieldGradient& grad, const RayQuadrature& q, double value) {
    const double w = value * q.weight;
    if (w == 0.0 || q.count == 0) return;
    double* g = grad.values.data();
    field.visit_ray(q, [&](const std::size_t* idx, const double* wt, int count) {
        for (int i = 0; i < count; ++i) g[idx[i]] += w * wt[i];
    });
}

simd::DenseRay dense_ray(const DenseVolume& field, const RayQuadrature& q);

inline double ray_integral(const DenseVolume& field, const RayQuadrature& q) {
    if (q.count == 0) return 0.0;
    return simd::active().ray_sum(dense_ray(field, q)) * q.weight;
}

inline void ray_scatter(const DenseVolume& field, FieldGradient& grad, const RayQuadrature& q, double value) {
    const double w = value * q.weight;
    if (w == 0.0 || q.count == 0) return;
    simd::active().ray_scatter(dense_ray(field, q), grad.values.data(), w);
}

// Half of the finest sample pitch.
double default_step(const DenseVolume& field);
double default_step(const OctreeVolume& field);

inline void check_step(double step) {
    if (!(step > 0.0) || !std::isfinite(step)) fail(ErrorKind::invalid_argument, "projector: step must be > 0");
}

// Calls fn(u, v, quadrature) for every detector pixel of one view, rows in
// parallel.
template <class Fn>
void for_each_pixel_ray(const ConeBeamGeometry& geom, double theta_deg, double volume_edge, double step, Fn&& fn,
                        bool parallel_rows = true) {
    const ViewFrame frame(geom, theta_deg, volume_edge);
    auto row = [&](std::size_t v) {
        for (int u = 0; u < geom.det_nu; ++u) fn(u, static_cast<int>(v), make_quadrature(frame.ray(u, static_cast<int>(v)), step));
    };
    if (parallel_rows) {
        parallel_for(static_cast<std::size_t>(geom.det_nv), row);
    } else {
        for (std::size_t v = 0; v < static_cast<std::size_t>(geom.det_nv); ++v) row(v);
    }
}

// Line integrals of one view in double precision, row-major like Image.
template <class Field>
std::vector<double> forward_project_exact(const Field& field, const ConeBeamGeometry& geom, double theta_deg,
                                          double step, bool parallel_rows = true) {
    check_step(step);
    geom.validate();
    std::vector<double> out(geom.pixel_count(), 0.0);
    for_each_pixel_ray(
        geom, theta_deg, field.extent_edge(), step,
        [&](int u, int v, const RayQuadrature& q) {
            out[static_cast<std::size_t>(v) * geom.det_nu + u] = ray_integral(field, q);
        },
        parallel_rows);
    return out;
}

template <class Field>
ProjectionImage forward_project(const Field& field, const ConeBeamGeometry& geom, double theta_deg, double step) {
    const auto exact = forward_project_exact(field, geom, theta_deg, step);
    ProjectionImage img(geom.det_nu, geom.det_nv, theta_deg);
    for (std::size_t i = 0; i < exact.size(); ++i) img.data[i] = static_cast<float>(exact[i]);
    return img;
}

// One image per angle, in order. This is the dense reprojection operator when
// fed a fine angle grid.
template <class Field>
ProjectionSet forward_project_set(const Field& field, const ConeBeamGeometry& geom, std::span<const double> angles_deg,
                                  double step) {
    require(!angles_deg.empty(), "forward_project_set: no angles");
    check_step(step);
    geom.validate();
    ProjectionSet set;
    set.geometry = geom;
    set.images.resize(angles_deg.size());
    parallel_for(angles_deg.size(), [&](std::size_t i) {
        const auto exact = forward_project_exact(field, geom, angles_deg[i], step, false);
        ProjectionImage img(geom.det_nu, geom.det_nv, angles_deg[i]);
        for (std::size_t p = 0; p < exact.size(); ++p) img.data[p] = static_cast<float>(exact[p]);
        set.images[i] = std::move(img);
    });
    return set;
}

template <class Field>
ProjectionSet forward_project_set(const Field& field, const ConeBeamGeometry& geom, const AngleSequence& angles,
                                  double step) {
    return forward_project_set(field, geom, std::span<const double>(angles.angles_deg), step);
}

// gradient += Aᵀ·residual for one view, using the forward quadrature exactly.
// Runs serially: the gradient buffer belongs to the caller's worker.
template <class Field>
void backproject_gradient(const Field& field, FieldGradient& gradient, const ConeBeamGeometry& geom, double theta_deg,
                          std::span<const double> residual, double step) {
    check_step(step);
    geom.validate();
    require(residual.size() == geom.pixel_count(), "backproject_gradient: residual size does not match detector");
    require(gradient.size() == field.payload_size(), "backproject_gradient: gradient not congruent with field");
    for_each_pixel_ray(
        geom, theta_deg, field.extent_edge(), step,
        [&](int u, int v, const RayQuadrature& q) {
            ray_scatter(field, gradient, q, residual[static_cast<std::size_t>(v) * geom.det_nu + u]);
        },
        false);
}

template <class Field>
void backproject_gradient(const Field& field, FieldGradient& gradient, const ConeBeamGeometry& geom, double theta_deg,
                          const Image& residual, double step) {
    require(residual.nu == geom.det_nu && residual.nv == geom.det_nv,
            "backproject_gradient: residual dims do not match detector");
    std::vector<double> r(residual.data.begin(), residual.data.end());
    backproject_gradient(field, gradient, geom, theta_deg, std::span<const double>(r), step);
}

} // namespace ineat
