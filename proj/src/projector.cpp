#include "ineat/projector.hpp"

#include <algorithm>

namespace ineat {

std::vector<double> ProjectionSet::angles() const {
    std::vector<double> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(img.theta_deg);
    return out;
}

void ProjectionSet::validate() const {
    geometry.validate();
    for (const auto& img : images) {
        require(img.nu == geometry.det_nu && img.nv == geometry.det_nv, "ProjectionSet: image dims differ from geometry");
        for (float v : img.data) require(std::isfinite(v), "ProjectionSet: non-finite pixel");
    }
}

simd::DenseRay dense_ray(const DenseVolume& field, const RayQuadrature& q) {
    const double half = 0.5 * field.extent_edge();
    const double h[3] = {field.extent_edge() / field.nx(), field.extent_edge() / field.ny(), field.extent_edge() / field.nz()};
    simd::DenseRay r;
    r.data = field.payload().data();
    r.n[0] = field.nx();
    r.n[1] = field.ny();
    r.n[2] = field.nz();
    for (int a = 0; a < 3; ++a) {
        r.origin[a] = (q.origin[a] + half) / h[a] - 0.5;
        r.slope[a] = q.direction[a] / h[a];
    }
    r.t0 = q.t0;
    r.dt = q.weight;
    r.count = q.count;
    return r;
}

double default_step(const DenseVolume& field) {
    const double e = field.extent_edge();
    return 0.5 * std::min({e / field.nx(), e / field.ny(), e / field.nz()});
}

double default_step(const OctreeVolume& field) {
    return 0.5 * field.extent_edge() / field.config().effective_resolution();
}

} // namespace ineat
