#include "ineat/phantom.hpp"

#include "ineat/error.hpp"

#include <cmath>

namespace ineat {

void SpiralPhantomConfig::validate() const {
    require(n_cubes >= 0, "phantom: n_cubes must be >= 0");
    require(cube_edge > 0.0 && cube_edge < 1.0, "phantom: cube_edge must be in (0, 1)");
    require(r_start >= 0.0 && r_start < r_end, "phantom: need 0 <= r_start < r_end");
    require(density > 0.0, "phantom: density must be > 0");
    require(resolution >= 8, "phantom: resolution must be >= 8");
    require(extent_edge > 0.0, "phantom: extent_edge must be > 0");
    const double half = 0.5 * extent_edge;
    const double h = 0.5 * cube_edge * extent_edge;
    for (const auto& c : cube_centers()) {
        for (int a = 0; a < 3; ++a) {
            require(c[a] - h >= -half && c[a] + h <= half, "phantom: a cube would exit the volume");
        }
    }
}

std::vector<Vec3> SpiralPhantomConfig::cube_centers() const {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(std::max(n_cubes, 0)));
    const double half = 0.5 * extent_edge;
    for (int k = 0; k < n_cubes; ++k) {
        const double t = n_cubes > 1 ? static_cast<double>(k) / (n_cubes - 1) : 0.0;
        const double phi = 2.0 * kPi * turns * t;
        const double r = (r_start + (r_end - r_start) * t) * half;
        const double z = (-0.5 + cube_edge + (1.0 - 2.0 * cube_edge) * t) * extent_edge;
        out.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return out;
}

DenseVolume spiral_cube_phantom(const SpiralPhantomConfig& cfg) {
    cfg.validate();
    const int n = cfg.resolution;
    DenseVolume vol(n, n, n, cfg.extent_edge);
    const double h = 0.5 * cfg.cube_edge * cfg.extent_edge;
    const auto density = static_cast<float>(cfg.density);
    for (const auto& c : cfg.cube_centers()) {
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const Vec3 p = vol.voxel_center(i, j, k);
                    if (std::abs(p.x - c.x) <= h && std::abs(p.y - c.y) <= h && std::abs(p.z - c.z) <= h) {
                        vol.at(i, j, k) = density;
                    }
                }
    }
    return vol;
}

AngleSequence simulate_trajectory(const TrajectoryRecord& record) {
    const auto& c = record.config;
    if (record.kind == "uniform") return uniform_angles(c.n_views, c.d_deg);
    if (record.kind == "perturbed") return perturbed_angles(c);
    if (record.kind == "accelerated") return accel_angles(c);
    if (record.kind == "combined") return combined_angles(c);
    fail(ErrorKind::invalid_argument, "trajectory: unknown kind '" + record.kind + "'");
}

Dataset make_dataset(const DenseVolume& volume, const ConeBeamGeometry& geom, const AngleSequence& angles_true,
                     double step) {
    volume.validate();
    require(angles_true.size() >= 1, "make_dataset: no angles");
    Dataset ds;
    ds.projections = forward_project_set(volume, geom, angles_true, step);
    const int n = static_cast<int>(angles_true.size());
    ds.manifest.geometry = geom;
    ds.manifest.angles_assumed = uniform_angles(n, 360.0 / n);
    ds.manifest.angles_true = angles_true;
    for (std::size_t i = 0; i < ds.projections.images.size(); ++i) {
        ds.projections.images[i].theta_deg = ds.manifest.angles_assumed[i];
    }
    return ds;
}

} // namespace ineat
