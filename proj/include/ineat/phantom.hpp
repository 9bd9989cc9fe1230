#pragma once

#include "ineat/field.hpp"
#include "ineat/geometry.hpp"
#include "ineat/projector.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ineat {

// Constant-density cubes on a rising helix whose radius grows from bottom to
// top; the result has no rotational symmetry about z.
struct SpiralPhantomConfig {
    int n_cubes = 12;
    double cube_edge = 0.08;  // fraction of the volume edge
    double r_start = 0.15;    // helix radius at the bottom, fraction of half-edge
    double r_end = 0.40;      // helix radius at the top
    double turns = 1.5;
    double density = 1.0;
    int resolution = 64;
    double extent_edge = 1.0;

    void validate() const;
    // World-space cube centres, bottom to top.
    std::vector<Vec3> cube_centers() const;
};

DenseVolume spiral_cube_phantom(const SpiralPhantomConfig& cfg);

// How the true trajectory was generated; stored in the manifest for the record.
struct TrajectoryRecord {
    std::string kind;  // uniform | perturbed | accelerated | combined
    TrajectoryConfig config;
};

AngleSequence simulate_trajectory(const TrajectoryRecord& record);

struct DatasetManifest {
    ConeBeamGeometry geometry;
    AngleSequence angles_assumed;
    std::optional<AngleSequence> angles_true;
    std::optional<AngleSequence> angles_corrected;
    std::vector<std::string> images;
    std::string value_convention = "line_integral";
    std::optional<TrajectoryRecord> trajectory;
};

struct Dataset {
    // Images carry the *assumed* angles; the truth only lives in the manifest.
    ProjectionSet projections;
    DatasetManifest manifest;
};

// Projects `volume` at every true angle. Assumed angles are uniform over a
// full turn with the same view count.
Dataset make_dataset(const DenseVolume& volume, const ConeBeamGeometry& geom, const AngleSequence& angles_true,
                     double step);

} // namespace ineat
