#pragma once

// Full-batch gradient descent on Σ_i ‖A_i σ − I_i‖² + λ·TV(σ) from a zero
// field, with optional octree refinement between epochs.

#include "ineat/error.hpp"
#include "ineat/field.hpp"
#include "ineat/projector.hpp"

#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace ineat {

// Storage used for the unknown densities. `dense` is a plain grid at
// `resolution`; the octree modes follow OctreeMode.
enum class FieldMode { dense, global, adaptive };

std::string_view to_string(FieldMode mode);
FieldMode field_mode_from_string(std::string_view s);

struct ReconConfig {
    int epochs = 200;
    // Fraction of the largest stable step 1/‖AᵀA‖.
    double learning_rate = 0.9;
    // TV weight relative to the mean squared projection value.
    double lambda_tv = 1e-3;
    double step = 0.0;  // quadrature step; 0 = half the finest pitch
    FieldMode octree_mode = FieldMode::dense;
    int resolution = 64;
    OctreeConfig octree{4, 2, 4, 1.0};
    int refine_every = 10;
    double tau_split = 0.1;
    double tau_prune = 0.02;
    bool nonneg_clamp = true;

    void validate() const;
};

struct ReconReport {
    // Per epoch, evaluated at the iterate the epoch's gradient was taken at.
    std::vector<double> loss;
    std::vector<double> data_loss;
    std::vector<double> tv;
    double final_data_loss = 0.0;
    double final_tv = 0.0;
    double eta = 0.0;
    double lambda = 0.0;  // absolute TV weight used
    int refinements = 0;
    double wall_seconds = 0.0;
};

using Field = std::variant<DenseVolume, OctreeVolume>;

struct ReconResult {
    Field field;
    ReconReport report;
};

// Raised by the divergence guard; carries the history up to the abort.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, ReconReport partial)
        : Error(ErrorKind::divergence, what), partial_(std::move(partial)) {}
    const ReconReport& partial() const { return partial_; }

private:
    ReconReport partial_;
};

Field make_field(const ReconConfig& cfg, double extent_edge = 1.0);
double extent_edge(const Field& field);
double default_step(const Field& field);
// Samples the field at the voxel centres of an n³ grid over its extent.
DenseVolume export_dense(const Field& field, int n);

double data_loss(const DenseVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg, double step);
double data_loss(const OctreeVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg, double step);
double data_loss(const Field& field, const ProjectionSet& projections, std::span<const double> angles_deg, double step);
double tv_penalty(const Field& field);

// Gradient of data_loss + lambda·TV, accumulated in fixed view chunks merged
// in chunk order, so the result does not depend on the worker count.
// Returns the data loss at `field`.
double loss_gradient(const DenseVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                     double step, double lambda, FieldGradient& grad);
double loss_gradient(const OctreeVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                     double step, double lambda, FieldGradient& grad);

// Largest eigenvalue of AᵀA for these angles, by power iteration.
double normal_operator_norm(const DenseVolume& field, const ConeBeamGeometry& geom, std::span<const double> angles_deg,
                            double step, int iterations = 12);
double normal_operator_norm(const OctreeVolume& field, const ConeBeamGeometry& geom, std::span<const double> angles_deg,
                            double step, int iterations = 12);

// Split scores + refine with the configured thresholds. No-op unless the
// tree is adaptive.
void refine_pass(OctreeVolume& field, const ReconConfig& cfg);

// lambda_tv × mean of y² over every projection pixel.
double tv_weight(const ProjectionSet& projections, double lambda_tv);

// `start` warm-starts from an existing field of the configured mode instead of
// zeros.
ReconResult reconstruct(const ProjectionSet& projections, const AngleSequence& angles, const ReconConfig& cfg,
                        const Field* start = nullptr);

} // namespace ineat
