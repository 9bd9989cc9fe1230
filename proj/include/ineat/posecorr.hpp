#pragma once

// Pose correction by projection matching: reconstruct a coarse volume under
// the current angles, reproject it on a fine angular grid, move every view to
// the grid angle whose reprojection is most similar (global SSIM), repeat.

#include "ineat/geometry.hpp"
#include "ineat/image.hpp"
#include "ineat/projector.hpp"
#include "ineat/recon.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace ineat {

enum class RerunMode { reinit, warm };

std::string_view to_string(RerunMode mode);
RerunMode rerun_mode_from_string(std::string_view s);

struct PoseCorrectionConfig {
    double grid_step_deg = 0.1;
    double sweep_deg = 360.0;
    std::optional<double> search_window_deg;
    int max_outer_iters = 5;
    std::optional<double> eps_theta_deg;  // unset: grid_step_deg
    RerunMode rerun_mode = RerunMode::reinit;
    int coarse_epochs = 150;
    // Rotate each corrected set so view 0 keeps its initial angle; the
    // matching alone only fixes angles up to a common offset.
    bool anchor_first_view = true;

    void validate() const;
    int bank_size() const;
    double eps_theta() const { return eps_theta_deg.value_or(grid_step_deg); }
};

struct SsimConstants {
    double c1 = 1e-4;
    double c2 = 9e-4;
    double dynamic_range = 1.0;

    // c1 = (0.01·L)², c2 = (0.03·L)².
    static SsimConstants for_range(double dynamic_range);
};

// L = largest pixel over the set (1 when the set is all ≤ 0).
SsimConstants ssim_constants(const ProjectionSet& inputs);

// Whole-image mean and (biased) variance, the per-image half of SSIM.
struct ImageMoments {
    double mean = 0.0;
    double var = 0.0;
};

ImageMoments moments(const Image& img);

// Global single-window SSIM from means, variances and covariance over all
// pixels.
double ssim(const Image& a, const Image& b, const SsimConstants& k);
double ssim(const Image& a, const ImageMoments& ma, const Image& b, const ImageMoments& mb, const SsimConstants& k);

// Reprojections at k·grid_step for k = 0 … bank_size−1.
template <class F>
ProjectionSet dense_reproject(const F& field, const ConeBeamGeometry& geom, const PoseCorrectionConfig& cfg,
                              double step) {
    cfg.validate();
    const int m = cfg.bank_size();
    std::vector<double> angles(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) angles[static_cast<std::size_t>(k)] = k * cfg.grid_step_deg;
    return forward_project_set(field, geom, std::span<const double>(angles), step);
}

ProjectionSet dense_reproject(const Field& field, const ConeBeamGeometry& geom, const PoseCorrectionConfig& cfg,
                              double step);

struct MatchEntry {
    std::size_t view = 0;
    double old_deg = 0.0;
    double new_deg = 0.0;
    double ssim = 0.0;
};

struct MatchReport {
    int iteration = 0;
    std::vector<MatchEntry> entries;
    double mean_abs_change_deg = 0.0;
};

struct MatchResult {
    AngleSequence angles;
    MatchReport report;
};

// Independent argmax per view. Equal scores go to the candidate nearest the
// current angle (circularly), then to the smaller angle.
MatchResult match_angles(const ProjectionSet& inputs, const ProjectionSet& bank, const PoseCorrectionConfig& cfg,
                         const AngleSequence& current, const SsimConstants& k);
MatchResult match_angles(const ProjectionSet& inputs, const ProjectionSet& bank, const PoseCorrectionConfig& cfg,
                         const AngleSequence& current);

// Mean circular |a_i − b_i|.
double mean_abs_change(const AngleSequence& a, const AngleSequence& b);

struct IneatResult {
    Field field;
    AngleSequence angles;
    std::vector<MatchReport> reports;
    std::vector<ReconReport> coarse_reports;
    ReconReport final_report;
    int outer_iterations = 0;
    bool converged = false;
};

// Starts from the projections' own (assumed) angles.
IneatResult ineat(const ProjectionSet& projections, const ReconConfig& recon_cfg, const PoseCorrectionConfig& pose_cfg);

} // namespace ineat
