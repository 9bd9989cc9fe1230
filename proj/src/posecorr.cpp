#include "ineat/posecorr.hpp"

#include "ineat/error.hpp"
#include "ineat/kernels.hpp"
#include "ineat/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ineat {

std::string_view to_string(RerunMode mode) { return mode == RerunMode::reinit ? "reinit" : "warm"; }

RerunMode rerun_mode_from_string(std::string_view s) {
    if (s == "reinit") return RerunMode::reinit;
    if (s == "warm") return RerunMode::warm;
    fail(ErrorKind::invalid_argument, "unknown rerun_mode '" + std::string(s) + "'");
}

void PoseCorrectionConfig::validate() const {
    require(grid_step_deg > 0.0 && std::isfinite(grid_step_deg), "posecorr: grid_step_deg must be > 0");
    require(sweep_deg > 0.0 && sweep_deg <= 360.0, "posecorr: sweep_deg must be in (0, 360]");
    require(!search_window_deg || *search_window_deg > 0.0, "posecorr: search_window_deg must be > 0");
    require(max_outer_iters >= 0, "posecorr: max_outer_iters must be >= 0");
    require(eps_theta() > 0.0, "posecorr: eps_theta_deg must be > 0");
    require(coarse_epochs >= 1, "posecorr: coarse_epochs must be >= 1");
    require(bank_size() >= 1, "posecorr: empty reprojection grid");
}

int PoseCorrectionConfig::bank_size() const { return static_cast<int>(std::lround(sweep_deg / grid_step_deg)); }

SsimConstants SsimConstants::for_range(double dynamic_range) {
    require(dynamic_range > 0.0 && std::isfinite(dynamic_range), "ssim: dynamic range must be > 0");
    const double a = 0.01 * dynamic_range, b = 0.03 * dynamic_range;
    return {a * a, b * b, dynamic_range};
}

SsimConstants ssim_constants(const ProjectionSet& inputs) {
    float peak = 0.0f;
    for (const auto& img : inputs.images)
        for (float v : img.data) peak = std::max(peak, v);
    return SsimConstants::for_range(peak > 0.0f ? peak : 1.0);
}

ImageMoments moments(const Image& img) {
    const auto n = static_cast<double>(img.data.size());
    const double mean = simd::sum(img.pixels()) / n;
    return {mean, simd::dot(img.pixels(), img.pixels()) / n - mean * mean};
}

double ssim(const Image& a, const ImageMoments& ma, const Image& b, const ImageMoments& mb, const SsimConstants& k) {
    const auto n = static_cast<double>(a.data.size());
    const double cov = simd::dot(a.pixels(), b.pixels()) / n - ma.mean * mb.mean;
    const double num = (2.0 * ma.mean * mb.mean + k.c1) * (2.0 * cov + k.c2);
    const double den = (ma.mean * ma.mean + mb.mean * mb.mean + k.c1) * (ma.var + mb.var + k.c2);
    return std::clamp(num / den, -1.0, 1.0);
}

double ssim(const Image& a, const Image& b, const SsimConstants& k) {
    require(a.nu == b.nu && a.nv == b.nv, "ssim: image dimensions differ");
    require(!a.data.empty(), "ssim: empty images");
    require(k.c1 > 0.0 && k.c2 > 0.0, "ssim: constants must be > 0");
    return ssim(a, moments(a), b, moments(b), k);
}

ProjectionSet dense_reproject(const Field& field, const ConeBeamGeometry& geom, const PoseCorrectionConfig& cfg,
                              double step) {
    return std::visit([&](const auto& f) { return dense_reproject(f, geom, cfg, step); }, field);
}

double mean_abs_change(const AngleSequence& a, const AngleSequence& b) {
    require(a.size() == b.size(), "mean_abs_change: lengths differ");
    if (a.size() == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += circular_distance(a[i], b[i]);
    return s / static_cast<double>(a.size());
}

MatchResult match_angles(const ProjectionSet& inputs, const ProjectionSet& bank, const PoseCorrectionConfig& cfg,
                         const AngleSequence& current, const SsimConstants& k) {
    require(inputs.size() == current.size(), "match_angles: one current angle per input required");
    require(!bank.empty(), "match_angles: empty bank");
    require(k.c1 > 0.0 && k.c2 > 0.0, "match_angles: SSIM constants must be > 0");
    for (std::size_t j = 1; j < bank.size(); ++j) {
        require(bank.images[j].theta_deg > bank.images[j - 1].theta_deg, "match_angles: bank angles must increase");
    }
    for (const auto& img : inputs.images) {
        require(img.nu == bank.images[0].nu && img.nv == bank.images[0].nv, "match_angles: image dimensions differ");
    }
    std::vector<ImageMoments> bank_m(bank.size());
    parallel_for(bank.size(), [&](std::size_t j) { bank_m[j] = moments(bank.images[j]); });

    MatchResult res;
    res.angles.provenance = AngleProvenance::corrected;
    res.angles.angles_deg.resize(inputs.size());
    res.report.entries.resize(inputs.size());
    std::vector<int> empty(inputs.size(), 0);
    parallel_for(inputs.size(), [&](std::size_t i) {
        const Image& img = inputs.images[i];
        const ImageMoments mi = moments(img);
        const double cur = current[i];
        std::size_t best = bank.size();
        double best_score = 0.0, best_dist = 0.0;
        for (std::size_t j = 0; j < bank.size(); ++j) {
            const double angle = bank.images[j].theta_deg;
            const double dist = circular_distance(angle, cur);
            if (cfg.search_window_deg && dist > *cfg.search_window_deg) continue;
            const double s = ssim(img, mi, bank.images[j], bank_m[j], k);
            // Bank angles increase, so an exact tie in score and distance
            // keeps the earlier (smaller) angle.
            if (best == bank.size() || s > best_score || (s == best_score && dist < best_dist)) {
                best = j;
                best_score = s;
                best_dist = dist;
            }
        }
        if (best == bank.size()) {
            empty[i] = 1;
            return;
        }
        res.angles.angles_deg[i] = bank.images[best].theta_deg;
        res.report.entries[i] = {i, cur, bank.images[best].theta_deg, best_score};
    });
    for (std::size_t i = 0; i < empty.size(); ++i) {
        if (empty[i]) fail(ErrorKind::invalid_argument, "match_angles: no candidate within the search window for view " + std::to_string(i));
    }
    res.report.mean_abs_change_deg = mean_abs_change(res.angles, current);
    return res;
}

MatchResult match_angles(const ProjectionSet& inputs, const ProjectionSet& bank, const PoseCorrectionConfig& cfg,
                         const AngleSequence& current) {
    return match_angles(inputs, bank, cfg, current, ssim_constants(inputs));
}

IneatResult ineat(const ProjectionSet& projections, const ReconConfig& recon_cfg, const PoseCorrectionConfig& pose_cfg) {
    recon_cfg.validate();
    pose_cfg.validate();
    require(!projections.empty(), "ineat: no projections");
    require(static_cast<std::size_t>(pose_cfg.bank_size()) >= projections.size(),
            "ineat: reprojection grid is coarser than the view count");

    IneatResult out;
    out.angles.angles_deg = projections.angles();
    out.angles.provenance = AngleProvenance::uniform;
    const SsimConstants k = ssim_constants(projections);

    ReconConfig coarse = recon_cfg;
    coarse.epochs = pose_cfg.coarse_epochs;
    std::optional<Field> field;
    for (int it = 0; it < pose_cfg.max_outer_iters; ++it) {
        const Field* start = pose_cfg.rerun_mode == RerunMode::warm && field ? &*field : nullptr;
        ReconResult rec = reconstruct(projections, out.angles, coarse, start);
        out.coarse_reports.push_back(std::move(rec.report));
        field = std::move(rec.field);

        const double step = recon_cfg.step > 0.0 ? recon_cfg.step : default_step(*field);
        const ProjectionSet bank = dense_reproject(*field, projections.geometry, pose_cfg, step);
        MatchResult m = match_angles(projections, bank, pose_cfg, out.angles, k);
        if (pose_cfg.anchor_first_view) {
            const double shift = out.angles[0] - m.angles[0];
            for (std::size_t i = 0; i < m.angles.size(); ++i) {
                m.angles.angles_deg[i] = wrap_360(m.angles.angles_deg[i] + shift);
                m.report.entries[i].new_deg = m.angles.angles_deg[i];
            }
            m.report.mean_abs_change_deg = mean_abs_change(m.angles, out.angles);
        }
        m.report.iteration = it;
        const double change = m.report.mean_abs_change_deg;
        out.angles = std::move(m.angles);
        out.reports.push_back(std::move(m.report));
        out.outer_iterations = it + 1;
        if (change < pose_cfg.eps_theta()) {
            out.converged = true;
            break;
        }
    }

    const Field* start = pose_cfg.rerun_mode == RerunMode::warm && field ? &*field : nullptr;
    ReconResult fin = reconstruct(projections, out.angles, recon_cfg, start);
    out.field = std::move(fin.field);
    out.final_report = std::move(fin.report);
    return out;
}

} // namespace ineat
