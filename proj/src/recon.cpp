#include "ineat/recon.hpp"

#include "ineat/kernels.hpp"
#include "ineat/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace ineat {

namespace {

constexpr std::size_t kViewsPerChunk = 8;

// Runs ray_fn(view, pixel_index, quadrature, gradient) for every ray of every
// view. Views are grouped in fixed chunks; each chunk fills a private buffer
// that is added to `out` in chunk order. Returns the sum of ray_fn's results
// in the same order.
template <class F, class RayFn>
double chunked_backprojection(const F& field, const ConeBeamGeometry& geom, std::span<const double> angles,
                              double step, FieldGradient& out, RayFn&& ray_fn) {
    const std::size_t n = angles.size();
    const std::size_t chunks = (n + kViewsPerChunk - 1) / kViewsPerChunk;
    const std::size_t wave = std::max<std::size_t>(1, std::min<std::size_t>(worker_count(), chunks));
    std::vector<FieldGradient> scratch(wave, field.make_gradient());
    std::vector<double> partial(wave, 0.0);
    double total = 0.0;
    for (std::size_t first = 0; first < chunks; first += wave) {
        const std::size_t count = std::min(wave, chunks - first);
        parallel_for(count, [&](std::size_t w) {
            FieldGradient& g = scratch[w];
            g.zero();
            double s = 0.0;
            const std::size_t c = first + w;
            const std::size_t end = std::min(n, (c + 1) * kViewsPerChunk);
            for (std::size_t i = c * kViewsPerChunk; i < end; ++i) {
                for_each_pixel_ray(
                    geom, angles[i], field.extent_edge(), step,
                    [&](int u, int v, const RayQuadrature& q) {
                        s += ray_fn(i, static_cast<std::size_t>(v) * geom.det_nu + u, q, g);
                    },
                    false);
            }
            partial[w] = s;
        });
        for (std::size_t w = 0; w < count; ++w) {
            simd::axpy(1.0, scratch[w].values, out.values);
            total += partial[w];
        }
    }
    return total;
}

void check_inputs(const ProjectionSet& projections, std::span<const double> angles_deg, double step) {
    check_step(step);
    projections.validate();
    require(projections.size() == angles_deg.size(), "recon: projection and angle counts differ");
}

template <class F>
double data_loss_impl(const F& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                      double step) {
    check_inputs(projections, angles_deg, step);
    std::vector<double> per_view(angles_deg.size(), 0.0);
    parallel_for(angles_deg.size(), [&](std::size_t i) {
        const auto exact = forward_project_exact(field, projections.geometry, angles_deg[i], step, false);
        const auto& y = projections.images[i].data;
        double s = 0.0;
        for (std::size_t p = 0; p < exact.size(); ++p) {
            const double r = exact[p] - y[p];
            s += r * r;
        }
        per_view[i] = s;
    });
    double total = 0.0;
    for (double s : per_view) total += s;
    return total;
}

template <class F>
double loss_gradient_impl(const F& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                          double step, double lambda, FieldGradient& grad) {
    check_inputs(projections, angles_deg, step);
    require(grad.size() == field.payload_size(), "loss_gradient: gradient not congruent with field");
    const double loss = chunked_backprojection(
        field, projections.geometry, angles_deg, step, grad,
        [&](std::size_t view, std::size_t pixel, const RayQuadrature& q, FieldGradient& g) {
            const double r = ray_integral(field, q) - projections.images[view].data[pixel];
            ray_scatter(field, g, q, 2.0 * r);
            return r * r;
        });
    if (lambda > 0.0) add_tv_gradient(field, grad, lambda);
    return loss;
}

// Power iteration on AᵀA from the all-ones payload. A has nonnegative entries,
// so the top eigenvector is positive and the start vector is already close.
template <class F>
double normal_operator_norm_impl(const F& field, const ConeBeamGeometry& geom, std::span<const double> angles_deg,
                                 double step, int iterations) {
    check_step(step);
    geom.validate();
    require(iterations >= 1, "normal_operator_norm: need at least one iteration");
    F x = field;
    std::fill(x.payload().begin(), x.payload().end(), 1.0f);
    double norm = 0.0;
    for (int it = 0; it < iterations; ++it) {
        FieldGradient y = x.make_gradient();
        chunked_backprojection(x, geom, angles_deg, step, y,
                               [&](std::size_t, std::size_t, const RayQuadrature& q, FieldGradient& g) {
                                   ray_scatter(x, g, q, ray_integral(x, q));
                                   return 0.0;
                               });
        const auto xp = x.payload();
        double xx = 0.0;
        for (float v : xp) xx += static_cast<double>(v) * v;
        double yy = 0.0;
        for (double v : y.values) yy += v * v;
        if (xx == 0.0 || yy == 0.0) return 0.0;
        norm = std::sqrt(yy / xx);
        const double scale = 1.0 / std::sqrt(yy);
        for (std::size_t i = 0; i < xp.size(); ++i) xp[i] = static_cast<float>(y.values[i] * scale);
    }
    return norm;
}

} // namespace

std::string_view to_string(FieldMode mode) {
    switch (mode) {
    case FieldMode::dense: return "dense";
    case FieldMode::global: return "global";
    case FieldMode::adaptive: return "adaptive";
    }
    return "?";
}

FieldMode field_mode_from_string(std::string_view s) {
    if (s == "dense") return FieldMode::dense;
    if (s == "global") return FieldMode::global;
    if (s == "adaptive") return FieldMode::adaptive;
    fail(ErrorKind::invalid_argument, "unknown octree_mode '" + std::string(s) + "'");
}

void ReconConfig::validate() const {
    require(epochs >= 1, "recon: epochs must be >= 1");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "recon: learning_rate must be > 0");
    require(lambda_tv >= 0.0 && std::isfinite(lambda_tv), "recon: lambda_tv must be >= 0");
    require(step >= 0.0 && std::isfinite(step), "recon: step must be >= 0 (0 selects the default)");
    require(resolution >= 2, "recon: resolution must be >= 2");
    require(refine_every >= 0, "recon: refine_every must be >= 0");
    require(tau_split >= 0.0 && tau_prune >= 0.0, "recon: thresholds must be >= 0");
    octree.validate();
}

Field make_field(const ReconConfig& cfg, double extent_edge) {
    if (cfg.octree_mode == FieldMode::dense) {
        return DenseVolume(cfg.resolution, cfg.resolution, cfg.resolution, extent_edge);
    }
    OctreeConfig oc = cfg.octree;
    oc.extent_edge = extent_edge;
    return OctreeVolume::init(cfg.octree_mode == FieldMode::global ? OctreeMode::global : OctreeMode::adaptive, oc);
}

double extent_edge(const Field& field) {
    return std::visit([](const auto& f) { return f.extent_edge(); }, field);
}

double default_step(const Field& field) {
    return std::visit([](const auto& f) { return default_step(f); }, field);
}

DenseVolume export_dense(const Field& field, int n) {
    if (const auto* d = std::get_if<DenseVolume>(&field)) {
        if (d->nx() == n && d->ny() == n && d->nz() == n) return *d;
        DenseVolume out(n, n, n, d->extent_edge());
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) out.at(i, j, k) = static_cast<float>(d->sample(out.voxel_center(i, j, k)));
        return out;
    }
    return std::get<OctreeVolume>(field).to_dense(n, n, n);
}

double data_loss(const DenseVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                 double step) {
    return data_loss_impl(field, projections, angles_deg, step);
}

double data_loss(const OctreeVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                 double step) {
    return data_loss_impl(field, projections, angles_deg, step);
}

double data_loss(const Field& field, const ProjectionSet& projections, std::span<const double> angles_deg, double step) {
    return std::visit([&](const auto& f) { return data_loss(f, projections, angles_deg, step); }, field);
}

double tv_penalty(const Field& field) {
    return std::visit([](const auto& f) { return tv_penalty(f); }, field);
}

double loss_gradient(const DenseVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                     double step, double lambda, FieldGradient& grad) {
    return loss_gradient_impl(field, projections, angles_deg, step, lambda, grad);
}

double loss_gradient(const OctreeVolume& field, const ProjectionSet& projections, std::span<const double> angles_deg,
                     double step, double lambda, FieldGradient& grad) {
    return loss_gradient_impl(field, projections, angles_deg, step, lambda, grad);
}

double normal_operator_norm(const DenseVolume& field, const ConeBeamGeometry& geom, std::span<const double> angles_deg,
                            double step, int iterations) {
    return normal_operator_norm_impl(field, geom, angles_deg, step, iterations);
}

double normal_operator_norm(const OctreeVolume& field, const ConeBeamGeometry& geom, std::span<const double> angles_deg,
                            double step, int iterations) {
    return normal_operator_norm_impl(field, geom, angles_deg, step, iterations);
}

void refine_pass(OctreeVolume& field, const ReconConfig& cfg) {
    if (field.mode() != OctreeMode::adaptive) return;
    const auto scores = field.split_scores();
    field.refine(scores, cfg.tau_split, cfg.tau_prune);
}

double tv_weight(const ProjectionSet& projections, double lambda_tv) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& img : projections.images) {
        sum += simd::dot(img.pixels(), img.pixels());
        count += img.size();
    }
    return count > 0 ? lambda_tv * sum / static_cast<double>(count) : 0.0;
}

ReconResult reconstruct(const ProjectionSet& projections, const AngleSequence& angles, const ReconConfig& cfg,
                        const Field* start) {
    cfg.validate();
    projections.validate();
    require(!projections.empty(), "reconstruct: no projections");
    require(projections.size() == angles.size(), "reconstruct: projection and angle counts differ");
    const auto t_begin = std::chrono::steady_clock::now();
    const std::span<const double> theta(angles.angles_deg);

    ReconResult result{start ? *start : make_field(cfg, cfg.octree.extent_edge), {}};
    ReconReport& report = result.report;
    const double lambda = tv_weight(projections, cfg.lambda_tv);
    report.lambda = lambda;

    std::visit(
        [&](auto& f) {
            const double step = cfg.step > 0.0 ? cfg.step : default_step(f);
            // The data term's Hessian is 2AᵀA, so steps below 1/‖AᵀA‖ are stable.
            auto rate = [&] {
                const double norm = normal_operator_norm(f, projections.geometry, theta, step);
                return norm > 0.0 ? cfg.learning_rate / norm : 0.0;
            };
            double eta = rate();
            report.eta = eta;
            FieldGradient grad = f.make_gradient();
            double initial = 0.0;
            for (int e = 0; e < cfg.epochs; ++e) {
                grad.zero();
                const double dl = loss_gradient(f, projections, theta, step, lambda, grad);
                const double tv = tv_penalty(f);
                const double loss = dl + lambda * tv;
                report.data_loss.push_back(dl);
                report.tv.push_back(tv);
                report.loss.push_back(loss);
                if (e == 0) initial = loss;
                if (!std::isfinite(loss) || (initial > 0.0 && loss > 10.0 * initial)) {
                    report.wall_seconds =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
                    throw DivergenceError("reconstruct: loss diverged at epoch " + std::to_string(e), report);
                }
                simd::descend(f.payload(), grad.values, eta, cfg.nonneg_clamp);
                if constexpr (std::is_same_v<std::decay_t<decltype(f)>, OctreeVolume>) {
                    const bool due = cfg.refine_every > 0 && (e + 1) % cfg.refine_every == 0 && e + 1 < cfg.epochs;
                    if (due && f.mode() == OctreeMode::adaptive) {
                        const std::size_t before = f.payload_size();
                        const std::size_t leaves = f.leaf_count();
                        refine_pass(f, cfg);
                        if (f.payload_size() != before || f.leaf_count() != leaves) {
                            ++report.refinements;
                            grad = f.make_gradient();
                            eta = rate();
                        }
                    }
                }
            }
            report.final_data_loss = data_loss(f, projections, theta, step);
            report.final_tv = tv_penalty(f);
        },
        result.field);

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return result;
}

} // namespace ineat
