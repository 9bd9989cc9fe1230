// End-to-end checks at desk scale: 64³ spiral phantom, 64×64 cone-beam
// detector, 180 views. One PASS/FAIL line per criterion on stdout; progress
// on stderr. Pass criterion numbers as arguments to run a subset.

#include "ineat/cli.hpp"
#include "ineat/io.hpp"
#include "ineat/metrics.hpp"
#include "ineat/parallel.hpp"
#include "ineat/phantom.hpp"
#include "ineat/posecorr.hpp"
#include "ineat/recon.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>

using namespace ineat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void progress(const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); }

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Shared desk-scale setup.
struct Desk {
    DenseVolume phantom = spiral_cube_phantom({});
    ConeBeamGeometry geom;
    ReconConfig recon;
    PoseCorrectionConfig pose;
    Image reference = central_xy_slice(phantom);
    std::optional<double> clean_psnr;

    Dataset dataset(const std::string& kind, double delta_max, double accel, std::uint64_t seed = 7) const {
        TrajectoryRecord tr{kind, {}};
        tr.config.delta_max = delta_max;
        tr.config.accel = accel;
        tr.config.seed = seed;
        Dataset ds = make_dataset(phantom, geom, simulate_trajectory(tr), default_step(phantom));
        ds.manifest.trajectory = tr;
        return ds;
    }

    double slice_psnr(const Field& f) const { return psnr(central_xy_slice(export_dense(f, phantom.nx())), reference); }
};

std::vector<double> random_field_data(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(d(rng));
    return out;
}

Outcome adjoint(Desk& desk) {
    std::mt19937 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 360.0);
    const int n = desk.phantom.nx();
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const auto vals = random_field_data(static_cast<std::size_t>(n) * n * n, rng);
        DenseVolume f(n, n, n);
        for (std::size_t i = 0; i < vals.size(); ++i) f.data()[i] = static_cast<float>(vals[i]);
        const double theta = angle(rng);
        const double step = default_step(f);
        std::vector<double> y(desk.geom.pixel_count());
        for (auto& v : y) v = gauss(rng);
        const auto af = forward_project_exact(f, desk.geom, theta, step);
        FieldGradient aty = f.make_gradient();
        backproject_gradient(f, aty, desk.geom, theta, std::span<const double>(y), step);
        double lhs = 0.0, af2 = 0.0, y2 = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            lhs += af[i] * y[i];
            af2 += af[i] * af[i];
            y2 += y[i] * y[i];
        }
        for (std::size_t i = 0; i < f.voxel_count(); ++i) rhs += aty.values[i] * f.data()[i];
        worst = std::max(worst, std::abs(lhs - rhs) / (std::sqrt(af2) * std::sqrt(y2)));
    }
    return {worst <= 1e-4, fmt("worst relative mismatch %.3e over 20 pairs (tol 1e-4)", worst)};
}

Outcome gradient_check(Desk&) {
    ConeBeamGeometry g;
    g.det_nu = g.det_nv = 8;
    g.det_pitch = 0.25;
    const std::vector<double> angles = {15.0, 110.0};
    std::mt19937 rng(6);
    std::uniform_real_distribution<float> d(0.1f, 0.9f);
    DenseVolume target(6, 6, 6), f(6, 6, 6);
    for (auto& v : target.data()) v = d(rng);
    for (auto& v : f.data()) v = d(rng);
    const double step = 0.04, lambda = 0.05;
    const auto proj = forward_project_set(target, g, std::span<const double>(angles), step);
    FieldGradient grad = f.make_gradient();
    loss_gradient(f, proj, angles, step, lambda, grad);
    auto total = [&](const DenseVolume& v) { return data_loss(v, proj, angles, step) + lambda * tv_penalty(Field(v)); };
    double gmax = 0.0, worst = 0.0;
    for (double v : grad.values) gmax = std::max(gmax, std::abs(v));
    for (std::size_t i = 0; i < f.voxel_count(); ++i) {
        DenseVolume up = f, down = f;
        up.data()[i] += 1e-4f;
        down.data()[i] -= 1e-4f;
        const double fd = (total(up) - total(down)) / (static_cast<double>(up.data()[i]) - down.data()[i]);
        const double scale = std::max({std::abs(fd), std::abs(grad.values[i]), 1e-6 * gmax});
        worst = std::max(worst, std::abs(fd - grad.values[i]) / scale);
    }
    return {worst <= 1e-3, fmt("worst per-entry relative error %.3e over 216 entries (tol 1e-3)", worst)};
}

Outcome trajectories(Desk&) {
    TrajectoryConfig c;
    c.accel = 0.05;
    const auto a = accel_angles(c);
    c.accel = 0.1;
    const auto b = accel_angles(c);
    const double sweep_a = a.angles_deg.back() - a.angles_deg.front();
    const double sweep_b = b.angles_deg.back() - b.angles_deg.front();
    TrajectoryConfig p;
    p.n_views = 100001;
    p.delta_max = 1.5;
    p.seed = 99;
    const auto w = perturbed_angles(p);
    bool within = true;
    for (std::size_t i = 1; i < w.size(); ++i) {
        const double inc = w[i] - w[i - 1];
        within = within && inc >= p.d_deg - p.delta_max && inc <= p.d_deg + p.delta_max;
    }
    const bool pass = sweep_a == 278.0 && sweep_b == 318.0 && within;
    return {pass, fmt("sweeps %.17g / %.17g deg, 1e5 increments in [d-D, d+D]: %s", sweep_a, sweep_b, within ? "yes" : "no")};
}

Outcome self_matching(Desk& desk) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = desk.dataset("uniform", 0.0, 0.0);
    ReconConfig coarse = desk.recon;
    coarse.epochs = desk.pose.coarse_epochs;
    const auto rec = reconstruct(ds.projections, ds.manifest.angles_assumed, coarse);
    const double step = default_step(rec.field);
    const auto bank = dense_reproject(rec.field, desk.geom, desk.pose, step);
    const auto m = match_angles(ds.projections, bank, desk.pose, ds.manifest.angles_assumed);
    int within = 0;
    for (std::size_t i = 0; i < m.angles.size(); ++i)
        within += circular_distance(m.angles[i], ds.manifest.angles_assumed[i]) <= desk.pose.grid_step_deg + 1e-9;
    progress(fmt("single match: %d/%zu within one grid step (%.0fs)", within, m.angles.size(), seconds_since(t0)));
    const auto r = ineat::ineat(ds.projections, desk.recon, desk.pose);
    desk.clean_psnr = desk.slice_psnr(r.field);
    const double frac = static_cast<double>(within) / static_cast<double>(m.angles.size());
    const bool pass = frac >= 0.95 && r.converged && r.outer_iterations == 1;
    return {pass, fmt("%.1f%% within 0.1 deg (need >= 95%%), ineat %s after %d iteration(s), psnr %.2f dB (%.0fs)",
                      100.0 * frac, r.converged ? "converged" : "did not converge", r.outer_iterations,
                      *desk.clean_psnr, seconds_since(t0))};
}

struct Recovery {
    double default_psnr = 0.0;
    double ineat_psnr = 0.0;
    double rmse_before = 0.0;
    double rmse_after = 0.0;
    int iterations = 0;
    bool converged = false;
    double seconds = 0.0;
};

Recovery recovery(const Desk& desk, const std::string& kind, double delta_max, double accel) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = desk.dataset(kind, delta_max, accel);
    Recovery out;
    out.default_psnr = desk.slice_psnr(reconstruct(ds.projections, ds.manifest.angles_assumed, desk.recon).field);
    progress(fmt("%s D=%.2f a=%.2f: default %.2f dB (%.0fs)", kind.c_str(), delta_max, accel, out.default_psnr,
                 seconds_since(t0)));
    const auto r = ineat::ineat(ds.projections, desk.recon, desk.pose);
    out.ineat_psnr = desk.slice_psnr(r.field);
    out.rmse_before = angle_error(ds.manifest.angles_assumed, *ds.manifest.angles_true).rmse_deg;
    out.rmse_after = angle_error(r.angles, *ds.manifest.angles_true).rmse_deg;
    out.iterations = r.outer_iterations;
    out.converged = r.converged;
    out.seconds = seconds_since(t0);
    for (const auto& rep : r.reports) progress(fmt("  iteration %d: mean |change| %.4f deg", rep.iteration, rep.mean_abs_change_deg));
    progress(fmt("  ineat %.2f dB, rmse %.3f -> %.3f deg (%.0fs)", out.ineat_psnr, out.rmse_before, out.rmse_after,
                 out.seconds));
    return out;
}

Outcome perturbation(Desk& desk) {
    Outcome o{true, ""};
    for (double dm : {1.0, 1.5}) {
        const Recovery r = recovery(desk, "perturbed", dm, 0.0);
        const double gain = r.ineat_psnr - r.default_psnr;
        const bool ok = gain >= 2.0 && r.rmse_after < r.rmse_before && r.rmse_after <= 5.0 * desk.pose.grid_step_deg;
        o.pass = o.pass && ok;
        o.detail += fmt("%sD=%.1f: %.2f -> %.2f dB (+%.2f, need +2), rmse %.3f -> %.3f deg (need <= %.2f)",
                        o.detail.empty() ? "" : "; ", dm, r.default_psnr, r.ineat_psnr, gain, r.rmse_before,
                        r.rmse_after, 5.0 * desk.pose.grid_step_deg);
    }
    return o;
}

Outcome acceleration(Desk& desk) {
    if (!desk.clean_psnr) {
        const Dataset ds = desk.dataset("uniform", 0.0, 0.0);
        desk.clean_psnr = desk.slice_psnr(ineat::ineat(ds.projections, desk.recon, desk.pose).field);
    }
    Outcome o{true, ""};
    for (auto [dm, a] : {std::pair{0.5, 0.1}, std::pair{1.5, 0.05}}) {
        const Recovery r = recovery(desk, "combined", dm, a);
        const double gain = r.ineat_psnr - r.default_psnr;
        const bool ok = gain >= 2.0 && r.ineat_psnr >= *desk.clean_psnr - 3.0;
        o.pass = o.pass && ok;
        o.detail += fmt("%s(D=%.1f, a=%.2f): %.2f -> %.2f dB (+%.2f, need +2), clean %.2f dB (need >= %.2f)",
                        o.detail.empty() ? "" : "; ", dm, a, r.default_psnr, r.ineat_psnr, gain, *desk.clean_psnr,
                        *desk.clean_psnr - 3.0);
    }
    return o;
}

Outcome octree_modes(Desk& desk) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = desk.dataset("uniform", 0.0, 0.0);
    ReconConfig dense = desk.recon;
    dense.epochs = 30;
    ReconConfig global = dense;
    global.octree_mode = FieldMode::global;
    global.octree = OctreeConfig{4, 2, 4, 1.0};
    dense.resolution = global.octree.effective_resolution();
    dense.step = global.step = default_step(desk.phantom);
    ReconConfig adaptive = global;
    adaptive.octree_mode = FieldMode::adaptive;

    const auto rd = reconstruct(ds.projections, ds.manifest.angles_assumed, dense);
    progress(fmt("dense done (%.0fs)", seconds_since(t0)));
    const auto rg = reconstruct(ds.projections, ds.manifest.angles_assumed, global);
    progress(fmt("global done (%.0fs)", seconds_since(t0)));
    const auto ra = reconstruct(ds.projections, ds.manifest.angles_assumed, adaptive);
    progress(fmt("adaptive done, %d refinement(s), %zu leaves (%.0fs)", ra.report.refinements,
                 std::get<OctreeVolume>(ra.field).leaf_count(), seconds_since(t0)));

    const DenseVolume a = std::get<DenseVolume>(rd.field);
    const DenseVolume b = export_dense(rg.field, dense.resolution);
    float diff = 0.0f;
    for (std::size_t i = 0; i < a.voxel_count(); ++i) diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
    const double pg = desk.slice_psnr(rg.field), pa = desk.slice_psnr(ra.field);
    const double jump_g = std::get<OctreeVolume>(rg.field).max_boundary_jump();
    const double jump_a = std::get<OctreeVolume>(ra.field).max_boundary_jump();
    const bool pass = diff <= 1e-5f && pa >= pg - 3.0 && jump_g == 0.0;
    return {pass, fmt("global vs dense max diff %.3e (tol 1e-5); adaptive %.2f dB vs global %.2f dB (need >= %.2f); "
                      "boundary jump global %.3g, adaptive %.3g (%.0fs)",
                      static_cast<double>(diff), pa, pg, pg - 3.0, jump_g, jump_a, seconds_since(t0))};
}

std::string bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism(Desk& desk) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path root = fs::temp_directory_path() / ("ineat_acceptance_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
    io::write_text(root / "run.json", R"({
        "geometry": {"det_nu": 32, "det_nv": 32, "det_pitch": 0.1},
        "trajectory": {"kind": "combined", "n_views": 60, "d_deg": 6, "delta_max": 1.5, "accel": 0.5},
        "phantom": {"resolution": 32},
        "recon": {"resolution": 32, "epochs": 20},
        "pose": {"grid_step_deg": 0.5, "coarse_epochs": 10, "max_outer_iters": 2}
    })");
    bool same = true;
    std::size_t files = 0;
    std::map<std::string, std::string> first;
    for (const char* workers : {"1", "4"}) {
        const fs::path out = root / (std::string("w") + workers);
        auto run = [&](std::vector<std::string> args) {
            args.insert(args.begin(), {"--config", (root / "run.json").string(), "--out", out.string(), "--workers",
                                       workers, "--seed", "5"});
            return run_cli(args);
        };
        const std::string m = (out / "manifest.json").string();
        same = same && run({"phantom"}) == exit_ok && run({"simulate"}) == exit_ok &&
               run({"reconstruct", "--manifest", m}) == exit_ok && run({"ineat", "--manifest", m}) == exit_ok &&
               run({"--set", "reproject.grid_step_deg=30", "reproject", "--volume", (out / "recon.vol").string()}) ==
                   exit_ok &&
               run({"eval", "--volume", (out / "ineat.vol").string(), "--gt", (out / "phantom.vol").string(),
                    "--manifest", (out / "manifest_corrected.json").string()}) == exit_ok;
        for (const auto& e : fs::directory_iterator(out)) {
            const std::string name = e.path().filename().string();
            const std::string content = bytes_of(e.path());
            if (first.empty() || !first.count(name)) {
                if (std::string(workers) == "1") first[name] = content;
                else same = false;
            } else {
                same = same && first[name] == content;
                ++files;
            }
        }
    }
    same = same && files == first.size();

    // Round trips: write, read, write again.
    bool round = true;
    const DenseVolume vol = io::read_volume(root / "w1" / "ineat.vol");
    io::write_volume(root / "again.vol", vol);
    round = round && bytes_of(root / "again.vol") == bytes_of(root / "w1" / "ineat.vol");
    const Image img = io::read_image(root / "w1" / "proj_0007.pfm");
    io::write_image(root / "again.pfm", img);
    round = round && bytes_of(root / "again.pfm") == bytes_of(root / "w1" / "proj_0007.pfm");
    const auto man = io::read_manifest(root / "w1" / "manifest.json");
    io::write_manifest(root / "w1" / "again.json", man);
    round = round && bytes_of(root / "w1" / "again.json") == bytes_of(root / "w1" / "manifest.json");
    fs::remove_all(root);
    (void)desk;
    return {same && round, fmt("%zu output files identical across workers {1, 4}: %s; volume/image/manifest round "
                               "trips bitwise: %s (%.0fs)",
                               files, same ? "yes" : "no", round ? "yes" : "no", seconds_since(t0))};
}

Outcome ssim_properties(Desk&) {
    std::mt19937 rng(77);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    const auto k = SsimConstants::for_range(1.0);
    double self = 0.0, sym = 0.0, lo = 1.0, hi = -1.0;
    for (int t = 0; t < 1000; ++t) {
        Image a(32, 32), b(32, 32);
        for (auto& v : a.data) v = d(rng);
        for (std::size_t i = 0; i < b.size(); ++i) b.data[i] = t % 2 ? d(rng) : 1.0f - a.data[i] * d(rng);
        self = std::max(self, std::abs(ssim(a, a, k) - 1.0));
        const double ab = ssim(a, b, k);
        sym = std::max(sym, std::abs(ab - ssim(b, a, k)));
        lo = std::min(lo, ab);
        hi = std::max(hi, ab);
    }
    const bool pass = self <= 1e-12 && sym <= 1e-12 && lo >= -1.0 && hi <= 1.0;
    return {pass, fmt("|ssim(I,I)-1| %.1e, asymmetry %.1e, range [%.4f, %.4f] over 1000 pairs", self, sym, lo, hi)};
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const std::vector<std::pair<const char*, std::function<Outcome(Desk&)>>> criteria = {
        {"adjoint", adjoint},
        {"gradient check", gradient_check},
        {"trajectory arithmetic", trajectories},
        {"self-matching", self_matching},
        {"perturbation recovery", perturbation},
        {"acceleration recovery", acceleration},
        {"octree modes", octree_modes},
        {"determinism and formats", determinism},
        {"ssim properties", ssim_properties},
    };
    Desk desk;
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        std::fprintf(stderr, "criterion %d: %s\n", id, criteria[i].first);
        Outcome o;
        try {
            o = criteria[i].second(desk);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %d %s: %s -- %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
