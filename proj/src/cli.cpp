#include "ineat/cli.hpp"

#include "ineat/config.hpp"
#include "ineat/error.hpp"
#include "ineat/io.hpp"
#include "ineat/metrics.hpp"
#include "ineat/parallel.hpp"
#include "ineat/phantom.hpp"
#include "ineat/posecorr.hpp"
#include "ineat/recon.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

namespace ineat {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> seed;
    std::string volume;
    std::string gt;
    std::string manifest;
};

void note(const std::string& msg) { std::fprintf(stderr, "ineat: %s\n", msg.c_str()); }

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RunConfig resolve(const Options& o) {
    std::vector<std::string> sets = o.sets;
    if (o.seed) sets.push_back("trajectory.seed=" + std::to_string(*o.seed));
    if (!o.out.empty()) sets.push_back("output_dir=\"" + o.out + "\"");
    if (o.config.empty()) return parse_run_config("{}", sets);
    return load_run_config(o.config, sets);
}

fs::path need_path(const std::string& p, const char* flag) {
    if (p.empty()) fail(ErrorKind::invalid_argument, std::string("missing required option ") + flag);
    return p;
}

void write_slice(const fs::path& dir, const std::string& stem, const Image& img) {
    io::write_image(dir / (stem + ".pfm"), img);
    io::write_pgm16(dir / (stem + ".pgm"), img);
}

void write_mips(const fs::path& dir, const std::string& stem, const DenseVolume& v) {
    const auto mips = mip_triview(v);
    const char* axes[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) write_slice(dir, stem + "_mip_" + axes[a], mips[static_cast<std::size_t>(a)]);
}

std::string loss_csv(const ReconReport& r) {
    std::string s = "epoch,data_loss,tv,total\n";
    for (std::size_t e = 0; e < r.loss.size(); ++e) {
        s += std::to_string(e) + ',' + num(r.data_loss[e]) + ',' + num(r.tv[e]) + ',' + num(r.loss[e]) + '\n';
    }
    return s;
}

// Field exported at the reconstruction's own resolution.
DenseVolume dense_output(const Field& f, const ReconConfig& cfg) {
    const int n = cfg.octree_mode == FieldMode::dense ? cfg.resolution : cfg.octree.effective_resolution();
    return export_dense(f, n);
}

struct Inputs {
    fs::path manifest_path;
    DatasetManifest manifest;
    ProjectionSet projections;
};

Inputs load_inputs(const Options& o) {
    Inputs in;
    in.manifest_path = need_path(o.manifest, "--manifest");
    in.manifest = io::read_manifest(in.manifest_path);
    in.projections = io::load_projections(in.manifest_path, in.manifest);
    return in;
}

int cmd_phantom(const Options& o) {
    const RunConfig cfg = resolve(o);
    const fs::path dir = cfg.output_dir;
    if (cfg.phantom.n_cubes == 0) note("warning: n_cubes = 0, writing an all-zero volume");
    const DenseVolume vol = spiral_cube_phantom(cfg.phantom);
    io::write_volume(dir / "phantom.vol", vol);
    write_mips(dir, "phantom", vol);
    note("wrote " + (dir / "phantom.vol").string());
    return exit_ok;
}

int cmd_simulate(const Options& o) {
    const RunConfig cfg = resolve(o);
    const fs::path dir = cfg.output_dir;
    const DenseVolume vol = o.volume.empty() ? spiral_cube_phantom(cfg.phantom) : io::read_volume(o.volume);
    const AngleSequence truth = simulate_trajectory(cfg.trajectory);
    note("simulating " + std::to_string(truth.size()) + " views (" + cfg.trajectory.kind + ")");
    const double step = cfg.recon.step > 0.0 ? cfg.recon.step : default_step(vol);
    Dataset ds = make_dataset(vol, cfg.geometry, truth, step);
    ds.manifest.trajectory = cfg.trajectory;
    io::write_dataset(dir / "manifest.json", ds);
    note("wrote " + (dir / "manifest.json").string());
    return exit_ok;
}

void write_recon_outputs(const fs::path& dir, const std::string& stem, const Field& field, const ReconConfig& rc,
                         const ReconReport& report) {
    const DenseVolume vol = dense_output(field, rc);
    io::write_volume(dir / (stem + ".vol"), vol);
    io::write_text(dir / (stem + "_loss.csv"), loss_csv(report));
    write_slice(dir, stem + "_slice_xy", central_xy_slice(vol));
    write_mips(dir, stem, vol);
}

int cmd_reconstruct(const Options& o) {
    const RunConfig cfg = resolve(o);
    const fs::path dir = cfg.output_dir;
    const Inputs in = load_inputs(o);
    note("reconstructing from " + std::to_string(in.projections.size()) + " views at assumed angles");
    const ReconResult r = reconstruct(in.projections, in.manifest.angles_assumed, cfg.recon);
    write_recon_outputs(dir, "recon", r.field, cfg.recon, r.report);
    note("final data loss " + num(r.report.final_data_loss));
    return exit_ok;
}

// Image paths of `m` rewritten relative to `to_dir`.
DatasetManifest rebase(DatasetManifest m, const fs::path& from_manifest, const fs::path& to_dir) {
    const fs::path from = fs::absolute(from_manifest).parent_path();
    const fs::path to = fs::absolute(to_dir);
    for (auto& p : m.images) p = fs::relative(from / p, to).generic_string();
    return m;
}

int cmd_ineat(const Options& o) {
    const RunConfig cfg = resolve(o);
    const fs::path dir = cfg.output_dir;
    const Inputs in = load_inputs(o);
    note("pose correction on " + std::to_string(in.projections.size()) + " views, grid " + num(cfg.pose.grid_step_deg) +
         " deg");
    const IneatResult r = ineat::ineat(in.projections, cfg.recon, cfg.pose);
    write_recon_outputs(dir, "ineat", r.field, cfg.recon, r.final_report);

    std::string reports = "iter,view,old_deg,new_deg,ssim\n";
    for (const auto& m : r.reports) {
        note("iteration " + std::to_string(m.iteration) + ": mean |change| " + num(m.mean_abs_change_deg) + " deg");
        for (const auto& e : m.entries) {
            reports += std::to_string(m.iteration) + ',' + std::to_string(e.view) + ',' + num(e.old_deg) + ',' +
                       num(e.new_deg) + ',' + num(e.ssim) + '\n';
        }
    }
    io::write_text(dir / "match_reports.csv", reports);
    const AngleSequence* truth = in.manifest.angles_true ? &*in.manifest.angles_true : nullptr;
    io::write_text(dir / "sine_curve.csv", sine_curve_csv(in.manifest.angles_assumed, truth, &r.angles));

    fs::create_directories(dir);
    DatasetManifest corrected = rebase(in.manifest, in.manifest_path, dir);
    corrected.angles_corrected = r.angles;
    io::write_manifest(dir / "manifest_corrected.json", corrected);
    note(std::string(r.converged ? "converged" : "stopped") + " after " + std::to_string(r.outer_iterations) +
         " outer iteration(s)");
    return exit_ok;
}

int cmd_reproject(const Options& o) {
    const RunConfig cfg = resolve(o);
    const fs::path dir = cfg.output_dir;
    const DenseVolume vol = io::read_volume(need_path(o.volume, "--volume"));
    std::vector<double> angles = cfg.reproject.angles_deg;
    if (angles.empty()) {
        PoseCorrectionConfig grid = cfg.pose;
        if (cfg.reproject.grid_step_deg) grid.grid_step_deg = *cfg.reproject.grid_step_deg;
        grid.validate();
        for (int k = 0; k < grid.bank_size(); ++k) angles.push_back(k * grid.grid_step_deg);
    }
    const double step = cfg.recon.step > 0.0 ? cfg.recon.step : default_step(vol);
    const ProjectionSet set = forward_project_set(vol, cfg.geometry, std::span<const double>(angles), step);
    std::string table = "index,angle_deg,file\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "reproj_%05zu.pfm", i);
        io::write_image(dir / name, set.images[i]);
        table += std::to_string(i) + ',' + num(angles[i]) + ',' + name + '\n';
    }
    io::write_text(dir / "reproj_angles.csv", table);
    note("wrote " + std::to_string(set.size()) + " reprojections");
    return exit_ok;
}

int cmd_eval(const Options& o) {
    const RunConfig cfg = resolve(o);
    const fs::path dir = cfg.output_dir;
    const DenseVolume est = io::read_volume(need_path(o.volume, "--volume"));
    const DenseVolume gt = io::read_volume(need_path(o.gt, "--gt"));
    DenseVolume est_on_gt = est;
    if (est.nx() != gt.nx() || est.ny() != gt.ny() || est.nz() != gt.nz()) {
        est_on_gt = DenseVolume(gt.nx(), gt.ny(), gt.nz(), gt.extent_edge());
        for (int k = 0; k < gt.nz(); ++k)
            for (int j = 0; j < gt.ny(); ++j)
                for (int i = 0; i < gt.nx(); ++i)
                    est_on_gt.at(i, j, k) = static_cast<float>(est.sample(gt.voxel_center(i, j, k)));
    }
    const double db = psnr(central_xy_slice(est_on_gt), central_xy_slice(gt));
    std::string summary = "metric,value\nslice_psnr_db," + num(db) + '\n';
    if (!o.manifest.empty()) {
        const DatasetManifest m = io::read_manifest(o.manifest);
        if (m.angles_true) {
            const AngleSequence& estimate = m.angles_corrected ? *m.angles_corrected : m.angles_assumed;
            const AngleErrorReport e = angle_error(estimate, *m.angles_true);
            summary += "angle_source," + std::string(m.angles_corrected ? "corrected" : "assumed") + '\n';
            summary += "angle_offset_deg," + num(e.global_offset_deg) + '\n';
            summary += "angle_rmse_deg," + num(e.rmse_deg) + '\n';
            summary += "angle_max_abs_deg," + num(e.max_abs_deg) + '\n';
        }
    }
    io::write_text(dir / "eval.csv", summary);
    note("slice PSNR " + num(db) + " dB");
    return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"CT reconstruction with iterative pose correction"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON experiment file");
    app.add_option("--out", o.out, "output directory (overrides output_dir)");
    app.add_option("--set", o.sets, "override a config key: dotted.key=value (repeatable)");
    app.add_option("--workers", o.workers, "worker threads (default: all cores)");
    app.add_option("--seed", o.seed, "trajectory seed (overrides trajectory.seed)");

    auto* phantom = app.add_subcommand("phantom", "write the spiral-cube ground truth and its MIP tri-view");
    auto* simulate = app.add_subcommand("simulate", "project a ground truth along a simulated trajectory");
    simulate->add_option("--volume", o.volume, "ground-truth volume (default: the configured phantom)");
    auto* recon = app.add_subcommand("reconstruct", "reconstruct at the assumed angles");
    recon->add_option("--manifest", o.manifest, "dataset manifest")->required();
    auto* ineat_cmd = app.add_subcommand("ineat", "reconstruct with iterative pose correction");
    ineat_cmd->add_option("--manifest", o.manifest, "dataset manifest")->required();
    auto* reproject = app.add_subcommand("reproject", "forward-project a volume on an angle grid or list");
    reproject->add_option("--volume", o.volume, "volume file")->required();
    auto* eval = app.add_subcommand("eval", "slice PSNR and angle error");
    eval->add_option("--volume", o.volume, "reconstructed volume")->required();
    eval->add_option("--gt", o.gt, "ground-truth volume")->required();
    eval->add_option("--manifest", o.manifest, "manifest with true (and corrected) angles");
    app.fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        std::fputs(app.help().c_str(), stdout);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "ineat: %s\n", e.what());
        return exit_config;
    }

    try {
        if (o.workers) set_worker_count(*o.workers);
        if (*phantom) return cmd_phantom(o);
        if (*simulate) return cmd_simulate(o);
        if (*recon) return cmd_reconstruct(o);
        if (*ineat_cmd) return cmd_ineat(o);
        if (*reproject) return cmd_reproject(o);
        if (*eval) return cmd_eval(o);
    } catch (const Error& e) {
        std::fprintf(stderr, "ineat: error: %s\n", e.what());
        switch (e.kind()) {
        case ErrorKind::invalid_argument: return exit_config;
        case ErrorKind::format:
        case ErrorKind::io: return exit_io;
        case ErrorKind::divergence: return exit_divergence;
        }
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "ineat: error: %s\n", e.what());
        return exit_io;
    }
    return exit_config;
}

} // namespace ineat
