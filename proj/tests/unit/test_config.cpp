#include "doctest.h"

#include "ineat/config.hpp"
#include "ineat/error.hpp"

using namespace ineat;

TEST_CASE("empty document keeps defaults") {
    const RunConfig c = parse_run_config("");
    CHECK(c.output_dir == "out");
    CHECK(c.geometry.det_nu == 64);
    CHECK(c.trajectory.kind == "uniform");
    CHECK(c.trajectory.config.n_views == 180);
    CHECK(c.recon.epochs == 200);
    CHECK(c.pose.coarse_epochs == 150);
    CHECK(c.pose.max_outer_iters == 5);
    CHECK(c.pose.grid_step_deg == 0.1);
    CHECK(c.pose.rerun_mode == RerunMode::reinit);
    CHECK(parse_run_config("{}").recon.resolution == 64);
}

TEST_CASE("sections are read") {
    const RunConfig c = parse_run_config(R"({
        "output_dir": "runs/a",
        "geometry": {"det_nu": 32, "beam_mode": "parallel"},
        "trajectory": {"kind": "combined", "delta_max": 1.5, "accel": 0.05, "seed": 9},
        "phantom": {"n_cubes": 4, "resolution": 32},
        "recon": {"epochs": 7, "octree_mode": "adaptive", "leaf_voxels": 4, "nonneg_clamp": false},
        "pose": {"search_window_deg": 5, "rerun_mode": "warm", "eps_theta_deg": 0.2},
        "reproject": {"angles_deg": [1, 2.5]}
    })");
    CHECK(c.output_dir == "runs/a");
    CHECK(c.geometry.det_nu == 32);
    CHECK(c.geometry.beam_mode == BeamMode::parallel);
    CHECK(c.trajectory.kind == "combined");
    CHECK(c.trajectory.config.accel == 0.05);
    CHECK(c.trajectory.config.seed == 9);
    CHECK(c.phantom.n_cubes == 4);
    CHECK(c.recon.epochs == 7);
    CHECK(c.recon.octree_mode == FieldMode::adaptive);
    CHECK(c.recon.octree.leaf_voxels == 4);
    CHECK_FALSE(c.recon.nonneg_clamp);
    CHECK(*c.pose.search_window_deg == 5.0);
    CHECK(c.pose.rerun_mode == RerunMode::warm);
    CHECK(c.pose.eps_theta() == 0.2);
    CHECK(c.reproject.angles_deg == std::vector<double>{1.0, 2.5});
}

TEST_CASE("overrides") {
    const RunConfig c = parse_run_config(R"({"recon": {"epochs": 7}})",
                                         {"recon.epochs=3", "pose.rerun_mode=warm", "output_dir=x y",
                                          "trajectory.kind=\"perturbed\"", "reproject.grid_step_deg=0.5"});
    CHECK(c.recon.epochs == 3);
    CHECK(c.pose.rerun_mode == RerunMode::warm);
    CHECK(c.output_dir == "x y");
    CHECK(c.trajectory.kind == "perturbed");
    CHECK(*c.reproject.grid_step_deg == 0.5);
    CHECK_THROWS_AS(parse_run_config("", {"recon.epochs"}), Error);
    CHECK_THROWS_AS(parse_run_config("", {"=3"}), Error);
    CHECK_THROWS_AS(parse_run_config("", {"recon..epochs=3"}), Error);
    CHECK_THROWS_AS(parse_run_config("", {"output_dir.x=3"}), Error);
}

TEST_CASE("rejections are invalid arguments") {
    auto kind = [](const std::string& text) {
        try {
            parse_run_config(text);
        } catch (const Error& e) {
            return e.kind();
        }
        FAIL("accepted: " << text);
        return ErrorKind::io;
    };
    CHECK(kind(R"({"recon": {"epoch": 3}})") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"extra": 1})") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"recon": {"epochs": "many"}})") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"recon": {"epochs": 0}})") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"recon": {"octree_mode": "sparse"}})") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"trajectory": {"kind": "wobble"}})") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"geometry": {"sdd": 1.0}})") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"pose": {"grid_step_deg": -1}})") == ErrorKind::invalid_argument);
    CHECK(kind(R"([1, 2])") == ErrorKind::invalid_argument);
    CHECK(kind(R"({"recon": )") == ErrorKind::invalid_argument);
    try {
        parse_run_config(R"({"pose": {"grid_stp": 1}})");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("pose.grid_stp") != std::string::npos);
    }
}

TEST_CASE("serialisation round trip") {
    const RunConfig a = parse_run_config(R"({"recon": {"lambda_tv": 0.0123, "octree_mode": "global"},
                                            "pose": {"search_window_deg": 4}})");
    const std::string text = run_config_to_json(a);
    const RunConfig b = parse_run_config(text);
    CHECK(run_config_to_json(b) == text);
    CHECK(b.recon.lambda_tv == 0.0123);
    CHECK(b.recon.octree_mode == FieldMode::global);
    CHECK(*b.pose.search_window_deg == 4.0);
}
