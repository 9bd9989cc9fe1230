#pragma once

// Experiment file: one JSON document holding every module's parameters.
// Unknown keys are rejected; absent keys keep their defaults.

#include "ineat/geometry.hpp"
#include "ineat/phantom.hpp"
#include "ineat/posecorr.hpp"
#include "ineat/recon.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ineat {

struct ReprojectConfig {
    std::optional<double> grid_step_deg;  // dense grid over [0, 360)
    std::vector<double> angles_deg;       // explicit list, used when non-empty
};

struct RunConfig {
    std::string output_dir = "out";
    ConeBeamGeometry geometry;
    TrajectoryRecord trajectory{"uniform", {}};
    SpiralPhantomConfig phantom;
    ReconConfig recon;
    PoseCorrectionConfig pose;
    ReprojectConfig reproject;

    void validate() const;
};

// Applies `overrides` ("dotted.key=value"; the value is read as JSON when it
// parses, as a string otherwise) on top of `text` before decoding.
RunConfig parse_run_config(std::string_view text, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
// Every field, defaults included.
std::string run_config_to_json(const RunConfig& cfg);

} // namespace ineat
