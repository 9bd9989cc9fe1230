#include "ineat/config.hpp"

#include "ineat/error.hpp"
#include "ineat/io.hpp"

#include <json.hpp>

#include <algorithm>

namespace ineat {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::invalid_argument, "config: " + what); }

// Reads keys from one JSON object, rejecting any it was not asked about.
class Section {
public:
    Section(const json& root, const char* name) : name_(name) {
        const auto it = root.find(name);
        if (it == root.end()) return;
        if (!it->is_object()) bad("'" + name_ + "' must be an object");
        obj_ = &*it;
    }
    explicit Section(const json& obj) : name_("top level"), obj_(&obj) {
        if (!obj.is_object()) bad("document must be a JSON object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.emplace_back(key);
        if (!obj_) return;
        const auto it = obj_->find(key);
        if (it == obj_->end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            bad("'" + name_ + "." + key + "' has the wrong type");
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        seen_.emplace_back(key);
        if (!obj_) return;
        const auto it = obj_->find(key);
        if (it == obj_->end() || it->is_null()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            bad("'" + name_ + "." + key + "' has the wrong type");
        }
    }

    void allow(const char* key) { seen_.emplace_back(key); }

    void finish() const {
        if (!obj_) return;
        for (const auto& [key, value] : obj_->items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) bad("unknown key '" + name_ + "." + key + "'");
        }
    }

private:
    std::string name_;
    const json* obj_ = nullptr;
    std::vector<std::string> seen_;
};

void set_dotted(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) bad("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) bad("override key '" + key + "' has an empty component");
        if (!node->is_object()) bad("override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

template <class Fn>
auto parse_enum(Fn&& fn, const std::string& s) {
    try {
        return fn(s);
    } catch (const Error& e) {
        bad(e.what());
    }
}

} // namespace

void RunConfig::validate() const {
    require(!output_dir.empty(), "config: output_dir must not be empty");
    geometry.validate();
    phantom.validate();
    recon.validate();
    pose.validate();
    require(!reproject.grid_step_deg || *reproject.grid_step_deg > 0.0, "config: reproject.grid_step_deg must be > 0");
    const auto& k = trajectory.kind;
    require(k == "uniform" || k == "perturbed" || k == "accelerated" || k == "combined",
            "config: trajectory.kind must be uniform, perturbed, accelerated or combined");
    require(trajectory.config.n_views >= 1, "config: trajectory.n_views must be >= 1");
}

RunConfig parse_run_config(std::string_view text, const std::vector<std::string>& overrides) {
    json doc;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        doc = json::object();
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            bad(std::string("invalid JSON: ") + e.what());
        }
    }
    if (!doc.is_object()) bad("document must be a JSON object");
    for (const auto& o : overrides) set_dotted(doc, o);

    RunConfig cfg;
    Section top(doc);
    top.get("output_dir", cfg.output_dir);
    for (const char* s : {"geometry", "trajectory", "phantom", "recon", "pose", "reproject"}) top.allow(s);
    top.finish();

    {
        Section s(doc, "geometry");
        auto& g = cfg.geometry;
        std::string mode(to_string(g.beam_mode));
        s.get("sad", g.sad);
        s.get("sdd", g.sdd);
        s.get("det_nu", g.det_nu);
        s.get("det_nv", g.det_nv);
        s.get("det_pitch", g.det_pitch);
        s.get("beam_mode", mode);
        s.finish();
        g.beam_mode = parse_enum([](const std::string& m) { return beam_mode_from_string(m); }, mode);
    }
    {
        Section s(doc, "trajectory");
        auto& t = cfg.trajectory;
        s.get("kind", t.kind);
        s.get("n_views", t.config.n_views);
        s.get("d_deg", t.config.d_deg);
        s.get("delta_max", t.config.delta_max);
        s.get("accel", t.config.accel);
        s.get("seed", t.config.seed);
        s.finish();
    }
    {
        Section s(doc, "phantom");
        auto& p = cfg.phantom;
        s.get("n_cubes", p.n_cubes);
        s.get("cube_edge", p.cube_edge);
        s.get("r_start", p.r_start);
        s.get("r_end", p.r_end);
        s.get("turns", p.turns);
        s.get("density", p.density);
        s.get("resolution", p.resolution);
        s.get("extent_edge", p.extent_edge);
        s.finish();
    }
    {
        Section s(doc, "recon");
        auto& r = cfg.recon;
        std::string mode(to_string(r.octree_mode));
        s.get("epochs", r.epochs);
        s.get("learning_rate", r.learning_rate);
        s.get("lambda_tv", r.lambda_tv);
        s.get("step", r.step);
        s.get("octree_mode", mode);
        s.get("resolution", r.resolution);
        s.get("root_blocks", r.octree.root_blocks);
        s.get("max_depth", r.octree.max_depth);
        s.get("leaf_voxels", r.octree.leaf_voxels);
        s.get("extent_edge", r.octree.extent_edge);
        s.get("refine_every", r.refine_every);
        s.get("tau_split", r.tau_split);
        s.get("tau_prune", r.tau_prune);
        s.get("nonneg_clamp", r.nonneg_clamp);
        s.finish();
        r.octree_mode = parse_enum([](const std::string& m) { return field_mode_from_string(m); }, mode);
    }
    {
        Section s(doc, "pose");
        auto& p = cfg.pose;
        std::string mode(to_string(p.rerun_mode));
        s.get("grid_step_deg", p.grid_step_deg);
        s.get("sweep_deg", p.sweep_deg);
        s.get("search_window_deg", p.search_window_deg);
        s.get("max_outer_iters", p.max_outer_iters);
        s.get("eps_theta_deg", p.eps_theta_deg);
        s.get("rerun_mode", mode);
        s.get("coarse_epochs", p.coarse_epochs);
        s.get("anchor_first_view", p.anchor_first_view);
        s.finish();
        p.rerun_mode = parse_enum([](const std::string& m) { return rerun_mode_from_string(m); }, mode);
    }
    {
        Section s(doc, "reproject");
        s.get("grid_step_deg", cfg.reproject.grid_step_deg);
        s.get("angles_deg", cfg.reproject.angles_deg);
        s.finish();
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    return parse_run_config(io::read_text(path), overrides);
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["output_dir"] = c.output_dir;
    j["geometry"] = {{"sad", c.geometry.sad},
                     {"sdd", c.geometry.sdd},
                     {"det_nu", c.geometry.det_nu},
                     {"det_nv", c.geometry.det_nv},
                     {"det_pitch", c.geometry.det_pitch},
                     {"beam_mode", std::string(to_string(c.geometry.beam_mode))}};
    j["trajectory"] = {{"kind", c.trajectory.kind},
                       {"n_views", c.trajectory.config.n_views},
                       {"d_deg", c.trajectory.config.d_deg},
                       {"delta_max", c.trajectory.config.delta_max},
                       {"accel", c.trajectory.config.accel},
                       {"seed", c.trajectory.config.seed}};
    j["phantom"] = {{"n_cubes", c.phantom.n_cubes},   {"cube_edge", c.phantom.cube_edge},
                    {"r_start", c.phantom.r_start},   {"r_end", c.phantom.r_end},
                    {"turns", c.phantom.turns},       {"density", c.phantom.density},
                    {"resolution", c.phantom.resolution}, {"extent_edge", c.phantom.extent_edge}};
    j["recon"] = {{"epochs", c.recon.epochs},
                  {"learning_rate", c.recon.learning_rate},
                  {"lambda_tv", c.recon.lambda_tv},
                  {"step", c.recon.step},
                  {"octree_mode", std::string(to_string(c.recon.octree_mode))},
                  {"resolution", c.recon.resolution},
                  {"root_blocks", c.recon.octree.root_blocks},
                  {"max_depth", c.recon.octree.max_depth},
                  {"leaf_voxels", c.recon.octree.leaf_voxels},
                  {"extent_edge", c.recon.octree.extent_edge},
                  {"refine_every", c.recon.refine_every},
                  {"tau_split", c.recon.tau_split},
                  {"tau_prune", c.recon.tau_prune},
                  {"nonneg_clamp", c.recon.nonneg_clamp}};
    j["pose"] = {{"grid_step_deg", c.pose.grid_step_deg},
                 {"sweep_deg", c.pose.sweep_deg},
                 {"search_window_deg", c.pose.search_window_deg ? json(*c.pose.search_window_deg) : json(nullptr)},
                 {"max_outer_iters", c.pose.max_outer_iters},
                 {"eps_theta_deg", c.pose.eps_theta_deg ? json(*c.pose.eps_theta_deg) : json(nullptr)},
                 {"rerun_mode", std::string(to_string(c.pose.rerun_mode))},
                 {"coarse_epochs", c.pose.coarse_epochs},
                 {"anchor_first_view", c.pose.anchor_first_view}};
    j["reproject"] = {{"grid_step_deg", c.reproject.grid_step_deg ? json(*c.reproject.grid_step_deg) : json(nullptr)},
                      {"angles_deg", c.reproject.angles_deg}};
    return j.dump(2) + "\n";
}

} // namespace ineat
