#include "ineat/io.hpp"

#include "ineat/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ineat::io {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "io: only little-endian hosts are supported");

namespace {

constexpr char kVolumeMagic[8] = {'I', 'N', 'E', 'A', 'T', 'V', 'O', 'L'};
constexpr std::uint32_t kVolumeVersion = 1;

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
    return in;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(std::istream& in, T& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

// Reads one whitespace-delimited PFM header token.
std::string token(std::istream& in, const fs::path& path) {
    std::string t;
    if (!(in >> t)) fail(ErrorKind::format, "'" + path.string() + "': truncated PFM header");
    return t;
}

int parse_dim(const std::string& t, const fs::path& path) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(t, &used);
    } catch (...) {
        used = 0;
    }
    if (used != t.size() || v <= 0 || v > (1 << 20)) fail(ErrorKind::format, "'" + path.string() + "': bad PFM dimensions");
    return static_cast<int>(v);
}

} // namespace

void write_volume(const fs::path& path, const DenseVolume& volume) {
    auto out = open_out(path);
    out.write(kVolumeMagic, sizeof kVolumeMagic);
    put<std::uint32_t>(out, kVolumeVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(volume.nx()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(volume.ny()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(volume.nz()));
    put<float>(out, static_cast<float>(volume.extent_edge()));
    const auto data = volume.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
    finish(out, path);
}

DenseVolume read_volume(const fs::path& path) {
    auto in = open_in(path);
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kVolumeMagic, sizeof magic) != 0) {
        fail(ErrorKind::format, "'" + path.string() + "': not an INEATVOL file");
    }
    std::uint32_t version = 0, nx = 0, ny = 0, nz = 0;
    float edge = 0.0f;
    if (!get(in, version) || !get(in, nx) || !get(in, ny) || !get(in, nz) || !get(in, edge)) {
        fail(ErrorKind::format, "'" + path.string() + "': truncated volume header");
    }
    if (version != kVolumeVersion) {
        fail(ErrorKind::format, "'" + path.string() + "': unsupported volume version " + std::to_string(version));
    }
    if (nx < 2 || ny < 2 || nz < 2 || nx > 4096 || ny > 4096 || nz > 4096) {
        fail(ErrorKind::format, "'" + path.string() + "': bad volume dimensions");
    }
    if (!(edge > 0.0f) || !std::isfinite(edge)) fail(ErrorKind::format, "'" + path.string() + "': bad extent edge");
    std::vector<float> data(static_cast<std::size_t>(nx) * ny * nz);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != data.size() * sizeof(float)) {
        fail(ErrorKind::format, "'" + path.string() + "': truncated volume payload");
    }
    if (in.peek() != std::char_traits<char>::eof()) fail(ErrorKind::format, "'" + path.string() + "': trailing bytes");
    for (float v : data) {
        if (!std::isfinite(v)) fail(ErrorKind::format, "'" + path.string() + "': non-finite sample");
    }
    return DenseVolume(static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz), edge, std::move(data));
}

void write_image(const fs::path& path, const Image& image) {
    require(image.nu > 0 && image.nv > 0, "write_image: empty image");
    auto out = open_out(path);
    const std::string header = "Pf\n" + std::to_string(image.nu) + " " + std::to_string(image.nv) + "\n-1.0\n";
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    // Image row 0 is already the bottom row, which PFM stores first.
    out.write(reinterpret_cast<const char*>(image.data.data()),
              static_cast<std::streamsize>(image.data.size() * sizeof(float)));
    finish(out, path);
}

Image read_image(const fs::path& path) {
    auto in = open_in(path);
    if (token(in, path) != "Pf") fail(ErrorKind::format, "'" + path.string() + "': not a grayscale PFM");
    const int nu = parse_dim(token(in, path), path);
    const int nv = parse_dim(token(in, path), path);
    const std::string scale_text = token(in, path);
    double scale = 0.0;
    try {
        scale = std::stod(scale_text);
    } catch (...) {
        fail(ErrorKind::format, "'" + path.string() + "': bad PFM scale");
    }
    if (scale == 0.0 || !std::isfinite(scale)) fail(ErrorKind::format, "'" + path.string() + "': bad PFM scale");
    if (scale > 0.0) fail(ErrorKind::format, "'" + path.string() + "': unsupported endianness (big-endian PFM)");
    if (in.get() != '\n') fail(ErrorKind::format, "'" + path.string() + "': malformed PFM header");
    Image img(nu, nv);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != img.data.size() * sizeof(float)) {
        fail(ErrorKind::format, "'" + path.string() + "': truncated PFM payload");
    }
    if (in.peek() != std::char_traits<char>::eof()) fail(ErrorKind::format, "'" + path.string() + "': trailing bytes");
    return img;
}

void write_pgm16(const fs::path& path, const Image& image) {
    require(image.nu > 0 && image.nv > 0, "write_pgm16: empty image");
    float peak = 0.0f;
    for (float v : image.data) peak = std::max(peak, v);
    auto out = open_out(path);
    const std::string header = "P5\n" + std::to_string(image.nu) + " " + std::to_string(image.nv) + "\n65535\n";
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::vector<unsigned char> bytes;
    bytes.reserve(image.data.size() * 2);
    // PGM rows run top to bottom.
    for (int v = image.nv - 1; v >= 0; --v) {
        for (int u = 0; u < image.nu; ++u) {
            const double x = peak > 0.0f ? std::max(0.0f, image.at(u, v)) / static_cast<double>(peak) : 0.0;
            const auto q = static_cast<std::uint16_t>(std::lround(std::min(x, 1.0) * 65535.0));
            bytes.push_back(static_cast<unsigned char>(q >> 8));
            bytes.push_back(static_cast<unsigned char>(q & 0xff));
        }
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    finish(out, path);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g\n", static_cast<double>(peak));
    write_text(fs::path(path.string() + ".max"), buf);
}

namespace {

json trajectory_json(const TrajectoryRecord& t) {
    return json{{"kind", t.kind},
                {"n_views", t.config.n_views},
                {"d_deg", t.config.d_deg},
                {"delta_max", t.config.delta_max},
                {"accel", t.config.accel},
                {"seed", t.config.seed}};
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) fail(ErrorKind::format, "manifest: '" + where + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(ErrorKind::format, "manifest: unknown key '" + key + "' in " + where);
    }
}

const json& need(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(ErrorKind::format, "manifest: missing key '" + std::string(key) + "' in " + where);
    return *it;
}

template <class T>
T as(const json& v, const char* key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::format, "manifest: key '" + std::string(key) + "' has the wrong type");
    }
}

AngleSequence angles_from(const json& v, const char* key, AngleProvenance provenance) {
    AngleSequence s;
    s.angles_deg = as<std::vector<double>>(v, key);
    s.provenance = provenance;
    for (double a : s.angles_deg) {
        if (!std::isfinite(a)) fail(ErrorKind::format, "manifest: non-finite angle in '" + std::string(key) + "'");
    }
    return s;
}

AngleProvenance trajectory_provenance(const std::string& kind) {
    try {
        return provenance_from_string(kind);
    } catch (const Error&) {
        fail(ErrorKind::format, "manifest: unknown trajectory kind '" + kind + "'");
    }
}

} // namespace

std::string manifest_to_json(const DatasetManifest& m) {
    json j;
    j["geometry"] = {{"sad", m.geometry.sad},
                     {"sdd", m.geometry.sdd},
                     {"det_nu", m.geometry.det_nu},
                     {"det_nv", m.geometry.det_nv},
                     {"det_pitch", m.geometry.det_pitch},
                     {"beam_mode", std::string(to_string(m.geometry.beam_mode))}};
    j["angles_assumed_deg"] = m.angles_assumed.angles_deg;
    if (m.angles_true) j["angles_true_deg"] = m.angles_true->angles_deg;
    if (m.angles_corrected) j["angles_corrected_deg"] = m.angles_corrected->angles_deg;
    j["images"] = m.images;
    j["value_convention"] = m.value_convention;
    if (m.trajectory) j["trajectory"] = trajectory_json(*m.trajectory);
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text, const fs::path& base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::format, std::string("manifest: invalid JSON: ") + e.what());
    }
    check_keys(j,
               {"geometry", "angles_assumed_deg", "angles_true_deg", "angles_corrected_deg", "images",
                "value_convention", "trajectory"},
               "manifest");
    DatasetManifest m;
    const json& g = need(j, "geometry", "manifest");
    check_keys(g, {"sad", "sdd", "det_nu", "det_nv", "det_pitch", "beam_mode"}, "geometry");
    m.geometry.sad = as<double>(need(g, "sad", "geometry"), "sad");
    m.geometry.sdd = as<double>(need(g, "sdd", "geometry"), "sdd");
    m.geometry.det_nu = as<int>(need(g, "det_nu", "geometry"), "det_nu");
    m.geometry.det_nv = as<int>(need(g, "det_nv", "geometry"), "det_nv");
    m.geometry.det_pitch = as<double>(need(g, "det_pitch", "geometry"), "det_pitch");
    try {
        m.geometry.beam_mode = beam_mode_from_string(as<std::string>(need(g, "beam_mode", "geometry"), "beam_mode"));
        m.geometry.validate();
    } catch (const Error& e) {
        fail(ErrorKind::format, std::string("manifest: ") + e.what());
    }

    m.angles_assumed = angles_from(need(j, "angles_assumed_deg", "manifest"), "angles_assumed_deg", AngleProvenance::uniform);
    m.images = as<std::vector<std::string>>(need(j, "images", "manifest"), "images");
    m.value_convention = as<std::string>(need(j, "value_convention", "manifest"), "value_convention");
    if (m.value_convention != "line_integral") {
        fail(ErrorKind::format, "manifest: unsupported value_convention '" + m.value_convention + "'");
    }
    if (m.images.size() != m.angles_assumed.size()) {
        fail(ErrorKind::format, "manifest: length mismatch: " + std::to_string(m.angles_assumed.size()) +
                                    " assumed angles for " + std::to_string(m.images.size()) + " images");
    }
    if (const auto it = j.find("trajectory"); it != j.end()) {
        check_keys(*it, {"kind", "n_views", "d_deg", "delta_max", "accel", "seed"}, "trajectory");
        TrajectoryRecord t;
        t.kind = as<std::string>(need(*it, "kind", "trajectory"), "kind");
        t.config.n_views = as<int>(need(*it, "n_views", "trajectory"), "n_views");
        t.config.d_deg = as<double>(need(*it, "d_deg", "trajectory"), "d_deg");
        t.config.delta_max = as<double>(need(*it, "delta_max", "trajectory"), "delta_max");
        t.config.accel = as<double>(need(*it, "accel", "trajectory"), "accel");
        t.config.seed = as<std::uint64_t>(need(*it, "seed", "trajectory"), "seed");
        m.trajectory = t;
    }
    if (const auto it = j.find("angles_true_deg"); it != j.end()) {
        auto prov = m.trajectory ? trajectory_provenance(m.trajectory->kind) : AngleProvenance::uniform;
        m.angles_true = angles_from(*it, "angles_true_deg", prov);
        if (m.trajectory && m.trajectory->kind != "uniform") m.angles_true->seed = m.trajectory->config.seed;
        if (m.angles_true->size() != m.images.size()) fail(ErrorKind::format, "manifest: length mismatch in angles_true_deg");
    }
    if (const auto it = j.find("angles_corrected_deg"); it != j.end()) {
        m.angles_corrected = angles_from(*it, "angles_corrected_deg", AngleProvenance::corrected);
        if (m.angles_corrected->size() != m.images.size()) {
            fail(ErrorKind::format, "manifest: length mismatch in angles_corrected_deg");
        }
    }
    if (!base.empty()) {
        for (const auto& p : m.images) {
            if (!fs::exists(base / p)) fail(ErrorKind::format, "manifest: dangling image path '" + p + "'");
        }
    }
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    write_text(path, manifest_to_json(manifest));
}

DatasetManifest read_manifest(const fs::path& path) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return manifest_from_json(read_text(path), base);
}

ProjectionSet load_projections(const fs::path& manifest_path, const DatasetManifest& manifest) {
    const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
    ProjectionSet set;
    set.geometry = manifest.geometry;
    set.images.reserve(manifest.images.size());
    for (std::size_t i = 0; i < manifest.images.size(); ++i) {
        Image img = read_image(base / manifest.images[i]);
        if (img.nu != manifest.geometry.det_nu || img.nv != manifest.geometry.det_nv) {
            fail(ErrorKind::format, "manifest: image '" + manifest.images[i] + "' does not match the detector");
        }
        ProjectionImage p;
        static_cast<Image&>(p) = std::move(img);
        p.theta_deg = manifest.angles_assumed[i];
        set.images.push_back(std::move(p));
    }
    return set;
}

void write_dataset(const fs::path& manifest_path, Dataset& dataset, std::string_view stem) {
    const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
    dataset.manifest.images.clear();
    for (std::size_t i = 0; i < dataset.projections.images.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%.*s_%04zu.pfm", static_cast<int>(stem.size()), stem.data(), i);
        write_image(base / name, dataset.projections.images[i]);
        dataset.manifest.images.emplace_back(name);
    }
    write_manifest(manifest_path, dataset.manifest);
}

void write_text(const fs::path& path, std::string_view text) {
    auto out = open_out(path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    finish(out, path);
}

std::string read_text(const fs::path& path) {
    auto in = open_in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace ineat::io
