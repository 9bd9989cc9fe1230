#include "ineat/field.hpp"

#include "ineat/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ineat {

DenseVolume::DenseVolume(int nx, int ny, int nz, double extent_edge)
    : DenseVolume(nx, ny, nz, extent_edge,
                  std::vector<float>(static_cast<std::size_t>(std::max(nx, 0)) * std::max(ny, 0) * std::max(nz, 0), 0.0f)) {}

DenseVolume::DenseVolume(int nx, int ny, int nz, double extent_edge, std::vector<float> data)
    : nx_(nx), ny_(ny), nz_(nz), edge_(extent_edge), data_(std::move(data)) {
    require(nx >= 2 && ny >= 2 && nz >= 2, "DenseVolume: every dimension must be >= 2");
    require(extent_edge > 0.0 && std::isfinite(extent_edge), "DenseVolume: extent edge must be positive");
    require(data_.size() == static_cast<std::size_t>(nx) * ny * nz, "DenseVolume: payload size does not match dims");
    hx_ = edge_ / nx_;
    hy_ = edge_ / ny_;
    hz_ = edge_ / nz_;
}

Vec3 DenseVolume::voxel_center(int i, int j, int k) const {
    const double half = 0.5 * edge_;
    return {-half + (i + 0.5) * hx_, -half + (j + 0.5) * hy_, -half + (k + 0.5) * hz_};
}

void DenseVolume::validate() const {
    require(nx_ >= 2 && ny_ >= 2 && nz_ >= 2, "DenseVolume: every dimension must be >= 2");
    for (float v : data_) {
        require(std::isfinite(v), "DenseVolume: non-finite density");
        require(v >= 0.0f, "DenseVolume: negative density");
    }
}

double sample(const DenseVolume& field, const Vec3& p) { return field.sample(p); }

void scatter_gradient(const DenseVolume& field, FieldGradient& gradient, const Vec3& p, double weight) {
    require(gradient.size() == field.payload_size(), "scatter_gradient: gradient not congruent with field");
    field.scatter(gradient, p, weight);
}

std::string_view to_string(OctreeMode mode) { return mode == OctreeMode::adaptive ? "adaptive" : "global"; }

void OctreeConfig::validate() const {
    require(root_blocks >= 1, "octree: root_blocks must be >= 1");
    require(max_depth >= 0 && max_depth <= 8, "octree: max_depth out of range");
    require(finest_blocks() <= 16, "octree: finest block grid may not exceed 16x16x16");
    require(leaf_voxels >= 2, "octree: leaf_voxels must be >= 2");
    require(extent_edge > 0.0, "octree: extent edge must be positive");
}

OctreeVolume OctreeVolume::init(OctreeMode mode, const OctreeConfig& cfg) {
    cfg.validate();
    OctreeVolume oct;
    oct.cfg_ = cfg;
    oct.mode_ = mode;
    const int g = cfg.root_blocks;
    const std::size_t block_size = static_cast<std::size_t>(cfg.leaf_voxels) * cfg.leaf_voxels * cfg.leaf_voxels;
    for (int z = 0; z < g; ++z) {
        for (int y = 0; y < g; ++y) {
            for (int x = 0; x < g; ++x) {
                OctreeNode node;
                node.block = {x, y, z};
                node.payload = static_cast<std::int64_t>(oct.payload_.size());
                oct.payload_.resize(oct.payload_.size() + block_size, 0.0f);
                oct.nodes_.push_back(node);
            }
        }
    }
    if (mode == OctreeMode::global) {
        for (int depth = 0; depth < cfg.max_depth; ++depth) {
            const auto count = static_cast<std::int32_t>(oct.nodes_.size());
            for (std::int32_t i = 0; i < count; ++i) {
                if (oct.nodes_[static_cast<std::size_t>(i)].state == BlockState::leaf) oct.subdivide(i);
            }
        }
    }
    oct.rebuild_index();
    return oct;
}

OctreeVolume OctreeVolume::from_dense(const DenseVolume& dense, const OctreeConfig& cfg) {
    OctreeConfig c = cfg;
    c.extent_edge = dense.extent_edge();
    OctreeVolume oct = init(OctreeMode::global, c);
    const int n = c.effective_resolution();
    require(dense.nx() == n && dense.ny() == n && dense.nz() == n,
            "OctreeVolume::from_dense: dense dims must equal the effective octree resolution");
    const int v = c.leaf_voxels;
    for (std::int32_t leaf : oct.leaves_) {
        const OctreeNode& node = oct.nodes_[static_cast<std::size_t>(leaf)];
        auto out = oct.leaf_payload(leaf);
        for (int cz = 0; cz < v; ++cz)
            for (int cy = 0; cy < v; ++cy)
                for (int cx = 0; cx < v; ++cx)
                    out[oct.local_index(cx, cy, cz)] =
                        dense.at(node.block[0] * v + cx, node.block[1] * v + cy, node.block[2] * v + cz);
    }
    return oct;
}

std::size_t OctreeVolume::pruned_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const OctreeNode& n) { return n.state == BlockState::pruned; }));
}

int OctreeVolume::max_leaf_depth() const {
    int d = 0;
    for (auto leaf : leaves_) d = std::max(d, nodes_[static_cast<std::size_t>(leaf)].depth);
    return d;
}

std::span<const float> OctreeVolume::leaf_payload(std::int32_t node) const {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    const std::size_t v = static_cast<std::size_t>(cfg_.leaf_voxels);
    return std::span<const float>(payload_).subspan(static_cast<std::size_t>(n.payload), v * v * v);
}

std::span<float> OctreeVolume::leaf_payload(std::int32_t node) {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    const std::size_t v = static_cast<std::size_t>(cfg_.leaf_voxels);
    return std::span<float>(payload_).subspan(static_cast<std::size_t>(n.payload), v * v * v);
}

Vec3 OctreeVolume::block_min(const OctreeNode& node) const {
    const double e = block_edge(node.depth);
    const double half = 0.5 * cfg_.extent_edge;
    return {-half + node.block[0] * e, -half + node.block[1] * e, -half + node.block[2] * e};
}

std::int32_t OctreeVolume::leaf_at(const Vec3& p) const {
    const double half = 0.5 * cfg_.extent_edge;
    if (!detail::inside_extent(p, half)) return -1;
    const int f = cfg_.finest_blocks();
    int idx[3];
    for (int a = 0; a < 3; ++a) {
        const double u = (p[a] + half) / cfg_.extent_edge * f;
        int i = static_cast<int>(std::ceil(u)) - 1;
        idx[a] = std::clamp(i, 0, f - 1);
    }
    return finest_[finest_index(idx[0], idx[1], idx[2])];
}

void OctreeVolume::subdivide(std::int32_t index) {
    const int v = cfg_.leaf_voxels;
    const std::size_t block_size = static_cast<std::size_t>(v) * v * v;
    const OctreeNode parent = nodes_[static_cast<std::size_t>(index)];
    const auto first = static_cast<std::int32_t>(nodes_.size());
    nodes_[static_cast<std::size_t>(index)].state = BlockState::subdivided;
    nodes_[static_cast<std::size_t>(index)].first_child = first;
    nodes_[static_cast<std::size_t>(index)].payload = -1;
    for (int c = 0; c < 8; ++c) {
        OctreeNode child;
        child.depth = parent.depth + 1;
        child.block = {2 * parent.block[0] + (c & 1), 2 * parent.block[1] + ((c >> 1) & 1), 2 * parent.block[2] + (c >> 2)};
        child.payload = static_cast<std::int64_t>(payload_.size());
        payload_.resize(payload_.size() + block_size, 0.0f);
        for (int lz = 0; lz < v; ++lz) {
            for (int ly = 0; ly < v; ++ly) {
                for (int lx = 0; lx < v; ++lx) {
                    const int gl[3] = {child.block[0] * v + lx, child.block[1] * v + ly, child.block[2] * v + lz};
                    detail::AxisStencil s[3];
                    for (int a = 0; a < 3; ++a) s[a] = detail::axis_stencil((gl[a] + 0.5) / 2.0 - 0.5 - parent.block[a] * v, v);
                    double acc = 0.0;
                    for (int k = 0; k < 8; ++k) {
                        const int kx = k & 1, ky = (k >> 1) & 1, kz = k >> 2;
                        const double w = (kx ? s[0].w1 : s[0].w0) * (ky ? s[1].w1 : s[1].w0) * (kz ? s[2].w1 : s[2].w0);
                        if (w == 0.0) continue;
                        acc += w * payload_[static_cast<std::size_t>(parent.payload) +
                                            local_index(s[0].i0 + kx, s[1].i0 + ky, s[2].i0 + kz)];
                    }
                    payload_[static_cast<std::size_t>(child.payload) + local_index(lx, ly, lz)] = static_cast<float>(acc);
                }
            }
        }
        nodes_.push_back(child);
    }
}

void OctreeVolume::rebuild_index() {
    const std::size_t block_size = static_cast<std::size_t>(cfg_.leaf_voxels) * cfg_.leaf_voxels * cfg_.leaf_voxels;
    std::vector<float> compact;
    leaves_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        auto& n = nodes_[i];
        if (n.state != BlockState::leaf) continue;
        const auto offset = static_cast<std::int64_t>(compact.size());
        compact.insert(compact.end(), payload_.begin() + n.payload, payload_.begin() + n.payload + static_cast<std::int64_t>(block_size));
        n.payload = offset;
        leaves_.push_back(static_cast<std::int32_t>(i));
    }
    payload_ = std::move(compact);
    const int f = cfg_.finest_blocks();
    finest_.assign(static_cast<std::size_t>(f) * f * f, -1);
    for (auto leaf : leaves_) {
        const auto& n = nodes_[static_cast<std::size_t>(leaf)];
        const int span = 1 << (cfg_.max_depth - n.depth);
        for (int z = 0; z < span; ++z)
            for (int y = 0; y < span; ++y)
                for (int x = 0; x < span; ++x)
                    finest_[finest_index(n.block[0] * span + x, n.block[1] * span + y, n.block[2] * span + z)] = leaf;
    }
    uniform_ = leaves_.size() == finest_.size() && max_leaf_depth() == cfg_.max_depth;
    block_offset_.assign(finest_.size(), -1);
    if (uniform_) {
        for (std::size_t i = 0; i < finest_.size(); ++i) block_offset_[i] = nodes_[static_cast<std::size_t>(finest_[i])].payload;
    }
}

std::vector<double> OctreeVolume::split_scores() const {
    const int v = cfg_.leaf_voxels;
    std::vector<double> scores;
    scores.reserve(leaves_.size());
    for (auto leaf : leaves_) {
        const auto p = leaf_payload(leaf);
        double tv = 0.0;
        for (int z = 0; z < v; ++z)
            for (int y = 0; y < v; ++y)
                for (int x = 0; x < v; ++x) {
                    const double c = p[local_index(x, y, z)];
                    if (x + 1 < v) tv += std::abs(p[local_index(x + 1, y, z)] - c);
                    if (y + 1 < v) tv += std::abs(p[local_index(x, y + 1, z)] - c);
                    if (z + 1 < v) tv += std::abs(p[local_index(x, y, z + 1)] - c);
                }
        scores.push_back(tv);
    }
    return scores;
}

void OctreeVolume::refine(std::span<const double> split_score, double tau_split, double tau_prune) {
    if (mode_ == OctreeMode::global) return;
    require(split_score.size() == leaves_.size(), "refine: one split score per active leaf required");
    const auto current = leaves_;
    for (std::size_t li = 0; li < current.size(); ++li) {
        const std::int32_t leaf = current[li];
        const auto p = leaf_payload(leaf);
        const float peak = p.empty() ? 0.0f : *std::max_element(p.begin(), p.end());
        auto& node = nodes_[static_cast<std::size_t>(leaf)];
        if (peak < tau_prune) {
            node.state = BlockState::pruned;
            node.payload = -1;
        } else if (split_score[li] > tau_split && node.depth < cfg_.max_depth) {
            subdivide(leaf);
        }
    }
    rebuild_index();
}

DenseVolume OctreeVolume::to_dense(int nx, int ny, int nz) const {
    DenseVolume out(nx, ny, nz, cfg_.extent_edge);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) out.at(i, j, k) = static_cast<float>(sample(out.voxel_center(i, j, k)));
    return out;
}

double OctreeVolume::max_boundary_jump(int samples_per_face) const {
    require(samples_per_face >= 1, "max_boundary_jump: need at least one probe per face");
    const int f = cfg_.finest_blocks();
    const double fe = cfg_.extent_edge / f;
    const double half = 0.5 * cfg_.extent_edge;
    double worst = 0.0;
    for (int z = 0; z < f; ++z)
        for (int y = 0; y < f; ++y)
            for (int x = 0; x < f; ++x) {
                const int c[3] = {x, y, z};
                const std::int32_t a = finest_[finest_index(x, y, z)];
                if (a < 0) continue;
                for (int axis = 0; axis < 3; ++axis) {
                    int nb[3] = {x, y, z};
                    if (++nb[axis] >= f) continue;
                    const std::int32_t b = finest_[finest_index(nb[0], nb[1], nb[2])];
                    if (b < 0 || b == a) continue;
                    const int u = (axis + 1) % 3;
                    const int w = (axis + 2) % 3;
                    for (int su = 0; su < samples_per_face; ++su)
                        for (int sw = 0; sw < samples_per_face; ++sw) {
                            Vec3 p;
                            p[axis] = -half + (c[axis] + 1) * fe;
                            p[u] = -half + (c[u] + (su + 0.5) / samples_per_face) * fe;
                            p[w] = -half + (c[w] + (sw + 0.5) / samples_per_face) * fe;
                            worst = std::max(worst, std::abs(sample_in_leaf(a, p) - sample_in_leaf(b, p)));
                        }
                }
            }
    return worst;
}

double sample(const OctreeVolume& field, const Vec3& p) { return field.sample(p); }

void scatter_gradient(const OctreeVolume& field, FieldGradient& gradient, const Vec3& p, double weight) {
    require(gradient.size() == field.payload_size(), "scatter_gradient: gradient not congruent with field");
    field.scatter(gradient, p, weight);
}

OctreeVolume init_octree(OctreeMode mode, const OctreeConfig& cfg) { return OctreeVolume::init(mode, cfg); }

DenseVolume to_dense(const OctreeVolume& octree, int nx, int ny, int nz) { return octree.to_dense(nx, ny, nz); }

namespace {

// Calls fn(center_index, neighbour_stencils[3]) for every dense voxel, where a
// missing +axis neighbour is reported as an empty stencil.
template <class Fn>
void for_each_dense_difference(const DenseVolume& f, Fn&& fn) {
    for (int k = 0; k < f.nz(); ++k)
        for (int j = 0; j < f.ny(); ++j)
            for (int i = 0; i < f.nx(); ++i) {
                const std::size_t c = f.index(i, j, k);
                const std::ptrdiff_t nb[3] = {i + 1 < f.nx() ? static_cast<std::ptrdiff_t>(f.index(i + 1, j, k)) : -1,
                                              j + 1 < f.ny() ? static_cast<std::ptrdiff_t>(f.index(i, j + 1, k)) : -1,
                                              k + 1 < f.nz() ? static_cast<std::ptrdiff_t>(f.index(i, j, k + 1)) : -1};
                fn(c, nb);
            }
}

} // namespace

double tv_penalty(const DenseVolume& field) {
    const auto data = field.data();
    double tv = 0.0;
    for_each_dense_difference(field, [&](std::size_t c, const std::ptrdiff_t* nb) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a) {
            if (nb[a] < 0) continue;
            const double d = static_cast<double>(data[static_cast<std::size_t>(nb[a])]) - data[c];
            s += d * d;
        }
        tv += std::sqrt(s);
    });
    return tv;
}

void add_tv_gradient(const DenseVolume& field, FieldGradient& grad, double lambda) {
    require(grad.size() == field.payload_size(), "add_tv_gradient: gradient not congruent with field");
    if (lambda == 0.0) return;
    const auto data = field.data();
    for_each_dense_difference(field, [&](std::size_t c, const std::ptrdiff_t* nb) {
        double d[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < 3; ++a)
            if (nb[a] >= 0) d[a] = static_cast<double>(data[static_cast<std::size_t>(nb[a])]) - data[c];
        const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (n == 0.0) return;
        for (int a = 0; a < 3; ++a) {
            if (nb[a] < 0) continue;
            grad.values[static_cast<std::size_t>(nb[a])] += lambda * d[a] / n;
            grad.values[c] -= lambda * d[a] / n;
        }
    });
}

namespace {

struct StencilEntry {
    std::size_t index;
    double weight;
};

template <class Fn>
void for_each_octree_difference(const OctreeVolume& f, Fn&& fn) {
    const int v = f.config().leaf_voxels;
    std::vector<StencilEntry> nb[3];
    for (auto leaf : f.leaves()) {
        const OctreeNode& node = f.nodes()[static_cast<std::size_t>(leaf)];
        const int n = f.lattice_size(node.depth);
        for (int z = 0; z < v; ++z)
            for (int y = 0; y < v; ++y)
                for (int x = 0; x < v; ++x) {
                    const int g[3] = {node.block[0] * v + x, node.block[1] * v + y, node.block[2] * v + z};
                    bool has[3];
                    for (int a = 0; a < 3; ++a) {
                        nb[a].clear();
                        has[a] = g[a] + 1 < n;
                        if (!has[a]) continue;
                        int q[3] = {g[0], g[1], g[2]};
                        ++q[a];
                        f.visit_node(node, q[0], q[1], q[2], 1.0,
                                     [&](std::size_t idx, double w) { nb[a].push_back({idx, w}); });
                    }
                    fn(static_cast<std::size_t>(node.payload) + f.local_index(x, y, z), nb, has);
                }
    }
}

} // namespace

double tv_penalty(const OctreeVolume& field) {
    const auto data = field.payload();
    double tv = 0.0;
    for_each_octree_difference(field, [&](std::size_t c, const std::vector<StencilEntry>* nb, const bool* has) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a) {
            if (!has[a]) continue;
            double val = 0.0;
            for (const auto& e : nb[a]) val += e.weight * data[e.index];
            const double d = val - data[c];
            s += d * d;
        }
        tv += std::sqrt(s);
    });
    return tv;
}

void add_tv_gradient(const OctreeVolume& field, FieldGradient& grad, double lambda) {
    require(grad.size() == field.payload_size(), "add_tv_gradient: gradient not congruent with field");
    if (lambda == 0.0) return;
    const auto data = field.payload();
    for_each_octree_difference(field, [&](std::size_t c, const std::vector<StencilEntry>* nb, const bool* has) {
        double d[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < 3; ++a) {
            if (!has[a]) continue;
            double val = 0.0;
            for (const auto& e : nb[a]) val += e.weight * data[e.index];
            d[a] = val - data[c];
        }
        const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (n == 0.0) return;
        for (int a = 0; a < 3; ++a) {
            if (!has[a]) continue;
            for (const auto& e : nb[a]) grad.values[e.index] += lambda * e.weight * d[a] / n;
            grad.values[c] -= lambda * d[a] / n;
        }
    });
}

} // namespace ineat
