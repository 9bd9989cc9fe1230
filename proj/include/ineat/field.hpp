#pragma once

// Explicit density fields. Both representations store cell-centred samples
// and interpolate trilinearly; lattice indices are clamped to the extent
// boundary (clamp-to-edge) and every point strictly outside the extent
// samples to 0.

#include "ineat/geometry.hpp"
#include "ineat/vec3.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ineat {

namespace detail {

struct AxisStencil {
    int i0;
    double w0;
    double w1;
};

// g is a continuous lattice coordinate (0 at the first sample centre).
inline AxisStencil axis_stencil(double g, int n) {
    if (!(g > 0.0)) return {0, 1.0, 0.0};
    if (g >= n - 1) return {n - 2, 0.0, 1.0};
    int i0 = static_cast<int>(g);
    double f = g - i0;
    if (i0 > n - 2) {
        i0 = n - 2;
        f = 1.0;
    }
    return {i0, 1.0 - f, f};
}

// Corner c = cx + 2·cy + 4·cz gets weight wx[cx]·wy[cy]·wz[cz].
inline void trilinear_weights(const AxisStencil& sx, const AxisStencil& sy, const AxisStencil& sz, double* w) {
    const double xy00 = sx.w0 * sy.w0, xy10 = sx.w1 * sy.w0, xy01 = sx.w0 * sy.w1, xy11 = sx.w1 * sy.w1;
    w[0] = xy00 * sz.w0;
    w[1] = xy10 * sz.w0;
    w[2] = xy01 * sz.w0;
    w[3] = xy11 * sz.w0;
    w[4] = xy00 * sz.w1;
    w[5] = xy10 * sz.w1;
    w[6] = xy01 * sz.w1;
    w[7] = xy11 * sz.w1;
}

// Tree-ordered weighted sum of one stencil; shared by every field type so
// equal stencils give bit-identical samples.
inline double stencil_sum(const std::size_t* idx, const double* w, int count, const float* data) {
    if (count == 8) {
        const double a = w[0] * data[idx[0]] + w[1] * data[idx[1]];
        const double b = w[2] * data[idx[2]] + w[3] * data[idx[3]];
        const double c = w[4] * data[idx[4]] + w[5] * data[idx[5]];
        const double d = w[6] * data[idx[6]] + w[7] * data[idx[7]];
        return (a + b) + (c + d);
    }
    double acc = 0.0;
    for (int i = 0; i < count; ++i) acc += w[i] * data[idx[i]];
    return acc;
}

inline bool inside_extent(const Vec3& p, double half) {
    return p.x >= -half && p.x <= half && p.y >= -half && p.y <= half && p.z >= -half && p.z <= half;
}

} // namespace detail

// ∂Loss/∂σ for every stored value of the owning field, same layout.
struct FieldGradient {
    std::vector<double> values;

    void zero() { std::fill(values.begin(), values.end(), 0.0); }
    std::size_t size() const { return values.size(); }
};

class DenseVolume {
public:
    DenseVolume() = default;
    DenseVolume(int nx, int ny, int nz, double extent_edge = 1.0);
    DenseVolume(int nx, int ny, int nz, double extent_edge, std::vector<float> data);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    double extent_edge() const { return edge_; }
    std::size_t voxel_count() const { return data_.size(); }
    std::size_t payload_size() const { return data_.size(); }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nx_) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny_) * k);
    }
    float& at(int i, int j, int k) { return data_[index(i, j, k)]; }
    float at(int i, int j, int k) const { return data_[index(i, j, k)]; }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    // World-space centre of voxel (i, j, k).
    Vec3 voxel_center(int i, int j, int k) const;

    // Throws unless dims >= 2 and every value is finite and non-negative.
    void validate() const;

    FieldGradient make_gradient() const { return FieldGradient{std::vector<double>(data_.size(), 0.0)}; }

    template <class Fn>
    void visit_stencil(const Vec3& p, Fn&& fn) const {
        const double half = 0.5 * edge_;
        if (!detail::inside_extent(p, half)) return;
        const auto sx = detail::axis_stencil((p.x + half) / hx_ - 0.5, nx_);
        const auto sy = detail::axis_stencil((p.y + half) / hy_ - 0.5, ny_);
        const auto sz = detail::axis_stencil((p.z + half) / hz_ - 0.5, nz_);
        double w[8];
        detail::trilinear_weights(sx, sy, sz, w);
        const std::size_t base = index(sx.i0, sy.i0, sz.i0);
        const std::size_t sxy = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
        for (int c = 0; c < 8; ++c) {
            const int cx = c & 1;
            const int cy = (c >> 1) & 1;
            const int cz = c >> 2;
            fn(base + static_cast<std::size_t>(cx) + static_cast<std::size_t>(nx_) * cy + sxy * cz, w[c]);
        }
    }

    // Calls fn(indices, weights, count) once per quadrature point of q, in
    // order. Lattice coordinates are affine in t, so no per-sample divisions.
    template <class Fn>
    void visit_ray(const RayQuadrature& q, Fn&& fn) const {
        const double half = 0.5 * edge_;
        const double ax = (q.origin.x + half) / hx_ - 0.5, bx = q.direction.x / hx_;
        const double ay = (q.origin.y + half) / hy_ - 0.5, by = q.direction.y / hy_;
        const double az = (q.origin.z + half) / hz_ - 0.5, bz = q.direction.z / hz_;
        const std::size_t sy = static_cast<std::size_t>(nx_);
        const std::size_t sz = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
        std::size_t idx[8];
        double w[8];
        for (int k = 0; k < q.count; ++k) {
            const double t = q.t0 + (k + 0.5) * q.weight;
            const auto s0 = detail::axis_stencil(ax + bx * t, nx_);
            const auto s1 = detail::axis_stencil(ay + by * t, ny_);
            const auto s2 = detail::axis_stencil(az + bz * t, nz_);
            const std::size_t base = index(s0.i0, s1.i0, s2.i0);
            idx[0] = base;
            idx[1] = base + 1;
            idx[2] = base + sy;
            idx[3] = base + 1 + sy;
            idx[4] = base + sz;
            idx[5] = base + 1 + sz;
            idx[6] = base + sy + sz;
            idx[7] = base + 1 + sy + sz;
            detail::trilinear_weights(s0, s1, s2, w);
            fn(idx, w, 8);
        }
    }

    std::span<const float> payload() const { return data_; }
    std::span<float> payload() { return data_; }

    double sample(const Vec3& p) const {
        double acc = 0.0;
        visit_stencil(p, [&](std::size_t idx, double w) { acc += w * data_[idx]; });
        return acc;
    }

    void scatter(FieldGradient& grad, const Vec3& p, double weight) const {
        visit_stencil(p, [&](std::size_t idx, double w) { grad.values[idx] += weight * w; });
    }

private:
    int nx_ = 0;
    int ny_ = 0;
    int nz_ = 0;
    double edge_ = 1.0;
    double hx_ = 0.0;
    double hy_ = 0.0;
    double hz_ = 0.0;
    std::vector<float> data_;
};

double sample(const DenseVolume& field, const Vec3& p);
void scatter_gradient(const DenseVolume& field, FieldGradient& gradient, const Vec3& p, double weight);

enum class OctreeMode { adaptive, global };
enum class BlockState : std::uint8_t { leaf, subdivided, pruned };

std::string_view to_string(OctreeMode mode);

struct OctreeConfig {
    int root_blocks = 4;  // G: root grid is G×G×G
    int max_depth = 2;    // finest block grid is G·2^max_depth per axis
    int leaf_voxels = 8;  // V: each leaf stores V×V×V samples
    double extent_edge = 1.0;

    void validate() const;
    int finest_blocks() const { return root_blocks << max_depth; }
    int effective_resolution() const { return finest_blocks() * leaf_voxels; }
};

struct OctreeNode {
    BlockState state = BlockState::leaf;
    int depth = 0;
    std::array<int, 3> block{0, 0, 0};  // block coordinate at this depth
    std::int32_t first_child = -1;
    std::int64_t payload = -1;  // offset of the V³ samples, leaves only
};

// Explicit octree of voxel blocks. Sampling a point uses the lattice of the
// leaf that owns it; lattice neighbours that fall into another leaf are read
// from that leaf directly when it has the same depth, and by clamped
// trilinear interpolation inside it otherwise. A uniform tree is therefore
// exactly a tiled dense grid, while unequal-depth neighbours can leave seams.
class OctreeVolume {
public:
    static OctreeVolume init(OctreeMode mode, const OctreeConfig& cfg = {});
    // Global-mode tree holding the values of a dense grid with matching
    // effective resolution on every axis.
    static OctreeVolume from_dense(const DenseVolume& dense, const OctreeConfig& cfg);

    const OctreeConfig& config() const { return cfg_; }
    OctreeMode mode() const { return mode_; }
    double extent_edge() const { return cfg_.extent_edge; }

    const std::vector<OctreeNode>& nodes() const { return nodes_; }
    const std::vector<std::int32_t>& leaves() const { return leaves_; }
    std::size_t leaf_count() const { return leaves_.size(); }
    std::size_t pruned_count() const;
    int max_leaf_depth() const;

    std::span<float> payload() { return payload_; }
    std::span<const float> payload() const { return payload_; }
    std::size_t payload_size() const { return payload_.size(); }
    std::span<const float> leaf_payload(std::int32_t node) const;
    std::span<float> leaf_payload(std::int32_t node);

    FieldGradient make_gradient() const { return FieldGradient{std::vector<double>(payload_.size(), 0.0)}; }

    // Leaf owning p (faces belong to the lexicographically smaller block), or
    // -1 when p is outside the extent or in a pruned block.
    std::int32_t leaf_at(const Vec3& p) const;

    template <class Fn>
    void visit_stencil(const Vec3& p, Fn&& fn) const {
        const std::int32_t leaf = leaf_at(p);
        if (leaf < 0) return;
        visit_leaf_stencil(leaf, p, fn);
    }

    // Stencil of p evaluated from `leaf`'s lattice, even when p lies on (or
    // just beyond) one of its faces.
    template <class Fn>
    void visit_leaf_stencil(std::int32_t leaf, const Vec3& p, Fn&& fn) const {
        const OctreeNode& node = nodes_[static_cast<std::size_t>(leaf)];
        const int n = lattice_size(node.depth);
        const double h = cfg_.extent_edge / n;
        const double half = 0.5 * cfg_.extent_edge;
        const auto sx = detail::axis_stencil((p.x + half) / h - 0.5, n);
        const auto sy = detail::axis_stencil((p.y + half) / h - 0.5, n);
        const auto sz = detail::axis_stencil((p.z + half) / h - 0.5, n);
        double w[8];
        detail::trilinear_weights(sx, sy, sz, w);
        for (int c = 0; c < 8; ++c) {
            if (w[c] == 0.0) continue;
            visit_node(node, sx.i0 + (c & 1), sy.i0 + ((c >> 1) & 1), sz.i0 + (c >> 2), w[c], fn);
        }
    }

    // Visits the stored entries that define lattice node (ix, iy, iz) of
    // `from`'s depth. Pruned owners contribute nothing.
    template <class Fn>
    void visit_node(const OctreeNode& from, int ix, int iy, int iz, double weight, Fn&& fn) const {
        const int v = cfg_.leaf_voxels;
        const int d = from.depth;
        if (ix / v == from.block[0] && iy / v == from.block[1] && iz / v == from.block[2]) {
            fn(static_cast<std::size_t>(from.payload) + local_index(ix - from.block[0] * v, iy - from.block[1] * v,
                                                                   iz - from.block[2] * v),
               weight);
            return;
        }
        const int shift = cfg_.max_depth - d;
        const int fx = ((2 * ix + 1) << shift) / (2 * v);
        const int fy = ((2 * iy + 1) << shift) / (2 * v);
        const int fz = ((2 * iz + 1) << shift) / (2 * v);
        const std::int32_t owner = finest_[finest_index(fx, fy, fz)];
        if (owner < 0) return;
        const OctreeNode& other = nodes_[static_cast<std::size_t>(owner)];
        if (other.depth == d) {
            fn(static_cast<std::size_t>(other.payload) + local_index(ix - other.block[0] * v, iy - other.block[1] * v,
                                                                    iz - other.block[2] * v),
               weight);
            return;
        }
        // Node centre interpolated inside the other leaf's own samples.
        const double h_from = cfg_.extent_edge / lattice_size(d);
        const double h_other = cfg_.extent_edge / lattice_size(other.depth);
        const double g[3] = {(ix + 0.5) * h_from / h_other - 0.5 - other.block[0] * v,
                             (iy + 0.5) * h_from / h_other - 0.5 - other.block[1] * v,
                             (iz + 0.5) * h_from / h_other - 0.5 - other.block[2] * v};
        const auto sx = detail::axis_stencil(g[0], v);
        const auto sy = detail::axis_stencil(g[1], v);
        const auto sz = detail::axis_stencil(g[2], v);
        double w[8];
        detail::trilinear_weights(sx, sy, sz, w);
        for (int c = 0; c < 8; ++c) {
            if (w[c] == 0.0) continue;
            fn(static_cast<std::size_t>(other.payload) + local_index(sx.i0 + (c & 1), sy.i0 + ((c >> 1) & 1), sz.i0 + (c >> 2)),
               weight * w[c]);
        }
    }

    // Same contract as DenseVolume::visit_ray. Uniform trees (every leaf at
    // max depth) walk the finest lattice directly through the block offset
    // table; other trees gather each point's stencil.
    template <class Fn>
    void visit_ray(const RayQuadrature& q, Fn&& fn) const {
        std::size_t idx[64];
        double w[64];
        if (!uniform_) {
            for (int k = 0; k < q.count; ++k) {
                int count = 0;
                visit_stencil(q.point(k), [&](std::size_t i, double wt) {
                    idx[count] = i;
                    w[count] = wt;
                    ++count;
                });
                if (count > 0) fn(idx, w, count);
            }
            return;
        }
        const int n = lattice_size(cfg_.max_depth);
        const int v = cfg_.leaf_voxels;
        const double h = cfg_.extent_edge / n;
        const double half = 0.5 * cfg_.extent_edge;
        const double a[3] = {(q.origin.x + half) / h - 0.5, (q.origin.y + half) / h - 0.5, (q.origin.z + half) / h - 0.5};
        const double b[3] = {q.direction.x / h, q.direction.y / h, q.direction.z / h};
        for (int k = 0; k < q.count; ++k) {
            const double t = q.t0 + (k + 0.5) * q.weight;
            detail::AxisStencil s[3];
            int blk[3][2];
            int loc[3][2];
            for (int ax = 0; ax < 3; ++ax) {
                s[ax] = detail::axis_stencil(a[ax] + b[ax] * t, n);
                for (int c = 0; c < 2; ++c) {
                    const int i = s[ax].i0 + c;
                    blk[ax][c] = i / v;
                    loc[ax][c] = i - blk[ax][c] * v;
                }
            }
            detail::trilinear_weights(s[0], s[1], s[2], w);
            for (int c = 0; c < 8; ++c) {
                const int cx = c & 1;
                const int cy = (c >> 1) & 1;
                const int cz = c >> 2;
                idx[c] = static_cast<std::size_t>(block_offset_[finest_index(blk[0][cx], blk[1][cy], blk[2][cz])]) +
                         local_index(loc[0][cx], loc[1][cy], loc[2][cz]);
            }
            fn(idx, w, 8);
        }
    }

    bool is_uniform() const { return uniform_; }

    double sample(const Vec3& p) const {
        double acc = 0.0;
        visit_stencil(p, [&](std::size_t idx, double w) { acc += w * payload_[idx]; });
        return acc;
    }

    double sample_in_leaf(std::int32_t leaf, const Vec3& p) const {
        double acc = 0.0;
        visit_leaf_stencil(leaf, p, [&](std::size_t idx, double w) { acc += w * payload_[idx]; });
        return acc;
    }

    void scatter(FieldGradient& grad, const Vec3& p, double weight) const {
        visit_stencil(p, [&](std::size_t idx, double w) { grad.values[idx] += weight * w; });
    }

    // Discrete total variation (sum of |first differences|) of each active
    // leaf's own samples, in leaves() order.
    std::vector<double> split_scores() const;

    // Prunes leaves whose max sample is below tau_prune, then subdivides
    // remaining leaves scoring above tau_split (children are trilinear
    // upsamplings of the parent). No-op in global mode.
    void refine(std::span<const double> split_score, double tau_split, double tau_prune);

    DenseVolume to_dense(int nx, int ny, int nz) const;

    // Largest |difference| between the two one-sided samples on faces shared
    // by distinct active leaves, probed on a samples_per_face² grid per
    // finest-block face.
    double max_boundary_jump(int samples_per_face = 3) const;

    // World-space bounds (min corner, edge) of a node's block.
    Vec3 block_min(const OctreeNode& node) const;
    double block_edge(int depth) const { return cfg_.extent_edge / (cfg_.root_blocks << depth); }
    int lattice_size(int depth) const { return (cfg_.root_blocks << depth) * cfg_.leaf_voxels; }

    std::size_t local_index(int a, int b, int c) const {
        const auto v = static_cast<std::size_t>(cfg_.leaf_voxels);
        return static_cast<std::size_t>(a) + v * (static_cast<std::size_t>(b) + v * static_cast<std::size_t>(c));
    }

private:
    std::size_t finest_index(int fx, int fy, int fz) const {
        const auto f = static_cast<std::size_t>(cfg_.finest_blocks());
        return static_cast<std::size_t>(fx) + f * (static_cast<std::size_t>(fy) + f * static_cast<std::size_t>(fz));
    }
    void subdivide(std::int32_t node);
    void rebuild_index();

    OctreeConfig cfg_;
    OctreeMode mode_ = OctreeMode::adaptive;
    std::vector<OctreeNode> nodes_;
    std::vector<float> payload_;
    std::vector<std::int32_t> leaves_;
    std::vector<std::int32_t> finest_;
    std::vector<std::int64_t> block_offset_;
    bool uniform_ = false;
};

double sample(const OctreeVolume& field, const Vec3& p);
void scatter_gradient(const OctreeVolume& field, FieldGradient& gradient, const Vec3& p, double weight);
OctreeVolume init_octree(OctreeMode mode, const OctreeConfig& cfg = {});
DenseVolume to_dense(const OctreeVolume& octree, int nx, int ny, int nz);

// Isotropic discrete TV: Σ over stored samples of the Euclidean norm of the
// forward differences to the +x, +y, +z lattice neighbours (zero across the
// far extent boundary).
double tv_penalty(const DenseVolume& field);
double tv_penalty(const OctreeVolume& field);

// Adds lambda·∂TV/∂σ into grad. Zero-norm samples take the zero subgradient.
void add_tv_gradient(const DenseVolume& field, FieldGradient& grad, double lambda);
void add_tv_gradient(const OctreeVolume& field, FieldGradient& grad, double lambda);

} // namespace ineat
