#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ineat {

// Row-major float image; row v = 0 is the bottom row (detector v axis is +z).
struct Image {
    int nu = 0;
    int nv = 0;
    std::vector<float> data;

    Image() = default;
    Image(int width, int height, float fill = 0.0f)
        : nu(width), nv(height), data(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

    float& at(int u, int v) { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(nu) + static_cast<std::size_t>(u)]; }
    float at(int u, int v) const { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(nu) + static_cast<std::size_t>(u)]; }
    std::size_t size() const { return data.size(); }
    std::span<const float> pixels() const { return data; }

    bool operator==(const Image&) const = default;
};

struct ProjectionImage : Image {
    double theta_deg = 0.0;

    ProjectionImage() = default;
    ProjectionImage(int width, int height, double theta) : Image(width, height), theta_deg(theta) {}
};

} // namespace ineat
