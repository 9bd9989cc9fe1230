#pragma once

#include "ineat/field.hpp"
#include "ineat/geometry.hpp"
#include "ineat/image.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ineat {

inline constexpr double kPsnrCap = 120.0;

// 10·log10(MAX² / MSE) with MAX the reference maximum; capped at kPsnrCap.
double psnr(const Image& test, const Image& reference);

struct AngleErrorReport {
    double global_offset_deg = 0.0;  // circular mean of estimate − truth
    double rmse_deg = 0.0;
    double max_abs_deg = 0.0;
    std::vector<double> residuals_deg;  // offset removed, in (−180, 180]
};

AngleErrorReport angle_error(const AngleSequence& estimate, const AngleSequence& truth);

struct SineCurveRow {
    std::size_t index = 0;
    double assumed_deg = 0.0;
    std::optional<double> true_deg;
    std::optional<double> corrected_deg;
};

std::vector<SineCurveRow> sine_curve_rows(const AngleSequence& assumed, const AngleSequence* truth,
                                          const AngleSequence* corrected);
// index,assumed_deg,true_deg,corrected_deg,sin_assumed,sin_true,sin_corrected;
// absent sequences leave their columns empty.
std::string sine_curve_csv(const AngleSequence& assumed, const AngleSequence* truth, const AngleSequence* corrected);

// Maximum intensity along x, y and z: images are (ny × nz), (nx × nz) and
// (nx × ny), the first listed axis running along u.
std::array<Image, 3> mip_triview(const DenseVolume& volume);

// Slice k of the volume as an nx × ny image.
Image xy_slice(const DenseVolume& volume, int k);
inline Image central_xy_slice(const DenseVolume& volume) { return xy_slice(volume, volume.nz() / 2); }

} // namespace ineat
