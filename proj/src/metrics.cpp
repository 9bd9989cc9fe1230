#include "ineat/metrics.hpp"

#include "ineat/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ineat {

double psnr(const Image& test, const Image& reference) {
    require(test.nu == reference.nu && test.nv == reference.nv, "psnr: image dimensions differ");
    require(!reference.data.empty(), "psnr: empty reference");
    const auto [lo, hi] = std::minmax_element(reference.data.begin(), reference.data.end());
    require(*lo != *hi, "psnr: reference slice is constant");
    double mse = 0.0;
    for (std::size_t i = 0; i < test.data.size(); ++i) {
        const double d = static_cast<double>(test.data[i]) - reference.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(test.data.size());
    const double peak = *hi;
    if (!(mse > 0.0)) return kPsnrCap;
    const double db = 10.0 * std::log10(peak * peak / mse);
    return std::min(db, kPsnrCap);
}

AngleErrorReport angle_error(const AngleSequence& estimate, const AngleSequence& truth) {
    require(estimate.size() == truth.size(), "angle_error: sequence lengths differ");
    AngleErrorReport rep;
    const std::size_t n = estimate.size();
    if (n == 0) return rep;
    std::vector<double> raw(n);
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        raw[i] = wrap_180(estimate[i] - truth[i]);
        s += std::sin(deg_to_rad(raw[i]));
        c += std::cos(deg_to_rad(raw[i]));
    }
    rep.global_offset_deg = (s == 0.0 && c == 0.0) ? 0.0 : std::atan2(s, c) * (180.0 / kPi);
    double sq = 0.0;
    rep.residuals_deg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = wrap_180(raw[i] - rep.global_offset_deg);
        rep.residuals_deg[i] = r;
        sq += r * r;
        rep.max_abs_deg = std::max(rep.max_abs_deg, std::abs(r));
    }
    rep.rmse_deg = std::sqrt(sq / static_cast<double>(n));
    return rep;
}

std::vector<SineCurveRow> sine_curve_rows(const AngleSequence& assumed, const AngleSequence* truth,
                                          const AngleSequence* corrected) {
    require(!truth || truth->size() == assumed.size(), "sine_curve: true angle count differs");
    require(!corrected || corrected->size() == assumed.size(), "sine_curve: corrected angle count differs");
    std::vector<SineCurveRow> rows(assumed.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].index = i;
        rows[i].assumed_deg = assumed[i];
        if (truth) rows[i].true_deg = (*truth)[i];
        if (corrected) rows[i].corrected_deg = (*corrected)[i];
    }
    return rows;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }
std::string sin_opt(const std::optional<double>& v) { return v ? fmt(std::sin(deg_to_rad(*v))) : std::string(); }

} // namespace

std::string sine_curve_csv(const AngleSequence& assumed, const AngleSequence* truth, const AngleSequence* corrected) {
    std::string out = "index,assumed_deg,true_deg,corrected_deg,sin_assumed,sin_true,sin_corrected\n";
    for (const auto& r : sine_curve_rows(assumed, truth, corrected)) {
        out += std::to_string(r.index) + ',' + fmt(r.assumed_deg) + ',' + fmt_opt(r.true_deg) + ',' +
               fmt_opt(r.corrected_deg) + ',' + fmt(std::sin(deg_to_rad(r.assumed_deg))) + ',' + sin_opt(r.true_deg) +
               ',' + sin_opt(r.corrected_deg) + '\n';
    }
    return out;
}

std::array<Image, 3> mip_triview(const DenseVolume& volume) {
    const int nx = volume.nx(), ny = volume.ny(), nz = volume.nz();
    std::array<Image, 3> out{Image(ny, nz), Image(nx, nz), Image(nx, ny)};
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const float v = volume.at(i, j, k);
                float& a = out[0].at(j, k);
                float& b = out[1].at(i, k);
                float& c = out[2].at(i, j);
                const bool first_x = i == 0, first_y = j == 0, first_z = k == 0;
                a = first_x ? v : std::max(a, v);
                b = first_y ? v : std::max(b, v);
                c = first_z ? v : std::max(c, v);
            }
    return out;
}

Image xy_slice(const DenseVolume& volume, int k) {
    require(k >= 0 && k < volume.nz(), "xy_slice: slice index out of range");
    Image out(volume.nx(), volume.ny());
    for (int j = 0; j < volume.ny(); ++j)
        for (int i = 0; i < volume.nx(); ++i) out.at(i, j) = volume.at(i, j, k);
    return out;
}

} // namespace ineat
