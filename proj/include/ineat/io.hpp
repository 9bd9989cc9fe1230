#pragma once

// On-disk formats. Volumes: "INEATVOL", u32 version (1), u32 nx, ny, nz,
// f32 extent edge, then nx·ny·nz f32 samples, x fastest, all little-endian.
// Images: grayscale PFM with a negative (little-endian) scale, bottom row
// first. Manifests: JSON.

#include "ineat/field.hpp"
#include "ineat/image.hpp"
#include "ineat/phantom.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ineat::io {

void write_volume(const std::filesystem::path& path, const DenseVolume& volume);
DenseVolume read_volume(const std::filesystem::path& path);

void write_image(const std::filesystem::path& path, const Image& image);
Image read_image(const std::filesystem::path& path);

// 16-bit binary PGM scaled linearly so the image max maps to 65535; the max is
// written to `<path>.max` as text. Negative values clamp to 0.
void write_pgm16(const std::filesystem::path& path, const Image& image);

// Image paths are stored relative to the manifest's directory.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const DatasetManifest& manifest);
// `base` resolves image paths; pass an empty path to skip the existence check.
DatasetManifest manifest_from_json(std::string_view text, const std::filesystem::path& base);

// Projection images of a manifest, each tagged with its assumed angle.
ProjectionSet load_projections(const std::filesystem::path& manifest_path, const DatasetManifest& manifest);
// Writes images as <stem>_NNNN.pfm beside the manifest and the manifest itself.
void write_dataset(const std::filesystem::path& manifest_path, Dataset& dataset, std::string_view stem = "proj");

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

} // namespace ineat::io
