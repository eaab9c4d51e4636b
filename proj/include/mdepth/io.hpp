#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mdepth/geometry.hpp"
#include "mdepth/grid.hpp"

namespace mdepth {

enum class DepthFileFormat { Pfm, Png16, RawF32 };

DepthFileFormat parse_depth_format(const std::string& name);  // pfm | png16 | rawf32
// From the extension: .pfm, .png, .dkf/.raw.
DepthFileFormat depth_format_from_path(const std::filesystem::path& path);

inline constexpr int kMaxDimension = 1 << 16;

// PFM: "Pf", W H, scale (negative = little endian), float32 rows bottom-up;
//      non-finite or non-positive => invalid.
// PNG16: 16-bit grayscale, metres = value * scale, 0 => invalid.
// RAWF32: "DKF1", u32 LE width, u32 LE height, float32 LE row-major; NaN => invalid.
// Values are stored as float32; invalid pixels of PFM/RAWF32 read back as NaN.
DepthMap read_depth(const std::filesystem::path& path, DepthFileFormat format,
                    double scale = 1.0);
DepthMap read_depth(const std::filesystem::path& path);

struct WriteStats {
  std::size_t clipped = 0;  // PNG16 values clamped into [1, 65535]
};

// PFM is written little endian; invalid pixels become NaN (PFM, RAWF32) or 0 (PNG16).
WriteStats write_depth(const DepthMap& map, const std::filesystem::path& path,
                       DepthFileFormat format, double scale = 1.0);

// In-memory variants used by the file functions.
DepthMap decode_depth(const std::vector<unsigned char>& bytes, DepthFileFormat format,
                      double scale = 1.0);
std::vector<unsigned char> encode_depth(const DepthMap& map, DepthFileFormat format,
                                        double scale, WriteStats* stats = nullptr);

// RGB in [0, 1]; 8-bit PNG on disk.
using RgbImage = Grid<Eigen::Vector3d>;
RgbImage read_rgb(const std::filesystem::path& path);
void write_rgb(const RgbImage& image, const std::filesystem::path& path);

// Uncertainty maps use RAWF32 with NaN as "no value".
Grid<double> read_scalar_grid(const std::filesystem::path& path);
void write_scalar_grid(const Grid<double>& grid, const std::filesystem::path& path);

// JSON object with fx, fy, cx, cy, width, height, or "K" (3x3 row-major,
// nested or flat) plus width and height. Unknown keys are ignored with a warning.
Intrinsics read_camera(const std::filesystem::path& path);
Intrinsics parse_camera(const std::string& text);
void write_camera(const Intrinsics& K, const std::filesystem::path& path);

struct ManifestRecord {
  std::filesystem::path rgb;  // may be empty
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path camera;       // GT camera; may be empty
  std::filesystem::path uncertainty;  // may be empty
  std::filesystem::path pred_camera;  // may be empty
};

// Tab-separated, one record per line:
//   rgb  pred  gt  camera  [uncertainty  [pred_camera]]
// "-" marks an absent optional path. '#' starts a comment line. Directives:
//   @dataset <name>
//   @max_depth <metres>
struct DatasetManifest {
  std::string dataset;
  double max_depth = 0.0;
  std::vector<ManifestRecord> records;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
// Paths are written as given (relative paths stay relative to the manifest).
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace mdepth
