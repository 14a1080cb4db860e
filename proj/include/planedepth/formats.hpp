#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "planedepth/depth_mrf.hpp"
#include "planedepth/features.hpp"
#include "planedepth/lidar.hpp"

namespace planedepth {

namespace fs = std::filesystem;

/// Writes through a temporary sibling and renames it into place, so a
/// failed write never leaves a partial file at path.
void write_file_atomic(const fs::path& path, const std::function<void(std::ostream&)>& writer);

// Depth. Invalid pixels are stored as 0 and read back invalid.
void write_pfm(std::ostream& out, const DepthMap& depth);
DepthMap read_pfm(std::istream& in);
void write_pfm(const fs::path& path, const DepthMap& depth);
DepthMap read_pfm(const fs::path& path);

/// 16-bit grayscale PNG in millimeters; saturates at 65535 mm.
inline constexpr double kPng16MaxMeters = 65.535;
void write_depth_png16(const fs::path& path, const DepthMap& depth);
DepthMap read_depth_png16(const fs::path& path);

// Frames.
void write_png_rgb(const fs::path& path, const RgbImage& image);
void write_ppm(const fs::path& path, const RgbImage& image);
/// PNG (8-bit gray, RGB or RGBA, converted to RGB) or binary PPM.
RgbImage read_image(const fs::path& path);
/// Frames named frame_%06d.png (or .ppm), starting at 0.
VideoVolume read_video(const fs::path& dir);
void write_video(const fs::path& dir, const VideoVolume& video, const std::string& extension = "png");
std::string frame_name(int index, const std::string& extension);

// Labels: "STSEG1", u16 width, u16 height, u32 frames, u16 reserved, then
// int32 labels, all little-endian.
void write_labels(std::ostream& out, const SegmentationLabelMap& labels);
SegmentationLabelMap read_labels(std::istream& in);
void write_labels(const fs::path& path, const SegmentationLabelMap& labels);
SegmentationLabelMap read_labels(const fs::path& path);

// Flow: float 202021.25, int32 width, int32 height, (du, dv) float32 pairs.
inline constexpr float kFloTag = 202021.25f;
void write_flo(std::ostream& out, const FlowField& flow);
FlowField read_flo(std::istream& in);
void write_flo(const fs::path& path, const FlowField& flow);
FlowField read_flo(const fs::path& path);

// Planes: CSV "region,frame,a1,a2,a3".
struct PlaneRecord {
  int region = 0;
  int frame = 0;
  Vec3 alpha = Vec3::Zero();
};
void write_planes_csv(std::ostream& out, const std::vector<PlaneRecord>& planes);
std::vector<PlaneRecord> read_planes_csv(std::istream& in);
void write_planes_csv(const fs::path& path, const std::vector<PlaneRecord>& planes);
std::vector<PlaneRecord> read_planes_csv(const fs::path& path);
std::vector<PlaneRecord> plane_records(const PlaneTable& table);
PlaneTable plane_table(const std::vector<PlaneRecord>& records, int frames, int regions);

// Point clouds: whitespace-separated "x y z" lines, or packed float32 xyz.
std::vector<Vec3> read_xyz_text(std::istream& in);
void write_xyz_text(std::ostream& out, const std::vector<Vec3>& points);
std::vector<Vec3> read_xyz_binary(std::istream& in);
void write_xyz_binary(std::ostream& out, const std::vector<Vec3>& points);
/// Chooses by extension: .bin is packed float32, anything else text.
std::vector<Vec3> read_point_cloud(const fs::path& path);
void write_point_cloud(const fs::path& path, const std::vector<Vec3>& points);

// Geometric context: "PDGC01", u32 width, u32 height, 5 float32 per pixel.
void write_gc_map(const fs::path& path, const GeometricContextMap& map);
GeometricContextMap read_gc_map(const fs::path& path);

// Region features: CSV with region, frame, pixel_count and the 133 named
// columns.
void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_features_csv(std::istream& in);
void write_features_csv(const fs::path& path, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_features_csv(const fs::path& path);

/// Numbered per-frame file name, e.g. indexed_name("depth", 3, "pfm") is
/// depth_000003.pfm.
std::string indexed_name(const std::string& stem, int index, const std::string& extension);

}  // namespace planedepth
