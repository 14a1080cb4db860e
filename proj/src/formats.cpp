#include "planedepth/formats.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "planedepth/binary_io.hpp"

namespace planedepth {
namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Format, std::string("cannot parse ") + what + " from '" + s + "'");
  }
}

int parse_int(const std::string& s, const char* what) {
  const double v = parse_double(s, what);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw Error(ErrorKind::Format, std::string(what) + " must be an integer, got '" + s + "'");
  }
  return static_cast<int>(v);
}

void check_dims(long long w, long long h, const char* format) {
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) {
    throw Error(ErrorKind::Format, std::string(format) + ": implausible dimensions " + std::to_string(w) + "x" +
                                       std::to_string(h));
  }
}

void check_depth_map(const DepthMap& d) {
  if (d.width <= 0 || d.height <= 0 || d.values.size() != d.size() || d.valid.size() != d.size()) {
    throw Error(ErrorKind::InvalidArgument, "depth map storage does not match its dimensions");
  }
}

std::string png_to_memory(png_image& image, const void* data, std::ptrdiff_t stride) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, stride, nullptr)) {
    throw Error(ErrorKind::Io, std::string("PNG encode failed: ") + image.message);
  }
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, data, stride, nullptr)) {
    throw Error(ErrorKind::Io, std::string("PNG encode failed: ") + image.message);
  }
  bytes.resize(size);
  return bytes;
}

struct PngReader {
  png_image image{};
  explicit PngReader(const std::string& bytes, const fs::path& path) {
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
      throw Error(ErrorKind::Format, path.string() + ": not a readable PNG (" + image.message + ")");
    }
  }
  ~PngReader() { png_image_free(&image); }
};

}  // namespace

void write_file_atomic(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  std::ostringstream buffer(std::ios::binary);
  writer(buffer);
  if (!buffer) throw Error(ErrorKind::Io, "failed serializing " + path.string());
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    const std::string bytes = buffer.str();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, "failed writing " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into place at " + path.string());
  }
}

std::string indexed_name(const std::string& stem, int index, const std::string& extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%06d.", index);
  return stem + buf + extension;
}

std::string frame_name(int index, const std::string& extension) { return indexed_name("frame", index, extension); }

// ---------------------------------------------------------------- PFM

void write_pfm(std::ostream& out, const DepthMap& depth) {
  check_depth_map(depth);
  out << "Pf\n" << depth.width << ' ' << depth.height << "\n-1.0\n";
  for (int y = depth.height - 1; y >= 0; --y)
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * depth.width + x;
      binio::write_le<float>(out, depth.valid[p] ? depth.values[p] : 0.0f);
    }
}

DepthMap read_pfm(std::istream& in) {
  std::string magic;
  long long w = 0, h = 0;
  double scale = 0.0;
  if (!(in >> magic) || magic != "Pf") throw Error(ErrorKind::Format, "PFM: expected grayscale \"Pf\" header");
  if (!(in >> w >> h >> scale) || scale == 0.0) throw Error(ErrorKind::Format, "PFM: malformed header");
  check_dims(w, h, "PFM");
  in.get();  // single whitespace before the raster
  DepthMap d(static_cast<int>(w), static_cast<int>(h));
  for (long long y = h - 1; y >= 0; --y)
    for (long long x = 0; x < w; ++x) {
      float v;
      if (scale < 0.0) {
        v = binio::read_le<float>(in, "PFM raster");
      } else {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::Format, "PFM: truncated raster");
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
        std::memcpy(&v, b, 4);
      }
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (std::isfinite(v) && v > 0.0f) {
        d.values[p] = v;
        d.valid[p] = 1;
      }
    }
  return d;
}

void write_pfm(const fs::path& path, const DepthMap& depth) {
  write_file_atomic(path, [&](std::ostream& out) { write_pfm(out, depth); });
}

DepthMap read_pfm(const fs::path& path) {
  auto in = open_in(path);
  return read_pfm(in);
}

// ---------------------------------------------------------------- PNG

void write_depth_png16(const fs::path& path, const DepthMap& depth) {
  check_depth_map(depth);
  std::vector<std::uint16_t> mm(depth.size(), 0);
  for (std::size_t p = 0; p < depth.size(); ++p) {
    if (!depth.valid[p]) continue;
    const double v = std::round(static_cast<double>(depth.values[p]) * 1000.0);
    mm[p] = static_cast<std::uint16_t>(std::clamp(v, 1.0, 65535.0));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(depth.width);
  image.height = static_cast<png_uint_32>(depth.height);
  image.format = PNG_FORMAT_LINEAR_Y;
  const std::string bytes = png_to_memory(image, mm.data(), 0);
  write_file_atomic(path, [&](std::ostream& out) { out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); });
}

DepthMap read_depth_png16(const fs::path& path) {
  const std::string bytes = read_all(path);
  PngReader reader(bytes, path);
  png_image& image = reader.image;
  if ((image.format & PNG_FORMAT_FLAG_COLOR) || !(image.format & PNG_FORMAT_FLAG_LINEAR)) {
    throw Error(ErrorKind::Format, path.string() + ": expected a 16-bit grayscale PNG");
  }
  image.format = PNG_FORMAT_LINEAR_Y;
  std::vector<std::uint16_t> mm(PNG_IMAGE_SIZE(image) / 2);
  if (!png_image_finish_read(&image, nullptr, mm.data(), 0, nullptr)) {
    throw Error(ErrorKind::Format, path.string() + ": " + image.message);
  }
  DepthMap d(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t p = 0; p < d.size(); ++p) {
    if (mm[p] == 0) continue;
    d.values[p] = static_cast<float>(mm[p] / 1000.0);
    d.valid[p] = 1;
  }
  return d;
}

void write_png_rgb(const fs::path& path, const RgbImage& img) {
  if (img.width <= 0 || img.height <= 0 || img.data.size() != img.pixel_count() * 3) {
    throw Error(ErrorKind::InvalidArgument, "RGB image storage does not match its dimensions");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  const std::string bytes = png_to_memory(image, img.data.data(), 0);
  write_file_atomic(path, [&](std::ostream& out) { out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); });
}

void write_ppm(const fs::path& path, const RgbImage& img) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  });
}

RgbImage read_image(const fs::path& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    std::istringstream in(bytes);
    std::string magic;
    long long w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (!in || maxval != 255) throw Error(ErrorKind::Format, path.string() + ": only 8-bit binary PPM is supported");
    check_dims(w, h, "PPM");
    in.get();
    RgbImage img(static_cast<int>(w), static_cast<int>(h));
    if (!in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()))) {
      throw Error(ErrorKind::Format, path.string() + ": truncated PPM raster");
    }
    return img;
  }
  PngReader reader(bytes, path);
  png_image& image = reader.image;
  image.format = PNG_FORMAT_RGB;
  RgbImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr)) {
    throw Error(ErrorKind::Format, path.string() + ": " + image.message);
  }
  return img;
}

VideoVolume read_video(const fs::path& dir) {
  VideoVolume v;
  for (int i = 0;; ++i) {
    fs::path p = dir / frame_name(i, "png");
    if (!fs::exists(p)) p = dir / frame_name(i, "ppm");
    if (!fs::exists(p)) break;
    v.frames.push_back(read_image(p));
  }
  if (v.frames.empty()) {
    throw Error(ErrorKind::EmptyInput, "no frames found in " + dir.string() + " (expected frame_000000.png or .ppm)");
  }
  v.validate();
  return v;
}

void write_video(const fs::path& dir, const VideoVolume& video, const std::string& extension) {
  video.validate();
  for (int i = 0; i < video.frame_count(); ++i) {
    const fs::path p = dir / frame_name(i, extension);
    if (extension == "png") write_png_rgb(p, video.frames[i]);
    else if (extension == "ppm") write_ppm(p, video.frames[i]);
    else throw Error(ErrorKind::InvalidArgument, "frame extension must be png or ppm");
  }
}

// ---------------------------------------------------------------- labels

void write_labels(std::ostream& out, const SegmentationLabelMap& labels) {
  if (labels.width <= 0 || labels.height <= 0 || labels.frames <= 0 || labels.width > 65535 ||
      labels.height > 65535 || labels.labels.size() != labels.frame_size() * labels.frames) {
    throw Error(ErrorKind::InvalidArgument, "label map storage does not match its dimensions");
  }
  out.write("STSEG1", 6);
  binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(labels.width));
  binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(labels.height));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(labels.frames));
  binio::write_le<std::uint16_t>(out, 0);
  for (std::int32_t v : labels.labels) binio::write_le<std::int32_t>(out, v);
}

SegmentationLabelMap read_labels(std::istream& in) {
  binio::expect_magic(in, "STSEG1", "label map");
  const auto w = binio::read_le<std::uint16_t>(in, "label width");
  const auto h = binio::read_le<std::uint16_t>(in, "label height");
  const auto t = binio::read_le<std::uint32_t>(in, "label frames");
  binio::read_le<std::uint16_t>(in, "label header");
  check_dims(w, h, "label map");
  if (t == 0 || t > 1000000) throw Error(ErrorKind::Format, "label map: implausible frame count");
  SegmentationLabelMap labels(w, h, static_cast<int>(t));
  for (auto& v : labels.labels) {
    v = binio::read_le<std::int32_t>(in, "label raster");
    if (v < 0) throw Error(ErrorKind::Format, "label map: negative label");
  }
  return labels;
}

void write_labels(const fs::path& path, const SegmentationLabelMap& labels) {
  write_file_atomic(path, [&](std::ostream& out) { write_labels(out, labels); });
}

SegmentationLabelMap read_labels(const fs::path& path) {
  auto in = open_in(path);
  return read_labels(in);
}

// ---------------------------------------------------------------- flow

void write_flo(std::ostream& out, const FlowField& flow) {
  if (flow.width <= 0 || flow.height <= 0 || flow.du.size() != flow.size() || flow.dv.size() != flow.size() ||
      flow.size() != static_cast<std::size_t>(flow.width) * flow.height) {
    throw Error(ErrorKind::InvalidArgument, "flow storage does not match its dimensions");
  }
  binio::write_le<float>(out, kFloTag);
  binio::write_le<std::int32_t>(out, flow.width);
  binio::write_le<std::int32_t>(out, flow.height);
  for (std::size_t p = 0; p < flow.size(); ++p) {
    binio::write_le<float>(out, flow.du[p]);
    binio::write_le<float>(out, flow.dv[p]);
  }
}

FlowField read_flo(std::istream& in) {
  if (binio::read_le<float>(in, "flow tag") != kFloTag) throw Error(ErrorKind::Format, "flow: bad tag");
  const auto w = binio::read_le<std::int32_t>(in, "flow width");
  const auto h = binio::read_le<std::int32_t>(in, "flow height");
  check_dims(w, h, "flow");
  FlowField f(w, h);
  for (std::size_t p = 0; p < f.size(); ++p) {
    f.du[p] = binio::read_le<float>(in, "flow raster");
    f.dv[p] = binio::read_le<float>(in, "flow raster");
  }
  return f;
}

void write_flo(const fs::path& path, const FlowField& flow) {
  write_file_atomic(path, [&](std::ostream& out) { write_flo(out, flow); });
}

FlowField read_flo(const fs::path& path) {
  auto in = open_in(path);
  return read_flo(in);
}

// ---------------------------------------------------------------- planes

void write_planes_csv(std::ostream& out, const std::vector<PlaneRecord>& planes) {
  out << "region,frame,a1,a2,a3\n";
  for (const auto& p : planes) {
    out << p.region << ',' << p.frame << ',' << format_double(p.alpha.x()) << ',' << format_double(p.alpha.y())
        << ',' << format_double(p.alpha.z()) << '\n';
  }
}

std::vector<PlaneRecord> read_planes_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("region,frame,a1,a2,a3", 0) != 0) {
    throw Error(ErrorKind::Format, "plane CSV: missing header region,frame,a1,a2,a3");
  }
  std::vector<PlaneRecord> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw Error(ErrorKind::Format, "plane CSV: expected 5 columns in '" + line + "'");
    PlaneRecord r;
    r.region = parse_int(cells[0], "region");
    r.frame = parse_int(cells[1], "frame");
    for (int c = 0; c < 3; ++c) r.alpha[c] = parse_double(cells[2 + c], "plane parameter");
    if (r.region < 0 || r.frame < 0) throw Error(ErrorKind::Format, "plane CSV: negative index");
    out.push_back(r);
  }
  return out;
}

void write_planes_csv(const fs::path& path, const std::vector<PlaneRecord>& planes) {
  write_file_atomic(path, [&](std::ostream& out) { write_planes_csv(out, planes); });
}

std::vector<PlaneRecord> read_planes_csv(const fs::path& path) {
  auto in = open_in(path);
  return read_planes_csv(in);
}

std::vector<PlaneRecord> plane_records(const PlaneTable& table) {
  std::vector<PlaneRecord> out;
  for (std::size_t t = 0; t < table.size(); ++t)
    for (std::size_t r = 0; r < table[t].size(); ++r)
      if (table[t][r]) out.push_back({static_cast<int>(r), static_cast<int>(t), table[t][r]->alpha});
  return out;
}

PlaneTable plane_table(const std::vector<PlaneRecord>& records, int frames, int regions) {
  PlaneTable table(frames, std::vector<std::optional<PlaneParams>>(regions));
  for (const auto& r : records) {
    if (r.frame >= frames || r.region >= regions) {
      throw Error(ErrorKind::InconsistentInput, "plane record (" + std::to_string(r.region) + "," +
                                                    std::to_string(r.frame) + ") outside the label map");
    }
    table[r.frame][r.region] = PlaneParams{r.alpha};
  }
  return table;
}

// ---------------------------------------------------------------- points

std::vector<Vec3> read_xyz_text(std::istream& in) {
  std::vector<Vec3> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ss(line);
    Vec3 p;
    if (!(ss >> p.x() >> p.y() >> p.z()) || !p.allFinite()) {
      throw Error(ErrorKind::Format, "point cloud line " + std::to_string(n) + ": expected three numbers");
    }
    out.push_back(p);
  }
  return out;
}

void write_xyz_text(std::ostream& out, const std::vector<Vec3>& points) {
  for (const auto& p : points)
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
}

std::vector<Vec3> read_xyz_binary(std::istream& in) {
  std::vector<Vec3> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    float v[3];
    for (float& c : v) c = binio::read_le<float>(in, "packed point");
    out.emplace_back(v[0], v[1], v[2]);
  }
  return out;
}

void write_xyz_binary(std::ostream& out, const std::vector<Vec3>& points) {
  for (const auto& p : points)
    for (int c = 0; c < 3; ++c) binio::write_le<float>(out, static_cast<float>(p[c]));
}

std::vector<Vec3> read_point_cloud(const fs::path& path) {
  auto in = open_in(path);
  return path.extension() == ".bin" ? read_xyz_binary(in) : read_xyz_text(in);
}

void write_point_cloud(const fs::path& path, const std::vector<Vec3>& points) {
  write_file_atomic(path, [&](std::ostream& out) {
    if (path.extension() == ".bin") write_xyz_binary(out, points);
    else write_xyz_text(out, points);
  });
}

// ---------------------------------------------------------------- GC maps

void write_gc_map(const fs::path& path, const GeometricContextMap& map) {
  map.validate();
  write_file_atomic(path, [&](std::ostream& out) {
    out.write("PDGC01", 6);
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.width));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.height));
    for (float v : map.confidence) binio::write_le<float>(out, v);
  });
}

GeometricContextMap read_gc_map(const fs::path& path) {
  auto in = open_in(path);
  binio::expect_magic(in, "PDGC01", "geometric context map");
  const auto w = binio::read_le<std::uint32_t>(in, "gc width");
  const auto h = binio::read_le<std::uint32_t>(in, "gc height");
  check_dims(w, h, "geometric context map");
  GeometricContextMap map(static_cast<int>(w), static_cast<int>(h));
  for (float& v : map.confidence) v = binio::read_le<float>(in, "gc raster");
  map.validate();
  return map;
}

// ---------------------------------------------------------------- features

void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << "region,frame,pixel_count";
  for (const auto& n : feature_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << r.region << ',' << r.frame << ',' << r.pixel_count;
    for (double v : r.features.values) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<FeatureRow> read_features_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Format, "feature CSV: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  const auto& names = feature_names();
  if (header.size() != names.size() + 3 || header[0] != "region" || header[1] != "frame" ||
      header[2] != "pixel_count" || !std::equal(names.begin(), names.end(), header.begin() + 3)) {
    throw Error(ErrorKind::Format, "feature CSV: header does not match the feature schema");
  }
  std::vector<FeatureRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw Error(ErrorKind::Format, "feature CSV: wrong column count");
    FeatureRow r;
    r.region = parse_int(cells[0], "region");
    r.frame = parse_int(cells[1], "frame");
    r.pixel_count = parse_int(cells[2], "pixel_count");
    for (std::size_t k = 0; k < names.size(); ++k) r.features.values[k] = parse_double(cells[3 + k], "feature");
    rows.push_back(r);
  }
  return rows;
}

void write_features_csv(const fs::path& path, const std::vector<FeatureRow>& rows) {
  write_file_atomic(path, [&](std::ostream& out) { write_features_csv(out, rows); });
}

std::vector<FeatureRow> read_features_csv(const fs::path& path) {
  auto in = open_in(path);
  return read_features_csv(in);
}

}  // namespace planedepth
