#include "planedepth/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "planedepth/imgproc.hpp"

namespace planedepth {
namespace {

struct Edge {
  float weight;
  std::uint32_t a;
  std::uint32_t b;
};

bool edge_less(const Edge& x, const Edge& y) {
  if (x.weight != y.weight) return x.weight < y.weight;
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

/// Union-find over voxels that also tracks each component's frame span.
class Components {
 public:
  Components(std::size_t n, std::uint32_t frame_size) : parent_(n), rank_(n, 0), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
    first_.resize(n);
    last_.resize(n);
    for (std::size_t i = 0; i < n; ++i) first_[i] = last_[i] = static_cast<std::uint32_t>(i / frame_size);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  std::uint32_t join(std::uint32_t a, std::uint32_t b) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    size_[a] += size_[b];
    first_[a] = std::min(first_[a], first_[b]);
    last_[a] = std::max(last_[a], last_[b]);
    return a;
  }

  std::uint32_t size(std::uint32_t root) const { return size_[root]; }
  std::uint32_t span(std::uint32_t root) const { return last_[root] - first_[root] + 1; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<std::uint32_t> size_;
  std::vector<std::uint32_t> first_;
  std::vector<std::uint32_t> last_;
};

using ColorFrame = std::vector<std::array<float, 3>>;

ColorFrame color_frame(const RgbImage& image, double sigma) {
  ColorFrame out(image.pixel_count());
  if (sigma <= 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i)
      for (int c = 0; c < 3; ++c) out[i][c] = image.px(i)[c];
    return out;
  }
  for (int c = 0; c < 3; ++c) {
    GrayImage channel(image.width, image.height);
    for (std::size_t i = 0; i < out.size(); ++i) channel.values[i] = image.px(i)[c];
    const GrayImage smooth = gaussian_blur(channel, sigma);
    for (std::size_t i = 0; i < out.size(); ++i) out[i][c] = smooth.values[i];
  }
  return out;
}

float color_distance(const std::array<float, 3>& p, const std::array<float, 3>& q) {
  const float dr = p[0] - q[0], dg = p[1] - q[1], db = p[2] - q[2];
  return std::sqrt(dr * dr + dg * dg + db * db);
}

float flow_magnitude(const FlowField& f, std::size_t i) {
  return std::hypot(f.du[i], f.dv[i]);
}

}  // namespace

void BoundingBox::extend(int x, int y) {
  if (empty()) {
    x0 = x1 = x;
    y0 = y1 = y;
    return;
  }
  x0 = std::min(x0, x);
  x1 = std::max(x1, x);
  y0 = std::min(y0, y);
  y1 = std::max(y1, y);
}

SegmentationLabelMap segment_video(const VideoVolume& video, std::span<const FlowField> forward_flows,
                                   const SegmentationParams& params) {
  video.validate();
  const int W = video.width();
  const int H = video.height();
  const int T = video.frame_count();
  if (!forward_flows.empty() && static_cast<int>(forward_flows.size()) != T - 1) {
    throw Error(ErrorKind::InconsistentInput,
                "segment_video: expected " + std::to_string(T - 1) + " forward flow fields, got " +
                    std::to_string(forward_flows.size()));
  }
  for (const auto& f : forward_flows) require_same_size(W, H, f.width, f.height, "forward flow");
  if (params.k < 0.0) throw Error(ErrorKind::InvalidArgument, "segment_video: k must be >= 0");

  const std::size_t frame_size = static_cast<std::size_t>(W) * H;
  const std::size_t n = frame_size * T;
  if (n >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "segment_video: video volume too large");
  }

  std::vector<ColorFrame> colors;
  colors.reserve(T);
  for (const auto& f : video.frames) colors.push_back(color_frame(f, params.sigma));

  std::vector<Edge> edges;
  edges.reserve(n * 5);
  auto idx = [&](int x, int y, int t) {
    return static_cast<std::uint32_t>(frame_size * t + static_cast<std::size_t>(y) * W + x);
  };
  for (int t = 0; t < T; ++t) {
    const ColorFrame& c = colors[t];
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * W + x;
        auto add = [&](int qx, int qy) {
          const std::size_t q = static_cast<std::size_t>(qy) * W + qx;
          edges.push_back({color_distance(c[p], c[q]), idx(x, y, t), idx(qx, qy, t)});
        };
        if (x + 1 < W) add(x + 1, y);
        if (y + 1 < H) add(x, y + 1);
        if (x + 1 < W && y + 1 < H) add(x + 1, y + 1);
        if (x > 0 && y + 1 < H) add(x - 1, y + 1);
      }
    }
    if (t + 1 >= T) continue;
    const FlowField* flow = forward_flows.empty() ? nullptr : &forward_flows[t];
    const FlowField* next = (flow && t + 1 < T - 1) ? &forward_flows[t + 1] : flow;
    const ColorFrame& c1 = colors[t + 1];
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * W + x;
        int qx = x, qy = y;
        float motion = 0.0f;
        if (flow) {
          qx = std::clamp(static_cast<int>(std::lround(x + flow->du[p])), 0, W - 1);
          qy = std::clamp(static_cast<int>(std::lround(y + flow->dv[p])), 0, H - 1);
          const std::size_t q = static_cast<std::size_t>(qy) * W + qx;
          motion = std::abs(flow_magnitude(*flow, p) - flow_magnitude(*next, q));
        }
        const std::size_t q = static_cast<std::size_t>(qy) * W + qx;
        const float w = 0.5f * (color_distance(c[p], c1[q]) + motion);
        edges.push_back({w, idx(x, y, t), idx(qx, qy, t + 1)});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), edge_less);

  Components comps(n, static_cast<std::uint32_t>(frame_size));
  std::vector<float> threshold(n, static_cast<float>(params.k));
  for (const Edge& e : edges) {
    std::uint32_t a = comps.find(e.a);
    std::uint32_t b = comps.find(e.b);
    if (a == b) continue;
    if (e.weight <= threshold[a] && e.weight <= threshold[b]) {
      const std::uint32_t r = comps.join(a, b);
      threshold[r] = e.weight + static_cast<float>(params.k / comps.size(r));
    }
  }

  if (params.min_region_size > 1) {
    const auto min_size = static_cast<std::uint64_t>(params.min_region_size);
    auto small = [&](std::uint32_t root) {
      return static_cast<std::uint64_t>(comps.size(root)) < min_size * comps.span(root);
    };
    for (const Edge& e : edges) {
      std::uint32_t a = comps.find(e.a);
      std::uint32_t b = comps.find(e.b);
      if (a != b && (small(a) || small(b))) comps.join(a, b);
    }
  }

  SegmentationLabelMap out(W, H, T);
  std::vector<std::int32_t> remap(n, -1);
  std::int32_t next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t r = comps.find(static_cast<std::uint32_t>(i));
    if (remap[r] < 0) remap[r] = next_id++;
    out.labels[i] = remap[r];
  }
  return out;
}

RegionTable region_index(const SegmentationLabelMap& labels) {
  validate_labels(labels);
  RegionTable table;
  table.width = labels.width;
  table.height = labels.height;
  table.frames = labels.frames;
  const int R = labels.region_count();
  table.regions.resize(R);
  for (auto& r : table.regions) {
    r.pixels.resize(labels.frames);
    r.boxes.resize(labels.frames);
  }
  const int W = labels.width;
  const int H = labels.height;
  for (int t = 0; t < labels.frames; ++t) {
    const auto frame = labels.frame(t);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * W + x;
        const std::int32_t id = frame[i];
        RegionInfo& info = table.regions[id];
        info.pixel_count += 1;
        info.pixels[t].push_back(static_cast<std::int32_t>(i));
        info.boxes[t].extend(x, y);
        if (x + 1 < W && frame[i + 1] != id) {
          table.adjacency.emplace(std::min(id, frame[i + 1]), std::max(id, frame[i + 1]));
        }
        if (y + 1 < H && frame[i + W] != id) {
          table.adjacency.emplace(std::min(id, frame[i + W]), std::max(id, frame[i + W]));
        }
      }
    }
  }
  return table;
}

void validate_labels(const SegmentationLabelMap& labels) {
  if (labels.width <= 0 || labels.height <= 0 || labels.frames <= 0) {
    throw Error(ErrorKind::EmptyInput, "label map is empty");
  }
  if (labels.labels.size() != labels.frame_size() * labels.frames) {
    throw Error(ErrorKind::DimensionMismatch, "label map storage does not match its dimensions");
  }
  const int R = labels.region_count();
  std::vector<std::uint8_t> used(R, 0);
  for (std::int32_t id : labels.labels) {
    if (id < 0) throw Error(ErrorKind::InconsistentInput, "label map contains a negative ID");
    used[id] = 1;
  }
  for (int r = 0; r < R; ++r) {
    if (!used[r]) {
      throw Error(ErrorKind::InconsistentInput,
                  "label map IDs are not contiguous: " + std::to_string(r) + " is unused");
    }
  }
}

void compact_labels(SegmentationLabelMap& labels) {
  std::vector<std::int32_t> remap;
  std::int32_t next_id = 0;
  for (auto& id : labels.labels) {
    if (id < 0) throw Error(ErrorKind::InconsistentInput, "label map contains a negative ID");
    if (static_cast<std::size_t>(id) >= remap.size()) remap.resize(id + 1, -1);
    if (remap[id] < 0) remap[id] = next_id++;
    id = remap[id];
  }
}

}  // namespace planedepth
