#include "planedepth/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "planedepth/imgproc.hpp"

namespace planedepth {
namespace {

/// Horn-Schunck neighborhood average (1/6 edge, 1/12 corner), border replicated.
GrayImage hs_average(const GrayImage& f) {
  GrayImage out(f.width, f.height);
  const int W = f.width, H = f.height;
  for (int y = 0; y < H; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, H - 1);
    for (int x = 0; x < W; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, W - 1);
      const double edge = f.at(xm, y) + f.at(xp, y) + f.at(x, ym) + f.at(x, yp);
      const double corner = f.at(xm, ym) + f.at(xp, ym) + f.at(xm, yp) + f.at(xp, yp);
      out.at(x, y) = static_cast<float>(edge / 6.0 + corner / 12.0);
    }
  }
  return out;
}

GrayImage upsample_flow(const GrayImage& f, int width, int height) {
  GrayImage out = resize_bilinear(f, width, height);
  const float scale = static_cast<float>(width) / f.width;
  for (float& v : out.values) v *= scale;
  return out;
}

void estimate_level(const GrayImage& a, const GrayImage& b, GrayImage& u, GrayImage& v,
                    const FlowParams& params) {
  const int W = a.width, H = a.height;
  const double alpha2 = params.smoothness * params.smoothness;
  for (int warp = 0; warp < params.warps_per_level; ++warp) {
    GrayImage warped(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        warped.at(x, y) = sample_bilinear(b, x + static_cast<double>(u.at(x, y)), y + static_cast<double>(v.at(x, y)));

    GrayImage ix(W, H), iy(W, H), it(W, H);
    for (int y = 0; y < H; ++y) {
      const int ym = std::max(y - 1, 0), yp = std::min(y + 1, H - 1);
      for (int x = 0; x < W; ++x) {
        const int xm = std::max(x - 1, 0), xp = std::min(x + 1, W - 1);
        // Gradients of the mean of both images keep the linearization symmetric.
        ix.at(x, y) = 0.25f * ((a.at(xp, y) - a.at(xm, y)) + (warped.at(xp, y) - warped.at(xm, y)));
        iy.at(x, y) = 0.25f * ((a.at(x, yp) - a.at(x, ym)) + (warped.at(x, yp) - warped.at(x, ym)));
        it.at(x, y) = warped.at(x, y) - a.at(x, y);
      }
    }

    const GrayImage u0 = u, v0 = v;
    for (int iter = 0; iter < params.iterations; ++iter) {
      const GrayImage ubar = hs_average(u);
      const GrayImage vbar = hs_average(v);
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double gx = ix.values[i], gy = iy.values[i];
        const double residual = gx * (ubar.values[i] - u0.values[i]) +
                                gy * (vbar.values[i] - v0.values[i]) + it.values[i];
        const double step = residual / (alpha2 + gx * gx + gy * gy);
        u.values[i] = static_cast<float>(ubar.values[i] - gx * step);
        v.values[i] = static_cast<float>(vbar.values[i] - gy * step);
      }
    }
  }
}

}  // namespace

FlowField dense_flow(const RgbImage& a, const RgbImage& b, const FlowParams& params) {
  require_same_size(a.width, a.height, b.width, b.height, "dense_flow second frame");
  if (a.width == 0 || a.height == 0) throw Error(ErrorKind::EmptyInput, "dense_flow: empty frame");
  if (params.pyramid_levels < 1 || params.iterations < 0 || params.smoothness <= 0.0) {
    throw Error(ErrorKind::InvalidArgument, "dense_flow: invalid parameters");
  }

  std::vector<GrayImage> pa{gaussian_blur(to_gray(a), params.presmooth)};
  std::vector<GrayImage> pb{gaussian_blur(to_gray(b), params.presmooth)};
  while (static_cast<int>(pa.size()) < params.pyramid_levels && pa.back().width >= 16 &&
         pa.back().height >= 16) {
    pa.push_back(downsample(pa.back()));
    pb.push_back(downsample(pb.back()));
  }

  GrayImage u(pa.back().width, pa.back().height);
  GrayImage v(pa.back().width, pa.back().height);
  for (int level = static_cast<int>(pa.size()) - 1; level >= 0; --level) {
    const GrayImage& la = pa[level];
    if (u.width != la.width || u.height != la.height) {
      u = upsample_flow(u, la.width, la.height);
      v = upsample_flow(v, la.width, la.height);
    }
    estimate_level(la, pb[level], u, v, params);
  }

  FlowField out(a.width, a.height);
  out.du = std::move(u.values);
  out.dv = std::move(v.values);
  return out;
}

std::vector<FlowField> forward_flows(const VideoVolume& video, const FlowParams& params) {
  video.validate();
  std::vector<FlowField> out;
  for (int t = 0; t + 1 < video.frame_count(); ++t)
    out.push_back(dense_flow(video.frames[t], video.frames[t + 1], params));
  return out;
}

std::vector<FlowField> backward_flows(const VideoVolume& video, const FlowParams& params) {
  video.validate();
  std::vector<FlowField> out;
  FlowField pad(video.width(), video.height());
  pad.padded = true;
  out.push_back(std::move(pad));
  for (int t = 1; t < video.frame_count(); ++t)
    out.push_back(dense_flow(video.frames[t], video.frames[t - 1], params));
  return out;
}

FlowField compose_flows(const FlowField& first, const FlowField& second) {
  require_same_size(first.width, first.height, second.width, second.height, "compose_flows");
  GrayImage su(second.width, second.height), sv(second.width, second.height);
  su.values = second.du;
  sv.values = second.dv;
  FlowField out(first.width, first.height);
  for (int y = 0; y < first.height; ++y) {
    for (int x = 0; x < first.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * first.width + x;
      const double tx = x + static_cast<double>(first.du[i]);
      const double ty = y + static_cast<double>(first.dv[i]);
      out.du[i] = first.du[i] + sample_bilinear(su, tx, ty);
      out.dv[i] = first.dv[i] + sample_bilinear(sv, tx, ty);
    }
  }
  out.padded = first.padded || second.padded;
  return out;
}

FlowField flow_to(std::span<const FlowField> backward, int j, int offset) {
  if (j < 0 || j >= static_cast<int>(backward.size())) {
    throw Error(ErrorKind::InvalidArgument, "flow_to: frame index " + std::to_string(j) + " out of range");
  }
  if (offset < 1) throw Error(ErrorKind::InvalidArgument, "flow_to: offset must be >= 1");
  if (j - offset < 0) {
    FlowField pad(backward[j].width, backward[j].height);
    pad.padded = true;
    return pad;
  }
  FlowField out = backward[j];
  for (int s = 1; s < offset; ++s) out = compose_flows(out, backward[j - s]);
  return out;
}

FlowField flow_to(const VideoVolume& video, int j, int offset, const FlowParams& params) {
  video.validate();
  if (j < 0 || j >= video.frame_count()) {
    throw Error(ErrorKind::InvalidArgument, "flow_to: frame index " + std::to_string(j) + " out of range");
  }
  if (offset < 1) throw Error(ErrorKind::InvalidArgument, "flow_to: offset must be >= 1");
  if (j - offset < 0) {
    FlowField pad(video.width(), video.height());
    pad.padded = true;
    return pad;
  }
  std::vector<FlowField> chain(j + 1);
  for (int t = j - offset + 1; t <= j; ++t) chain[t] = dense_flow(video.frames[t], video.frames[t - 1], params);
  return flow_to(std::span<const FlowField>(chain), j, offset);
}

}  // namespace planedepth
