#include "planedepth/eval.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "planedepth/geometry.hpp"

namespace planedepth {
namespace {

struct Accumulator {
  double log_sum = 0.0;
  double rel_sum = 0.0;
  std::int64_t n = 0;

  void add(double d, double d_hat, LogBase base) {
    const double ratio = d / d_hat;
    log_sum += std::abs(base == LogBase::Ten ? std::log10(ratio) : std::log(ratio));
    rel_sum += std::abs(d - d_hat) / d;
    ++n;
  }
  ErrorStats stats() const {
    if (n == 0) return {};
    return {log_sum / static_cast<double>(n), rel_sum / static_cast<double>(n), n};
  }
};

}  // namespace

EvalReport evaluate(std::span<const DepthMap> pred, std::span<const DepthMap> gt,
                    std::span<const GeometricContextMap> class_maps, LogBase base) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorKind::DimensionMismatch, "evaluate: " + std::to_string(pred.size()) + " predicted frames vs " +
                                                  std::to_string(gt.size()) + " ground-truth frames");
  }
  if (!class_maps.empty() && class_maps.size() != gt.size()) {
    throw Error(ErrorKind::DimensionMismatch, "evaluate: need one class map per frame");
  }
  Accumulator all;
  std::array<Accumulator, kGeomClasses> cls;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    const DepthMap& g = gt[t];
    const DepthMap& p = pred[t];
    require_same_size(p.width, p.height, g.width, g.height, "predicted vs ground-truth depth");
    if (!class_maps.empty()) {
      require_same_size(class_maps[t].width, class_maps[t].height, g.width, g.height, "class map vs ground truth");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.valid[i]) continue;
      const double d = g.values[i];
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw Error(ErrorKind::InconsistentInput, "evaluate: valid ground truth must be positive and finite");
      }
      const double d_hat = p.valid[i] ? static_cast<double>(p.values[i]) : kMaxDepth;
      if (!(d_hat > 0.0) || !std::isfinite(d_hat)) {
        throw Error(ErrorKind::InconsistentInput, "evaluate: predicted depth must be positive and finite");
      }
      all.add(d, d_hat, base);
      if (!class_maps.empty()) {
        int best = 0;
        for (int c = 1; c < kGeomClasses; ++c)
          if (class_maps[t].at(i, c) > class_maps[t].at(i, best)) best = c;
        cls[best].add(d, d_hat, base);
      }
    }
  }
  if (all.n == 0) throw Error(ErrorKind::EmptyInput, "evaluate: no valid ground-truth pixels");
  EvalReport r;
  r.base = base;
  r.overall = all.stats();
  if (!class_maps.empty()) {
    r.per_class.emplace();
    for (int c = 0; c < kGeomClasses; ++c) (*r.per_class)[c] = cls[c].stats();
  }
  return r;
}

EvalReport merge_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::EmptyInput, "merge_reports: nothing to merge");
  EvalReport out;
  out.base = reports.front().base;
  auto pool = [](ErrorStats& acc, const ErrorStats& s) {
    const auto n = acc.pixels + s.pixels;
    if (n == 0) return;
    acc.log_error = (acc.log_error * acc.pixels + s.log_error * s.pixels) / n;
    acc.rel_error = (acc.rel_error * acc.pixels + s.rel_error * s.pixels) / n;
    acc.pixels = n;
  };
  bool classes = true;
  for (const auto& r : reports) classes = classes && r.per_class.has_value();
  if (classes) out.per_class.emplace();
  for (const auto& r : reports) {
    if (r.base != out.base) throw Error(ErrorKind::InconsistentInput, "merge_reports: mixed log bases");
    pool(out.overall, r.overall);
    if (classes)
      for (int c = 0; c < kGeomClasses; ++c) pool((*out.per_class)[c], (*r.per_class)[c]);
  }
  return out;
}

nlohmann::json to_json(const EvalReport& report) {
  auto stats = [](const ErrorStats& s) {
    return nlohmann::json{{"log_error", s.log_error}, {"rel_error", s.rel_error}, {"pixels", s.pixels}};
  };
  nlohmann::json j = stats(report.overall);
  j["log_base"] = report.base == LogBase::Ten ? "10" : "e";
  if (report.per_class) {
    nlohmann::json per;
    for (int c = 0; c < kGeomClasses; ++c)
      per[to_string(static_cast<GeometricClass>(c))] = stats((*report.per_class)[c]);
    j["per_class"] = per;
  }
  return j;
}

std::string format_report(const EvalReport& report, const std::string& title) {
  const char* log_name = report.base == LogBase::Ten ? "log10" : "log";
  std::string out;
  char line[160];
  if (!title.empty()) out += title + "\n";
  std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s\n", "class", log_name, "rel", "pixels");
  out += line;
  auto row = [&](const char* name, const ErrorStats& s) {
    std::snprintf(line, sizeof(line), "%-10s %12.6f %12.6f %12lld\n", name, s.log_error, s.rel_error,
                  static_cast<long long>(s.pixels));
    out += line;
  };
  row("all", report.overall);
  if (report.per_class)
    for (int c = 0; c < kGeomClasses; ++c) row(to_string(static_cast<GeometricClass>(c)), (*report.per_class)[c]);
  return out;
}

}  // namespace planedepth
