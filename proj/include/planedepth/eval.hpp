#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "planedepth/features.hpp"

namespace planedepth {

enum class LogBase { Ten, E };

struct ErrorStats {
  double log_error = 0.0;  // mean |log d - log d_hat|
  double rel_error = 0.0;  // mean |d - d_hat| / d
  std::int64_t pixels = 0;
};

struct EvalReport {
  LogBase base = LogBase::Ten;
  ErrorStats overall;
  /// Filled when class maps were given; pixels go to their argmax class.
  std::optional<std::array<ErrorStats, kGeomClasses>> per_class;
};

/// Means over pixels valid in gt. pred pixels that are invalid count as
/// kMaxDepth. class_maps is empty or has one map per frame.
EvalReport evaluate(std::span<const DepthMap> pred, std::span<const DepthMap> gt,
                    std::span<const GeometricContextMap> class_maps = {}, LogBase base = LogBase::Ten);

/// Pools several reports weighted by pixel count.
EvalReport merge_reports(std::span<const EvalReport> reports);

nlohmann::json to_json(const EvalReport& report);
/// Aligned-column text.
std::string format_report(const EvalReport& report, const std::string& title = "");

}  // namespace planedepth
