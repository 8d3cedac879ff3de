#pragma once

#include <string>

#include "wenets/common.hpp"

namespace wenets {

enum class TargetMetric { Pesq, Polqa, Stoi };

std::string to_string(TargetMetric m);
TargetMetric target_metric_from_string(const std::string& s);

// Native metric range, used for report-time clamping and histogram bins.
struct MetricRange {
  double lo, hi;
};
MetricRange native_range(TargetMetric m);

// Maps native target values into the network's [-1, 1]-ish training space.
// Affine: mapped = (y + shift) * scale  (PESQ/POLQA: shift=-2.75, scale=1/1.75,
// sending 1 -> -1 and 4.5 -> +1 exactly). ZScore: mapped = (y - mean) / stddev
// with training-set statistics (population stddev).
struct TargetMapper {
  enum class Kind { Affine, ZScore };
  Kind kind = Kind::Affine;
  double scale = 1.0 / 1.75;
  double shift = -2.75;
  double mean = 0.0;
  double stddev = 1.0;

  double map(double y) const {
    return kind == Kind::Affine ? (y + shift) * scale : (y - mean) / stddev;
  }
  double unmap(double m) const {
    return kind == Kind::Affine ? m / scale - shift : m * stddev + mean;
  }

  static TargetMapper affine_quality() { return TargetMapper{}; }
  static TargetMapper zscore(double mean, double stddev) {
    if (!(stddev > 0.0)) throw DataError("zscore mapper: stddev must be positive");
    TargetMapper t;
    t.kind = Kind::ZScore;
    t.mean = mean;
    t.stddev = stddev;
    return t;
  }
};

inline std::string to_string(TargetMetric m) {
  switch (m) {
    case TargetMetric::Pesq: return "pesq";
    case TargetMetric::Polqa: return "polqa";
    case TargetMetric::Stoi: return "stoi";
  }
  return "?";
}

inline TargetMetric target_metric_from_string(const std::string& s) {
  if (s == "pesq") return TargetMetric::Pesq;
  if (s == "polqa") return TargetMetric::Polqa;
  if (s == "stoi") return TargetMetric::Stoi;
  throw DataError("unknown target metric '" + s + "' (want pesq|polqa|stoi)");
}

inline MetricRange native_range(TargetMetric m) {
  return m == TargetMetric::Stoi ? MetricRange{0.0, 1.0} : MetricRange{1.0, 4.5};
}

}  // namespace wenets
