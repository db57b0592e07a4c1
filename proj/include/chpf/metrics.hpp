#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "chpf/geometry.hpp"

namespace chpf {

/// One frame of a run, as written to trace CSVs.
struct RunTraceRow {
  std::int64_t frame = 0;
  double alpha = 0.0;
  std::int64_t n_reinvig = 0;
  double err_add = 0.0;
  double err_adds = 0.0;
  double ess = 0.0;
  double sum_L = 0.0;
  double sum_C = 0.0;
  std::int64_t wall_micros = 0;
};

struct AucSummary {
  double auc_add = 0.0;
  double auc_adds = 0.0;
  double threshold_max = 0.1;
  std::size_t n_frames = 0;
};

/// Mean distance between corresponding model points under the two poses.
double add_error(std::span<const Eigen::Vector3d> model_points, const Pose& est, const Pose& gt);

/// Mean over estimated points of the distance to the nearest ground-truth point
/// (brute force, O(n^2)).
double adds_error(std::span<const Eigen::Vector3d> model_points, const Pose& est, const Pose& gt);

/// Position error for planar states (the planar analog of ADD and ADD-S).
double planar_error(const PlanarState& est, const PlanarState& gt);

/// Mean of (1 - min(e, T) / T): the normalized area under the accuracy-vs-
/// threshold curve on [0, T]. Throws on an empty list or T <= 0.
double auc(std::span<const double> errors, double threshold_max);

AucSummary summarize_auc(std::span<const RunTraceRow> trace, double threshold_max);

inline constexpr std::int64_t kNeverRecovered = std::numeric_limits<std::int64_t>::max();

/// First frame >= event_end from which err_add stays below `success_threshold`
/// for `sustain` consecutive frames; kNeverRecovered if that never happens.
std::int64_t recovery_time(std::span<const RunTraceRow> trace, std::int64_t event_end,
                           double success_threshold, std::size_t sustain);

}  // namespace chpf
