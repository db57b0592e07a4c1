#include "chpf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chpf {

namespace {

void require_points(std::span<const Eigen::Vector3d> pts) {
  if (pts.empty()) throw std::invalid_argument("model point set is empty");
}

}  // namespace

double add_error(std::span<const Eigen::Vector3d> model_points, const Pose& est, const Pose& gt) {
  require_points(model_points);
  const Eigen::Matrix3d re = est.rotation.toRotationMatrix();
  const Eigen::Matrix3d rg = gt.rotation.toRotationMatrix();
  double sum = 0.0;
  for (const auto& p : model_points) {
    sum += ((re * p + est.translation) - (rg * p + gt.translation)).norm();
  }
  return sum / static_cast<double>(model_points.size());
}

double adds_error(std::span<const Eigen::Vector3d> model_points, const Pose& est, const Pose& gt) {
  require_points(model_points);
  const Eigen::Matrix3d re = est.rotation.toRotationMatrix();
  const Eigen::Matrix3d rg = gt.rotation.toRotationMatrix();
  std::vector<Eigen::Vector3d> gt_pts;
  gt_pts.reserve(model_points.size());
  for (const auto& q : model_points) gt_pts.push_back(rg * q + gt.translation);
  double sum = 0.0;
  for (const auto& p : model_points) {
    const Eigen::Vector3d e = re * p + est.translation;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : gt_pts) best = std::min(best, (e - g).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(model_points.size());
}

double planar_error(const PlanarState& est, const PlanarState& gt) {
  return std::hypot(est.x - gt.x, est.y - gt.y);
}

double auc(std::span<const double> errors, double threshold_max) {
  if (errors.empty()) throw std::invalid_argument("auc of an empty error list");
  if (!(threshold_max > 0.0)) throw std::invalid_argument("threshold_max must be positive");
  double sum = 0.0;
  for (const double e : errors) {
    const double clamped = std::isnan(e) ? threshold_max : std::clamp(e, 0.0, threshold_max);
    sum += 1.0 - clamped / threshold_max;
  }
  return sum / static_cast<double>(errors.size());
}

AucSummary summarize_auc(std::span<const RunTraceRow> trace, double threshold_max) {
  std::vector<double> add;
  std::vector<double> adds;
  add.reserve(trace.size());
  adds.reserve(trace.size());
  for (const auto& r : trace) {
    add.push_back(r.err_add);
    adds.push_back(r.err_adds);
  }
  return {auc(add, threshold_max), auc(adds, threshold_max), threshold_max, trace.size()};
}

std::int64_t recovery_time(std::span<const RunTraceRow> trace, std::int64_t event_end,
                           double success_threshold, std::size_t sustain) {
  const std::size_t need = std::max<std::size_t>(1, sustain);
  std::size_t run = 0;
  std::int64_t run_start = 0;
  for (const auto& r : trace) {
    if (r.frame < event_end) continue;
    if (r.err_add < success_threshold) {
      if (run == 0) run_start = r.frame;
      if (++run >= need) return run_start;
    } else {
      run = 0;
    }
  }
  return kNeverRecovered;
}

}  // namespace chpf
