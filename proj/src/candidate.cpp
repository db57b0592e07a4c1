#include "chpf/candidate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chpf {

void Box3::validate() const {
  if (!lo.allFinite() || !hi.allFinite() || (hi.array() < lo.array()).any()) {
    throw ConfigError("region", "box bounds must be finite with lo <= hi");
  }
}

void PlanarRegion::validate() const {
  if (!(x_max >= x_min) || !(y_max >= y_min)) {
    throw ConfigError("region", "planar region bounds must satisfy min <= max");
  }
}

namespace {

Eigen::Vector3d uniform_in_box(const Box3& box, RandomStream& rng) {
  return {rng.uniform(box.lo.x(), box.hi.x()), rng.uniform(box.lo.y(), box.hi.y()),
          rng.uniform(box.lo.z(), box.hi.z())};
}

// Observed pixels whose back-projection could lie inside the region.
std::vector<std::size_t> region_pixels(const Box3& box, const DepthImage& z) {
  std::vector<std::size_t> out;
  if (box.lo.z() <= kNearPlane) return out;
  double u0 = std::numeric_limits<double>::infinity(), u1 = -u0;
  double v0 = u0, v1 = -u0;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d c((i & 1) ? box.hi.x() : box.lo.x(), (i & 2) ? box.hi.y() : box.lo.y(),
                            (i & 4) ? box.hi.z() : box.lo.z());
    const Eigen::Vector2d p = z.camera.project(c);
    u0 = std::min(u0, p.x());
    u1 = std::max(u1, p.x());
    v0 = std::min(v0, p.y());
    v1 = std::max(v1, p.y());
  }
  const int c0 = std::max(0, static_cast<int>(std::ceil(u0)));
  const int c1 = std::min(z.width - 1, static_cast<int>(std::floor(u1)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(v0)));
  const int r1 = std::min(z.height - 1, static_cast<int>(std::floor(v1)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double d = z.at(c, r);
      if (std::isfinite(d) && d >= box.lo.z() && d <= box.hi.z()) out.push_back(z.index(c, r));
    }
  }
  return out;
}

}  // namespace

Pose sample_candidate(const CandidateDistribution& cand, const DepthImage* observation,
                      RandomStream& rng) {
  Eigen::Vector3d t;
  bool sampled = false;
  if (cand.depth_mode == DepthMode::FromObservedDepth && observation != nullptr) {
    const auto pixels = region_pixels(cand.region, *observation);
    if (!pixels.empty()) {
      const std::size_t idx = pixels[rng.below(pixels.size())];
      const int col = static_cast<int>(idx % static_cast<std::size_t>(observation->width));
      const int row = static_cast<int>(idx / static_cast<std::size_t>(observation->width));
      const double depth =
          observation->depths[idx] + cand.depth_offset + cand.depth_jitter * rng.normal();
      t = observation->camera.back_project(col, row, depth);
      sampled = true;
    }
  }
  if (!sampled) t = uniform_in_box(cand.region, rng);
  return Pose(t, uniform_rotation(rng));
}

PlanarState sample_planar_candidate(const PlanarRegion& region, RandomStream& rng) {
  const double x = rng.uniform(region.x_min, region.x_max);
  const double y = rng.uniform(region.y_min, region.y_max);
  const double th = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return {x, y, th};
}

Pose PoseProposalSampler::sample(const DepthImage&, RandomStream& rng) const {
  Eigen::Vector3d t = center_.translation;
  if (sigma_t_ > 0.0) t += sigma_t_ * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  Eigen::Quaterniond q = center_.rotation;
  if (sigma_r_ > 0.0) q = q * gaussian_rotation(rng, sigma_r_);
  return Pose(t, q);
}

PlanarState PlanarProposalSampler::sample(const PlanarObservation&, RandomStream& rng) const {
  return {center_.x + sigma_xy_ * rng.normal(), center_.y + sigma_xy_ * rng.normal(),
          center_.theta + sigma_theta_ * rng.normal()};
}

}  // namespace chpf
