#pragma once

#include <Eigen/Core>

#include "chpf/filter.hpp"
#include "chpf/planar_model.hpp"
#include "chpf/raster.hpp"

namespace chpf {

/// Axis-aligned box, lo <= hi per axis. A zero-extent axis is allowed and pins
/// that coordinate.
struct Box3 {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();

  static Box3 centered(const Eigen::Vector3d& center, const Eigen::Vector3d& half_extent) {
    return {center - half_extent, center + half_extent};
  }
  [[nodiscard]] bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  void validate() const;

  friend bool operator==(const Box3&, const Box3&) = default;
};

enum class DepthMode { Uniform, FromObservedDepth };

/// phi_cand for pose tracking: a translation region with uniform SO(3) rotation.
struct CandidateDistribution {
  Box3 region;
  DepthMode depth_mode = DepthMode::Uniform;
  /// FromObservedDepth: Gaussian jitter on the sampled depth (meters).
  double depth_jitter = 0.01;
  /// FromObservedDepth: push from the visible surface back toward the object center.
  double depth_offset = 0.0;
};

/// Draws one candidate pose. In FromObservedDepth mode the translation is the
/// back-projection of a uniformly chosen observed pixel that falls inside the
/// region's image footprint and depth range; with no such pixel (or no
/// observation) it falls back to uniform sampling over the region.
Pose sample_candidate(const CandidateDistribution& cand, const DepthImage* observation,
                      RandomStream& rng);

class PoseCandidateSampler final : public StateSampler<Pose, DepthImage> {
 public:
  explicit PoseCandidateSampler(CandidateDistribution cand) : cand_(std::move(cand)) {
    cand_.region.validate();
  }
  [[nodiscard]] Pose sample(const DepthImage& z, RandomStream& rng) const override {
    return sample_candidate(cand_, &z, rng);
  }
  [[nodiscard]] const CandidateDistribution& distribution() const { return cand_; }

 private:
  CandidateDistribution cand_;
};

/// Uniform (x, y) over a rectangle, uniform heading.
struct PlanarRegion {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  void validate() const;
  friend bool operator==(const PlanarRegion&, const PlanarRegion&) = default;
};

PlanarState sample_planar_candidate(const PlanarRegion& region, RandomStream& rng);

class PlanarCandidateSampler final : public StateSampler<PlanarState, PlanarObservation> {
 public:
  explicit PlanarCandidateSampler(PlanarRegion region) : region_(region) { region_.validate(); }
  [[nodiscard]] PlanarState sample(const PlanarObservation&, RandomStream& rng) const override {
    return sample_planar_candidate(region_, rng);
  }

 private:
  PlanarRegion region_;
};

/// Gaussian around an external pose estimate (MCL+E2E proposal).
class PoseProposalSampler final : public StateSampler<Pose, DepthImage> {
 public:
  PoseProposalSampler(Pose center, double sigma_translation, double sigma_rotation)
      : center_(std::move(center)), sigma_t_(sigma_translation), sigma_r_(sigma_rotation) {}
  [[nodiscard]] Pose sample(const DepthImage& z, RandomStream& rng) const override;

 private:
  Pose center_;
  double sigma_t_;
  double sigma_r_;
};

class PlanarProposalSampler final : public StateSampler<PlanarState, PlanarObservation> {
 public:
  PlanarProposalSampler(PlanarState center, double sigma_xy, double sigma_theta)
      : center_(center), sigma_xy_(sigma_xy), sigma_theta_(sigma_theta) {}
  [[nodiscard]] PlanarState sample(const PlanarObservation& z, RandomStream& rng) const override;

 private:
  PlanarState center_;
  double sigma_xy_;
  double sigma_theta_;
};

}  // namespace chpf
