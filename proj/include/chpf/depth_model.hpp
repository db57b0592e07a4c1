#pragma once

#include "chpf/filter.hpp"
#include "chpf/mesh.hpp"
#include "chpf/raster.hpp"

namespace chpf {

struct DepthModelConfig {
  /// |rendered - observed| below this counts as agreement (meters).
  double tau_match = 0.02;
  /// Rendered nearer than observed by more than this is counter-evidence (meters).
  double tau_front = 0.05;
  /// Hypotheses covering fewer than this fraction of the image count as not visible.
  double min_coverage = 0.0;

  void validate() const;
};

/// Fraction of hypothesis pixels whose rendered depth agrees with the
/// observation to within tau_match. Zero for an empty mask.
double depth_likelihood(const RenderedDepth& rendered, const DepthImage& observed,
                        const DepthModelConfig& cfg);

/// Fraction of hypothesis pixels where the hypothesis puts the object more than
/// tau_front in front of the measured surface. Pixels behind the measurement
/// (a possible occluder) and pixels with no return contribute nothing. One for
/// an empty mask.
double depth_counter(const RenderedDepth& rendered, const DepthImage& observed,
                     const DepthModelConfig& cfg);

/// L and C for pose hypotheses against a depth frame.
class DepthObservationModel final : public ObservationModel<Pose, DepthImage> {
 public:
  DepthObservationModel(TriMesh mesh, DepthModelConfig cfg);

  [[nodiscard]] double likelihood(const Pose& x, const DepthImage& z) const override;
  [[nodiscard]] double counter(const Pose& x, const DepthImage& z) const override;
  /// Renders the hypothesis once and hands the same image to both scores.
  [[nodiscard]] Evidence evaluate(const Pose& x, const DepthImage& z) const override;

  [[nodiscard]] const TriMesh& mesh() const { return mesh_; }
  [[nodiscard]] const DepthModelConfig& config() const { return cfg_; }

 private:
  [[nodiscard]] const RenderedDepth& render(const Pose& x, const DepthImage& z) const;

  TriMesh mesh_;
  DepthModelConfig cfg_;
};

}  // namespace chpf
