#include "chpf/depth_model.hpp"

#include <cmath>
#include <stdexcept>

namespace chpf {

void DepthModelConfig::validate() const {
  if (!(tau_match > 0.0)) throw ConfigError("tau_match", "must be positive");
  if (!(tau_front > 0.0)) throw ConfigError("tau_front", "must be positive");
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
    throw ConfigError("min_coverage", "must lie in [0, 1]");
  }
}

namespace {

void check_dims(const RenderedDepth& r, const DepthImage& z) {
  if (r.image.width != z.width || r.image.height != z.height || r.mask.size() != z.depths.size()) {
    throw std::invalid_argument("rendered and observed depth images differ in size");
  }
}

// Covered pixel count, or zero when the hypothesis is below the visibility floor.
std::size_t visible_pixels(const RenderedDepth& r, const DepthModelConfig& cfg) {
  const std::size_t n = r.covered();
  if (static_cast<double>(n) < cfg.min_coverage * static_cast<double>(r.mask.size())) return 0;
  return n;
}

}  // namespace

double depth_likelihood(const RenderedDepth& rendered, const DepthImage& observed,
                        const DepthModelConfig& cfg) {
  check_dims(rendered, observed);
  const std::size_t n = visible_pixels(rendered, cfg);
  if (n == 0) return 0.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < rendered.mask.size(); ++i) {
    if (!rendered.mask[i]) continue;
    if (std::abs(rendered.image.depths[i] - observed.depths[i]) < cfg.tau_match) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(n);
}

double depth_counter(const RenderedDepth& rendered, const DepthImage& observed,
                     const DepthModelConfig& cfg) {
  check_dims(rendered, observed);
  const std::size_t n = visible_pixels(rendered, cfg);
  if (n == 0) return 1.0;
  std::size_t in_front = 0;
  for (std::size_t i = 0; i < rendered.mask.size(); ++i) {
    if (!rendered.mask[i]) continue;
    const double d_obs = observed.depths[i];
    if (!std::isfinite(d_obs)) continue;
    if (rendered.image.depths[i] < d_obs - cfg.tau_front) ++in_front;
  }
  return static_cast<double>(in_front) / static_cast<double>(n);
}

DepthObservationModel::DepthObservationModel(TriMesh mesh, DepthModelConfig cfg)
    : mesh_(std::move(mesh)), cfg_(cfg) {
  mesh_.validate();
  cfg_.validate();
}

const RenderedDepth& DepthObservationModel::render(const Pose& x, const DepthImage& z) const {
  // Per-thread scratch keeps evaluation reentrant without reallocating per particle.
  thread_local RenderedDepth scratch;
  render_depth_into(mesh_, x, z.camera, z.width, z.height, scratch);
  return scratch;
}

double DepthObservationModel::likelihood(const Pose& x, const DepthImage& z) const {
  return depth_likelihood(render(x, z), z, cfg_);
}

double DepthObservationModel::counter(const Pose& x, const DepthImage& z) const {
  return depth_counter(render(x, z), z, cfg_);
}

Evidence DepthObservationModel::evaluate(const Pose& x, const DepthImage& z) const {
  const RenderedDepth& r = render(x, z);
  return {depth_likelihood(r, z, cfg_), depth_counter(r, z, cfg_)};
}

}  // namespace chpf
