#pragma once

#include <vector>

#include <Eigen/Core>

#include "chpf/filter.hpp"

namespace chpf {

/// Range to each known beacon; NaN marks a dropout.
struct PlanarObservation {
  std::vector<double> beacon_distances;

  friend bool operator==(const PlanarObservation& a, const PlanarObservation& b);
};

/// Product over observed beacons of exp(-(d - d_hat)^2 / (2 sigma^2)).
double planar_likelihood(const PlanarState& x, const PlanarObservation& z,
                         const std::vector<Eigen::Vector2d>& beacons, double sigma);

/// Fraction of observed beacons whose residual exceeds margin * sigma; 0 with no data.
double planar_counter(const PlanarState& x, const PlanarObservation& z,
                      const std::vector<Eigen::Vector2d>& beacons, double sigma, double margin);

class PlanarBeaconModel final : public ObservationModel<PlanarState, PlanarObservation> {
 public:
  PlanarBeaconModel(std::vector<Eigen::Vector2d> beacons, double sigma, double margin);

  [[nodiscard]] double likelihood(const PlanarState& x, const PlanarObservation& z) const override;
  [[nodiscard]] double counter(const PlanarState& x, const PlanarObservation& z) const override;

 private:
  std::vector<Eigen::Vector2d> beacons_;
  double sigma_;
  double margin_;
};

}  // namespace chpf
