#include "chpf/planar_model.hpp"

#include <cmath>
#include <stdexcept>

namespace chpf {

bool operator==(const PlanarObservation& a, const PlanarObservation& b) {
  if (a.beacon_distances.size() != b.beacon_distances.size()) return false;
  for (std::size_t i = 0; i < a.beacon_distances.size(); ++i) {
    const double x = a.beacon_distances[i];
    const double y = b.beacon_distances[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

namespace {

void check_sizes(const PlanarObservation& z, const std::vector<Eigen::Vector2d>& beacons) {
  if (z.beacon_distances.size() != beacons.size()) {
    throw std::invalid_argument("observation does not match the beacon layout");
  }
}

double predicted_range(const PlanarState& x, const Eigen::Vector2d& b) {
  return std::hypot(b.x() - x.x, b.y() - x.y);
}

}  // namespace

double planar_likelihood(const PlanarState& x, const PlanarObservation& z,
                         const std::vector<Eigen::Vector2d>& beacons, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  check_sizes(z, beacons);
  // Sum exponents first so a product of tiny factors underflows only once.
  double exponent = 0.0;
  for (std::size_t i = 0; i < beacons.size(); ++i) {
    const double d = z.beacon_distances[i];
    if (std::isnan(d)) continue;
    const double r = d - predicted_range(x, beacons[i]);
    exponent += r * r / (2.0 * sigma * sigma);
  }
  return std::exp(-exponent);
}

double planar_counter(const PlanarState& x, const PlanarObservation& z,
                      const std::vector<Eigen::Vector2d>& beacons, double sigma, double margin) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
  check_sizes(z, beacons);
  std::size_t observed = 0;
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < beacons.size(); ++i) {
    const double d = z.beacon_distances[i];
    if (std::isnan(d)) continue;
    ++observed;
    if (std::abs(d - predicted_range(x, beacons[i])) > margin * sigma) ++outliers;
  }
  return observed == 0 ? 0.0 : static_cast<double>(outliers) / static_cast<double>(observed);
}

PlanarBeaconModel::PlanarBeaconModel(std::vector<Eigen::Vector2d> beacons, double sigma,
                                     double margin)
    : beacons_(std::move(beacons)), sigma_(sigma), margin_(margin) {
  if (beacons_.empty()) throw ConfigError("beacons", "at least one beacon is required");
  if (!(sigma_ > 0.0)) throw ConfigError("sigma", "must be positive");
  if (!(margin_ > 0.0)) throw ConfigError("margin", "must be positive");
}

double PlanarBeaconModel::likelihood(const PlanarState& x, const PlanarObservation& z) const {
  return planar_likelihood(x, z, beacons_, sigma_);
}

double PlanarBeaconModel::counter(const PlanarState& x, const PlanarObservation& z) const {
  return planar_counter(x, z, beacons_, sigma_, margin_);
}

}  // namespace chpf
