#include "chpf/geometry.hpp"

#include <cmath>
#include <numbers>

namespace chpf {

Eigen::Quaterniond canonicalize(const Eigen::Quaterniond& q) {
  bool flip = false;
  if (q.w() < 0.0) {
    flip = true;
  } else if (q.w() == 0.0) {
    if (q.x() != 0.0) {
      flip = q.x() < 0.0;
    } else if (q.y() != 0.0) {
      flip = q.y() < 0.0;
    } else {
      flip = q.z() < 0.0;
    }
  }
  if (!flip) return q;
  return Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z());
}

Eigen::Quaterniond renormalize(const Eigen::Quaterniond& q) {
  const double n2 = q.squaredNorm();
  if (std::abs(n2 - 1.0) <= 1e-12) return q;
  return q.normalized();
}

Pose::Pose(const Eigen::Vector3d& t, const Eigen::Quaterniond& q)
    : translation(t), rotation(canonicalize(renormalize(q))) {}

Pose Pose::inverse() const {
  const Eigen::Quaterniond qi = rotation.conjugate();
  return Pose(-(qi * translation), qi);
}

bool Pose::is_finite() const {
  return translation.allFinite() && rotation.coeffs().allFinite();
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.translation + a.rotation * b.translation, a.rotation * b.rotation);
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  if (a >= -pi && a < pi) return a;
  double r = std::fmod(a + pi, 2.0 * pi);
  if (r < 0.0) r += 2.0 * pi;
  r -= pi;
  // fmod can round up to exactly pi.
  if (r >= pi) r -= 2.0 * pi;
  return r;
}

PlanarState::PlanarState(double x_, double y_, double theta_)
    : x(x_), y(y_), theta(wrap_angle(theta_)) {}

bool PlanarState::is_finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
}

PlanarState compose(const PlanarState& a, const PlanarState& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta};
}

PlanarState inverse(const PlanarState& a) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {-(c * a.x + s * a.y), s * a.x - c * a.y, -a.theta};
}

PlanarState relative(const PlanarState& from, const PlanarState& to) {
  return compose(inverse(from), to);
}

Pose relative(const Pose& from, const Pose& to) { return compose(from.inverse(), to); }

double angular_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double d = std::min(1.0, std::abs(a.coeffs().dot(b.coeffs())));
  return 2.0 * std::acos(d);
}

Eigen::Quaterniond axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
}

Eigen::Vector3d random_unit_vector(RandomStream& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Eigen::Quaterniond uniform_rotation(RandomStream& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double u3 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  Eigen::Quaterniond q(b * std::cos(u3), a * std::sin(u2), a * std::cos(u2), b * std::sin(u3));
  return canonicalize(q.normalized());
}

Eigen::Quaterniond gaussian_rotation(RandomStream& rng, double sigma) {
  const Eigen::Vector3d axis = random_unit_vector(rng);
  const double angle = rng.normal(0.0, sigma);
  return axis_angle(axis, angle);
}

}  // namespace chpf
