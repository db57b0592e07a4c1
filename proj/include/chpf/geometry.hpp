#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "chpf/rng.hpp"

namespace chpf {

/// Flips the sign so that w >= 0 (or, when w == 0, so that the first nonzero
/// of x, y, z is positive). q and -q are the same rotation; this picks one.
Eigen::Quaterniond canonicalize(const Eigen::Quaterniond& q);

/// Renormalizes only when the squared norm has drifted by more than 1e-12, so
/// an already-unit quaternion passes through bit-for-bit.
Eigen::Quaterniond renormalize(const Eigen::Quaterniond& q);

/// Rigid transform in SE(3): translation in meters, rotation as unit quaternion.
struct Pose {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  Pose() = default;
  Pose(const Eigen::Vector3d& t, const Eigen::Quaterniond& q);

  static Pose identity() { return {}; }

  [[nodiscard]] Eigen::Vector3d transform(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  [[nodiscard]] Pose inverse() const;
  [[nodiscard]] bool is_finite() const;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.translation == b.translation && a.rotation.coeffs() == b.rotation.coeffs();
  }
};

/// a * b: apply b first, then a.
Pose compose(const Pose& a, const Pose& b);

/// Planar state (x, y in meters; theta in radians, wrapped to [-pi, pi)).
struct PlanarState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  PlanarState() = default;
  PlanarState(double x_, double y_, double theta_);

  [[nodiscard]] bool is_finite() const;
  friend bool operator==(const PlanarState&, const PlanarState&) = default;
};

/// Wraps into [-pi, pi). Values already in range are returned unchanged.
double wrap_angle(double a);

/// SE(2) composition: b is expressed in a's body frame.
PlanarState compose(const PlanarState& a, const PlanarState& b);
PlanarState inverse(const PlanarState& a);

/// Relative motion between two states expressed in the body frame of `from`.
PlanarState relative(const PlanarState& from, const PlanarState& to);
Pose relative(const Pose& from, const Pose& to);

/// Control u_t: a rigid delta in the state's own parameterization plus a
/// multiplier on the motion model's diffusion.
template <class State>
struct ControlInput {
  State delta{};
  double noise_scale = 1.0;
};

/// Geodesic angle between two rotations, in [0, pi].
double angular_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

Eigen::Quaterniond axis_angle(const Eigen::Vector3d& axis, double angle);

/// Uniform direction on S^2.
Eigen::Vector3d random_unit_vector(RandomStream& rng);

/// Uniform rotation on SO(3) (Shoemake's subgroup construction).
Eigen::Quaterniond uniform_rotation(RandomStream& rng);

/// Rotation by angle ~ N(0, sigma) about a uniform random axis.
Eigen::Quaterniond gaussian_rotation(RandomStream& rng, double sigma);

}  // namespace chpf
