#include "chpf/filter.hpp"

#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

namespace chpf {

void MotionModelConfig::validate() const {
  const std::pair<const char*, double> fields[] = {{"sigma_translation", sigma_translation},
                                                   {"sigma_rotation", sigma_rotation},
                                                   {"sigma_x", sigma_x},
                                                   {"sigma_y", sigma_y},
                                                   {"sigma_theta", sigma_theta}};
  for (const auto& [name, s] : fields) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ConfigError(std::string("motion.") + name, "must be finite and nonnegative");
    }
  }
}

Pose apply_motion(const Pose& x, const ControlInput<Pose>& u, const MotionModelConfig& m,
                  RandomStream& rng) {
  // Pose deltas are expressed in the camera (world) frame.
  Pose out = compose(u.delta, x);
  if (!out.is_finite()) throw std::invalid_argument("control produced a non-finite pose");
  const double st = m.sigma_translation * u.noise_scale;
  const double sr = m.sigma_rotation * u.noise_scale;
  if (st > 0.0) {
    const Eigen::Vector3d noise(rng.normal(), rng.normal(), rng.normal());
    out.translation += st * noise;
  }
  if (sr > 0.0) {
    out = Pose(out.translation, out.rotation * gaussian_rotation(rng, sr));
  }
  return out;
}

PlanarState apply_motion(const PlanarState& x, const ControlInput<PlanarState>& u,
                         const MotionModelConfig& m, RandomStream& rng) {
  PlanarState out = compose(x, u.delta);
  if (!out.is_finite()) throw std::invalid_argument("control produced a non-finite state");
  const double k = u.noise_scale;
  if (m.sigma_x > 0.0 || m.sigma_y > 0.0 || m.sigma_theta > 0.0) {
    const double dx = rng.normal() * m.sigma_x * k;
    const double dy = rng.normal() * m.sigma_y * k;
    const double dt = rng.normal() * m.sigma_theta * k;
    out = PlanarState(out.x + dx, out.y + dy, out.theta + dt);
  }
  return out;
}

double effective_sample_size(std::span<const double> normalized_weights) {
  double sq = 0.0;
  for (const double w : normalized_weights) sq += w * w;
  if (!(sq > 0.0)) return 0.0;
  const double ess = 1.0 / sq;
  // Round-off can push a uniform set a hair above N.
  return std::min(ess, static_cast<double>(normalized_weights.size()));
}

Eigen::Quaterniond average_rotation(std::span<const Eigen::Quaterniond> rotations,
                                    std::span<const double> weights) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    const Eigen::Vector4d q = rotations[i].coeffs();
    m.noalias() += weights[i] * q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(m);
  // Eigenvalues come sorted ascending.
  const Eigen::Vector4d v = solver.eigenvectors().col(3);
  Eigen::Quaterniond q;
  q.coeffs() = v;
  return canonicalize(q.normalized());
}

Pose estimate(std::span<const Particle<Pose>> particles, const Pose* previous) {
  if (particles.empty()) throw std::invalid_argument("cannot estimate from an empty set");

  const bool identical = std::all_of(particles.begin(), particles.end(), [&](const auto& p) {
    return p.state == particles.front().state;
  });
  if (identical) return particles.front().state;

  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double total = 0.0;
  for (const auto& p : particles) {
    t += p.weight * p.state.translation;
    total += p.weight;
  }
  const bool weighted = total > 0.0;
  if (weighted) {
    t /= total;
  } else {
    t.setZero();
    for (const auto& p : particles) t += p.state.translation;
    t /= static_cast<double>(particles.size());
  }

  auto gather = [&](bool restrict) {
    std::vector<Eigen::Quaterniond> qs;
    std::vector<double> ws;
    for (const auto& p : particles) {
      if (restrict &&
          angular_distance(p.state.rotation, previous->rotation) > std::numbers::pi / 2.0) {
        continue;
      }
      qs.push_back(p.state.rotation);
      ws.push_back(weighted ? p.weight : 1.0);
    }
    return std::pair{qs, ws};
  };

  auto [qs, ws] = gather(previous != nullptr);
  double window_weight = 0.0;
  for (const double w : ws) window_weight += w;
  if (qs.empty() || !(window_weight > 0.0)) std::tie(qs, ws) = gather(false);

  return Pose(t, average_rotation(qs, ws));
}

PlanarState estimate(std::span<const Particle<PlanarState>> particles, const PlanarState*) {
  if (particles.empty()) throw std::invalid_argument("cannot estimate from an empty set");
  const bool identical = std::all_of(particles.begin(), particles.end(), [&](const auto& p) {
    return p.state == particles.front().state;
  });
  if (identical) return particles.front().state;

  double total = 0.0;
  for (const auto& p : particles) total += p.weight;
  const bool weighted = total > 0.0;
  double x = 0.0, y = 0.0, s = 0.0, c = 0.0;
  for (const auto& p : particles) {
    const double w = weighted ? p.weight / total : 1.0 / static_cast<double>(particles.size());
    x += w * p.state.x;
    y += w * p.state.y;
    s += w * std::sin(p.state.theta);
    c += w * std::cos(p.state.theta);
  }
  return {x, y, std::atan2(s, c)};
}

}  // namespace chpf
