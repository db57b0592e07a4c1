#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <type_traits>
#include <vector>

#include "chpf/errors.hpp"
#include "chpf/geometry.hpp"
#include "chpf/particle.hpp"
#include "chpf/resampling.hpp"
#include "chpf/rng.hpp"
#include "chpf/strategy.hpp"

namespace chpf {

/// Diffusion magnitudes. Pose spaces use the translation/rotation pair; planar
/// spaces use the per-axis triple.
struct MotionModelConfig {
  double sigma_translation = 0.0;  // meters, per axis
  double sigma_rotation = 0.0;     // radians, axis-angle magnitude
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double sigma_theta = 0.0;

  void validate() const;
};

/// The paired evidence for one particle.
struct Evidence {
  double likelihood = 0.0;
  double counter = 0.0;
};

/// L(x, z) and C(x, z). Implementations must be pure: the filter may call them
/// from several threads at once.
template <class State, class Obs>
class ObservationModel {
 public:
  virtual ~ObservationModel() = default;
  [[nodiscard]] virtual double likelihood(const State& x, const Obs& z) const = 0;
  [[nodiscard]] virtual double counter(const State& x, const Obs& z) const = 0;
  /// Both values at once. Overrides may share read-only inputs (a rendered
  /// hypothesis, say) but neither value may be computed from the other.
  [[nodiscard]] virtual Evidence evaluate(const State& x, const Obs& z) const {
    return {likelihood(x, z), counter(x, z)};
  }
};

/// Source of fresh hypotheses (phi_cand, or an external proposal).
template <class State, class Obs>
class StateSampler {
 public:
  virtual ~StateSampler() = default;
  [[nodiscard]] virtual State sample(const Obs& z, RandomStream& rng) const = 0;
};

struct FilterConfig {
  MotionModelConfig motion;
  ResamplerKind resampler = ResamplerKind::Systematic;
  /// Worker threads for likelihood evaluation; 0 or 1 evaluates inline.
  unsigned threads = 1;
};

/// The filter's named random streams for one run.
struct FilterStreams {
  RandomStream diffusion;
  RandomStream resampling;
  RandomStream candidate;

  explicit FilterStreams(std::uint64_t seed)
      : diffusion(seed, StreamId::Diffusion),
        resampling(seed, StreamId::Resampling),
        candidate(seed, StreamId::CandidateSampling) {}
};

// --- motion -----------------------------------------------------------------

Pose apply_motion(const Pose& x, const ControlInput<Pose>& u, const MotionModelConfig& m,
                  RandomStream& rng);
PlanarState apply_motion(const PlanarState& x, const ControlInput<PlanarState>& u,
                         const MotionModelConfig& m, RandomStream& rng);

/// Composes every particle with u.delta, then adds zero-mean Gaussian
/// diffusion. Weights are untouched and the step counter advances.
/// Throws std::invalid_argument if a composed state is not finite.
template <class State>
ParticleSet<State> predict(ParticleSet<State> set, const ControlInput<State>& u,
                           const MotionModelConfig& motion, RandomStream& rng) {
  motion.validate();
  if (!(u.noise_scale >= 0.0) || !std::isfinite(u.noise_scale)) {
    throw std::invalid_argument("control noise_scale must be finite and nonnegative");
  }
  for (auto& p : set.particles) p.state = apply_motion(p.state, u, motion, rng);
  ++set.step;
  return set;
}

// --- weighting --------------------------------------------------------------

namespace detail {

inline void check_evidence(const Evidence& e) {
  if (!std::isfinite(e.likelihood) || e.likelihood < 0.0) {
    throw ModelContractError("likelihood model returned a negative or non-finite value");
  }
  if (!std::isfinite(e.counter) || e.counter < 0.0) {
    throw ModelContractError("counter model returned a negative or non-finite value");
  }
}

}  // namespace detail

/// Sets likelihood, counter and raw weight (= likelihood) for every particle.
/// Evaluation may be split over `threads` workers; results are independent of
/// the split because the models are pure and no randomness is consumed.
template <class State, class Obs>
ParticleSet<State> weigh(ParticleSet<State> set, const Obs& z,
                         const ObservationModel<State, Obs>& model, unsigned threads = 1) {
  const std::size_t n = set.particles.size();
  std::vector<Evidence> ev(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ev[i] = model.evaluate(set.particles[i].state, z);
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n == 0 ? 1 : n);
  if (workers <= 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    detail::check_evidence(ev[i]);
    auto& p = set.particles[i];
    p.likelihood = ev[i].likelihood;
    p.counter = ev[i].counter;
    p.weight = ev[i].likelihood;
  }
  return set;
}

/// Raises every weight to `gamma` (annealing). gamma == 1 is a no-op.
template <class State>
void apply_weight_exponent(ParticleSet<State>& set, double gamma) {
  if (gamma == 1.0) return;
  for (auto& p : set.particles) p.weight = std::pow(p.weight, gamma);
}

/// Divides weights by their sum. Returns false (leaving weights untouched)
/// when every weight is zero.
template <class State>
bool normalize(ParticleSet<State>& set) {
  double total = 0.0;
  for (const auto& p : set.particles) total += p.weight;
  if (!(total > 0.0)) return false;
  for (auto& p : set.particles) p.weight /= total;
  return true;
}

double effective_sample_size(std::span<const double> normalized_weights);

template <class State>
double effective_sample_size(const ParticleSet<State>& set) {
  const auto w = set.weights();
  return effective_sample_size(std::span<const double>(w));
}

// --- resampling -------------------------------------------------------------

/// Builds the next particle set as the union of decision.n_reinvigorate draws
/// from `fresh` and N - n_reinvigorate systematic (or multinomial) draws from
/// the weighted set. Output weights are reset to 1/N.
///
/// If every weight is zero the decision is rewritten in place to a full reset
/// (alpha = 1, n = N).
template <class State, class Obs>
ParticleSet<State> resample_with_reinvigoration(const ParticleSet<State>& set,
                                                StepDecision& decision,
                                                const StateSampler<State, Obs>& fresh, const Obs& z,
                                                RandomStream& resample_rng,
                                                RandomStream& fresh_rng,
                                                ResamplerKind kind = ResamplerKind::Systematic) {
  const std::size_t n = set.particles.size();
  if (decision.n_reinvigorate > n) {
    throw std::invalid_argument("n_reinvigorate exceeds the particle count");
  }
  const auto weights = set.weights();
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("particle weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0) && decision.n_reinvigorate < n) {
    decision.alpha = 1.0;
    decision.n_reinvigorate = n;
    decision.forced_reset = true;
  }

  ParticleSet<State> out;
  out.step = set.step;
  out.particles.reserve(n);
  const double uniform_w = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  const Origin fresh_origin =
      decision.source == DrawSource::Proposal ? Origin::Proposal : Origin::Reinvigorated;
  for (std::size_t k = 0; k < decision.n_reinvigorate; ++k) {
    out.particles.push_back({fresh.sample(z, fresh_rng), uniform_w, 0.0, 0.0, fresh_origin});
  }
  const std::size_t kept = n - decision.n_reinvigorate;
  if (kept > 0) {
    const auto idx = kind == ResamplerKind::Systematic
                         ? systematic_indices(weights, kept, resample_rng)
                         : multinomial_indices(weights, kept, resample_rng);
    for (const std::size_t i : idx) {
      Particle<State> p = set.particles[i];
      p.weight = uniform_w;
      p.origin = Origin::Propagated;
      out.particles.push_back(std::move(p));
    }
  }
  return out;
}

// --- estimation -------------------------------------------------------------

/// Weighted mean translation plus the principal-eigenvector quaternion average,
/// restricted to rotations within 90 degrees of `previous` when one is given.
Pose estimate(std::span<const Particle<Pose>> particles, const Pose* previous = nullptr);

/// Weighted mean position; heading from atan2 of weighted sin/cos sums.
PlanarState estimate(std::span<const Particle<PlanarState>> particles,
                     const PlanarState* previous = nullptr);

template <class State>
State estimate(const ParticleSet<State>& set, const State* previous = nullptr) {
  return estimate(std::span<const Particle<State>>(set.particles), previous);
}

/// Weighted quaternion average: principal eigenvector of sum w q q^T.
Eigen::Quaterniond average_rotation(std::span<const Eigen::Quaterniond> rotations,
                                    std::span<const double> weights);

// --- one filter iteration ---------------------------------------------------

/// Filter-side fields of a trace row; the runner adds ground-truth errors.
struct StepRecord {
  std::int64_t frame = 0;
  StepDecision decision;
  double ess = 0.0;
  std::int64_t wall_micros = 0;
};

template <class State>
struct StepResult {
  ParticleSet<State> set;
  State estimate{};
  StepRecord record;
};

/// predict -> weigh -> decide -> (anneal) normalize -> estimate -> resample.
///
/// The estimate is taken from the weighted set, before fresh draws replace part
/// of it. `proposal` is the external-proposal sampler for MCL+E2E; null when no
/// detector estimate exists this frame.
template <class State, class Obs>
StepResult<State> step(ParticleSet<State> set, const ControlInput<State>& u, const Obs& z,
                       Strategy& strategy, const ObservationModel<State, Obs>& model,
                       const StateSampler<State, Obs>& candidate,
                       const std::type_identity_t<StateSampler<State, Obs>>* proposal,
                       const FilterConfig& cfg, FilterStreams& streams,
                       const std::type_identity_t<State>* previous_estimate) {
  const auto t0 = std::chrono::steady_clock::now();
  set = predict(std::move(set), u, cfg.motion, streams.diffusion);
  set = weigh(std::move(set), z, model, cfg.threads);

  std::vector<double> l;
  std::vector<double> c;
  l.reserve(set.size());
  c.reserve(set.size());
  for (const auto& p : set.particles) {
    l.push_back(p.likelihood);
    c.push_back(p.counter);
  }
  StepDecision decision =
      strategy.decide(static_cast<std::size_t>(set.step), l, c, proposal != nullptr);
  if (proposal == nullptr) decision.source = DrawSource::Candidate;

  apply_weight_exponent(set, decision.weight_exponent);
  if (!normalize(set)) {
    decision.alpha = 1.0;
    decision.n_reinvigorate = set.size();
    decision.forced_reset = true;
    for (auto& p : set.particles) p.weight = 1.0 / static_cast<double>(set.size());
  }

  StepResult<State> result;
  result.record.frame = set.step;
  result.record.ess = effective_sample_size(set);
  result.estimate = estimate(set, previous_estimate);

  const StateSampler<State, Obs>& fresh =
      decision.source == DrawSource::Proposal && proposal != nullptr ? *proposal : candidate;
  result.set = resample_with_reinvigoration(set, decision, fresh, z, streams.resampling,
                                            streams.candidate, cfg.resampler);
  result.record.decision = decision;
  result.record.wall_micros = std::chrono::duration_cast<std::chrono::microseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
  return result;
}

}  // namespace chpf
