#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace chpf {

enum class Origin : std::uint8_t { Propagated, Reinvigorated, Proposal };

template <class State>
struct Particle {
  State state{};
  double weight = 0.0;      // importance weight (raw after weigh, normalized after normalize)
  double likelihood = 0.0;  // L(x, z)
  double counter = 0.0;     // C(x, z)
  Origin origin = Origin::Propagated;

  friend bool operator==(const Particle&, const Particle&) = default;
};

template <class State>
struct ParticleSet {
  std::vector<Particle<State>> particles;
  std::int64_t step = 0;

  [[nodiscard]] std::size_t size() const { return particles.size(); }

  /// N copies of one state with weight 1/N.
  static ParticleSet uniform(std::vector<State> states) {
    ParticleSet set;
    const double w = states.empty() ? 0.0 : 1.0 / static_cast<double>(states.size());
    set.particles.reserve(states.size());
    for (auto& s : states) set.particles.push_back({std::move(s), w, 0.0, 0.0, Origin::Propagated});
    return set;
  }

  [[nodiscard]] std::vector<double> weights() const {
    std::vector<double> w;
    w.reserve(particles.size());
    for (const auto& p : particles) w.push_back(p.weight);
    return w;
  }
};

/// Where the reinvigorated share of the next particle set comes from.
enum class DrawSource : std::uint8_t { Candidate, Proposal };

/// Per-step reinvigoration decision.
struct StepDecision {
  double alpha = 0.0;
  std::size_t n_reinvigorate = 0;
  double sum_likelihood = 0.0;
  double sum_counter = 0.0;
  /// Exponent applied to raw weights before normalization (annealing); 1 otherwise.
  double weight_exponent = 1.0;
  DrawSource source = DrawSource::Candidate;
  /// Set when every weight was zero and the filter fell back to a full reset.
  bool forced_reset = false;
};

}  // namespace chpf
