#pragma once

#include <cstdint>
#include <string_view>

namespace chpf {

/// Named sub-streams derived from one master seed.
enum class StreamId : std::uint64_t {
  ScenarioNoise = 1,
  Diffusion = 2,
  Resampling = 3,
  CandidateSampling = 4,
  Detector = 5,
  Initialization = 6,
};

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based random stream.
///
/// The n-th draw is a pure function of (key, n), so a stream's sequence does
/// not depend on what any other stream (or thread) has consumed. Child streams
/// are keyed by hashing the parent key with an arbitrary 64-bit tag.
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t master_seed, StreamId id);
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  /// Independent stream for sub-index `tag` (e.g. a frame or a particle).
  [[nodiscard]] RandomStream child(std::uint64_t tag) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stable 64-bit hash of a string (FNV-1a followed by mix64).
std::uint64_t hash_string(std::string_view s);

}  // namespace chpf
