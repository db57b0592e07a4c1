#include "chpf/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chpf {

std::size_t round_half_down(double x) {
  if (!(x >= 0.0)) return 0;
  // ceil(x - 0.5) sends exact halves down and everything else to nearest.
  return static_cast<std::size_t>(std::ceil(x - 0.5));
}

std::size_t reinvigoration_count(double alpha, std::size_t n) {
  const double a = std::clamp(alpha, 0.0, 1.0);
  return std::min(n, round_half_down(a * static_cast<double>(n)));
}

namespace {

double checked_total(std::span<const double> weights) {
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("resampling weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("resampling weights sum to zero");
  return total;
}

}  // namespace

std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t count,
                                            double offset) {
  std::vector<std::size_t> out;
  if (count == 0) return out;
  const double total = checked_total(weights);
  out.reserve(count);
  // Work in units of one draw: draw k sits at offset * count + k, which is
  // exact, and the CDF is scaled to end at count. Positions within kSnap of a
  // boundary count as past it, so equal weights split exactly regardless of
  // how the running sum rounds.
  constexpr double kSnap = 1e-9;
  const double scale = static_cast<double>(count) / total;
  const double start = offset * static_cast<double>(count);
  std::size_t i = 0;
  double cumulative = weights[0] * scale;
  for (std::size_t k = 0; k < count; ++k) {
    const double u = start + static_cast<double>(k);
    while (u >= cumulative - kSnap && i + 1 < weights.size()) {
      ++i;
      cumulative += weights[i] * scale;
    }
    // Round-off can leave the tail of the CDF a hair below 1; never land on a
    // zero-weight particle because of it.
    while (weights[i] == 0.0 && i > 0) --i;
    out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t count,
                                            RandomStream& rng) {
  if (count == 0) return {};
  const double offset = rng.uniform() / static_cast<double>(count);
  return systematic_indices(weights, count, offset);
}

std::vector<std::size_t> multinomial_indices(std::span<const double> weights, std::size_t count,
                                             RandomStream& rng) {
  std::vector<std::size_t> out;
  if (count == 0) return out;
  const double total = checked_total(weights);
  std::vector<double> u(count);
  for (auto& v : u) v = rng.uniform();
  std::sort(u.begin(), u.end());
  out.reserve(count);
  std::size_t i = 0;
  double cumulative = weights[0] / total;
  for (const double v : u) {
    while (v >= cumulative && i + 1 < weights.size()) {
      ++i;
      cumulative += weights[i] / total;
    }
    while (weights[i] == 0.0 && i > 0) --i;
    out.push_back(i);
  }
  return out;
}

}  // namespace chpf
