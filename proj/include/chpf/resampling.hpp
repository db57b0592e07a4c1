#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chpf/rng.hpp"

namespace chpf {

enum class ResamplerKind { Systematic, Multinomial };

/// floor(x + 0.5) with exact halves rounded down: 2.5 -> 2, 2.51 -> 3.
std::size_t round_half_down(double x);

/// Number of reinvigorated particles for rate alpha over n particles.
std::size_t reinvigoration_count(double alpha, std::size_t n);

/// Low-variance systematic resampling with an explicit offset in [0, 1/count).
///
/// Draws `count` indices at positions offset + k/count over the cumulative
/// normalized weights. Weights need not sum to one; they must be nonnegative
/// with a positive sum.
std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t count,
                                            double offset);

std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t count,
                                            RandomStream& rng);

/// Independent draws proportional to weight (inverse-CDF on sorted uniforms).
std::vector<std::size_t> multinomial_indices(std::span<const double> weights, std::size_t count,
                                             RandomStream& rng);

}  // namespace chpf
