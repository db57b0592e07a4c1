#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chpf/particle.hpp"

namespace chpf {

enum class StrategyVariant { Fixed, SRL, AugMCL, Annealing, ExternalProposal, CHPF };

std::string_view to_string(StrategyVariant v);
std::optional<StrategyVariant> parse_strategy_variant(std::string_view name);

struct StrategyConfig {
  StrategyVariant variant = StrategyVariant::CHPF;
  /// Label used in output file names; defaults to the variant name.
  std::string name;
  double fixed_alpha = 0.0;
  double beta = 0.5;
  double decay_slow = 0.05;
  double decay_fast = 0.5;
  std::vector<double> anneal_schedule{1.0, 0.5, 0.25, 0.5};
  double proposal_fraction = 0.2;
  /// Spread of the Gaussian drawn around the detector estimate (MCL+E2E).
  double proposal_sigma_translation = 0.01;
  double proposal_sigma_rotation = 0.05;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  [[nodiscard]] std::string label() const;
};

/// Long/short-term averages of the mean particle weight (Augmented MCL).
struct AugMclState {
  double w_slow = 0.0;
  double w_fast = 0.0;
};

/// alpha = 1 - sum(L) / (sum(C) + sum(L)); alpha = 1 when both sums vanish.
/// Throws std::invalid_argument on negative or non-finite input.
StepDecision decide_chpf(std::span<const double> likelihoods, std::span<const double> counters);

/// Sensor-resetting rate clamp(1 - sum(L) / (beta N), 0, 1) with N = |L|.
StepDecision decide_srl(std::span<const double> likelihoods, double beta);

/// Updates the averages with this step's mean weight and returns the rate
/// clamp(1 - w_fast / w_slow, 0, 1) (0 while w_slow is still zero).
StepDecision decide_augmcl(double mean_weight, AugMclState& state, double decay_slow,
                           double decay_fast, std::size_t n_particles);

double annealing_exponent(std::size_t step, std::span<const double> schedule);
StepDecision decide_annealing(std::size_t step, std::span<const double> schedule);

StepDecision decide_fixed(double alpha, std::size_t n_particles);

/// Fixed share drawn from the external proposal; zero for frames without a
/// detector estimate.
StepDecision decide_external(double proposal_fraction, std::size_t n_particles,
                             bool proposal_available);

/// Stateful wrapper dispatching on StrategyConfig::variant.
class Strategy {
 public:
  explicit Strategy(StrategyConfig config);

  StepDecision decide(std::size_t step, std::span<const double> likelihoods,
                      std::span<const double> counters, bool proposal_available);

  void reset() { aug_ = {}; }
  [[nodiscard]] const StrategyConfig& config() const { return config_; }
  [[nodiscard]] const AugMclState& augmcl_state() const { return aug_; }

 private:
  StrategyConfig config_;
  AugMclState aug_;
};

}  // namespace chpf
