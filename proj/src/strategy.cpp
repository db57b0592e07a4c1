#include "chpf/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chpf/errors.hpp"
#include "chpf/resampling.hpp"

namespace chpf {

std::string_view to_string(StrategyVariant v) {
  switch (v) {
    case StrategyVariant::Fixed: return "fixed";
    case StrategyVariant::SRL: return "srl";
    case StrategyVariant::AugMCL: return "augmcl";
    case StrategyVariant::Annealing: return "annealing";
    case StrategyVariant::ExternalProposal: return "mcl_e2e";
    case StrategyVariant::CHPF: return "chpf";
  }
  return "unknown";
}

std::optional<StrategyVariant> parse_strategy_variant(std::string_view name) {
  for (auto v : {StrategyVariant::Fixed, StrategyVariant::SRL, StrategyVariant::AugMCL,
                 StrategyVariant::Annealing, StrategyVariant::ExternalProposal,
                 StrategyVariant::CHPF}) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

void StrategyConfig::validate() const {
  auto unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
  if (!unit(fixed_alpha)) throw ConfigError("fixed_alpha", "must lie in [0, 1]");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta", "must be positive");
  if (!(decay_slow > 0.0 && decay_slow <= 1.0)) {
    throw ConfigError("decay_slow", "must lie in (0, 1]");
  }
  if (!(decay_fast > 0.0 && decay_fast <= 1.0)) {
    throw ConfigError("decay_fast", "must lie in (0, 1]");
  }
  if (!(decay_slow < decay_fast)) throw ConfigError("decay_slow", "must be below decay_fast");
  if (anneal_schedule.empty()) throw ConfigError("anneal_schedule", "must not be empty");
  for (const double g : anneal_schedule) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw ConfigError("anneal_schedule", "exponents must be positive");
    }
  }
  if (!unit(proposal_fraction)) throw ConfigError("proposal_fraction", "must lie in [0, 1]");
  if (!(proposal_sigma_translation >= 0.0)) {
    throw ConfigError("proposal_sigma_translation", "must be nonnegative");
  }
  if (!(proposal_sigma_rotation >= 0.0)) {
    throw ConfigError("proposal_sigma_rotation", "must be nonnegative");
  }
}

std::string StrategyConfig::label() const {
  return name.empty() ? std::string(to_string(variant)) : name;
}

namespace {

double checked_sum(std::span<const double> values, const char* what) {
  double s = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(std::string(what) + " must be finite and nonnegative");
    }
    s += v;
  }
  return s;
}

StepDecision with_alpha(double alpha, std::size_t n) {
  StepDecision d;
  d.alpha = alpha;
  d.n_reinvigorate = reinvigoration_count(alpha, n);
  return d;
}

}  // namespace

StepDecision decide_chpf(std::span<const double> likelihoods, std::span<const double> counters) {
  if (likelihoods.size() != counters.size()) {
    throw std::invalid_argument("likelihood and counter lists differ in length");
  }
  const double sum_l = checked_sum(likelihoods, "likelihoods");
  const double sum_c = checked_sum(counters, "counters");
  const double denom = sum_c + sum_l;
  const double alpha = denom > 0.0 ? 1.0 - sum_l / denom : 1.0;
  StepDecision d = with_alpha(alpha, likelihoods.size());
  d.sum_likelihood = sum_l;
  d.sum_counter = sum_c;
  return d;
}

StepDecision decide_srl(std::span<const double> likelihoods, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta", "must be positive");
  const double sum_l = checked_sum(likelihoods, "likelihoods");
  const auto n = static_cast<double>(likelihoods.size());
  const double raw = n > 0.0 ? 1.0 - sum_l / (beta * n) : 1.0;
  StepDecision d = with_alpha(std::clamp(raw, 0.0, 1.0), likelihoods.size());
  d.sum_likelihood = sum_l;
  return d;
}

StepDecision decide_augmcl(double mean_weight, AugMclState& state, double decay_slow,
                           double decay_fast, std::size_t n_particles) {
  state.w_slow += decay_slow * (mean_weight - state.w_slow);
  state.w_fast += decay_fast * (mean_weight - state.w_fast);
  double alpha = 0.0;
  if (state.w_slow > 0.0) alpha = std::clamp(1.0 - state.w_fast / state.w_slow, 0.0, 1.0);
  return with_alpha(alpha, n_particles);
}

double annealing_exponent(std::size_t step, std::span<const double> schedule) {
  if (schedule.empty()) throw ConfigError("anneal_schedule", "must not be empty");
  return schedule[step % schedule.size()];
}

StepDecision decide_annealing(std::size_t step, std::span<const double> schedule) {
  StepDecision d;
  d.weight_exponent = annealing_exponent(step, schedule);
  return d;
}

StepDecision decide_fixed(double alpha, std::size_t n_particles) {
  return with_alpha(alpha, n_particles);
}

StepDecision decide_external(double proposal_fraction, std::size_t n_particles,
                             bool proposal_available) {
  StepDecision d = with_alpha(proposal_available ? proposal_fraction : 0.0, n_particles);
  d.source = DrawSource::Proposal;
  return d;
}

Strategy::Strategy(StrategyConfig config) : config_(std::move(config)) { config_.validate(); }

StepDecision Strategy::decide(std::size_t step, std::span<const double> likelihoods,
                              std::span<const double> counters, bool proposal_available) {
  const std::size_t n = likelihoods.size();
  StepDecision d;
  switch (config_.variant) {
    case StrategyVariant::Fixed:
      d = decide_fixed(config_.fixed_alpha, n);
      break;
    case StrategyVariant::SRL:
      d = decide_srl(likelihoods, config_.beta);
      break;
    case StrategyVariant::AugMCL: {
      const double sum = checked_sum(likelihoods, "likelihoods");
      const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
      d = decide_augmcl(mean, aug_, config_.decay_slow, config_.decay_fast, n);
      break;
    }
    case StrategyVariant::Annealing:
      d = decide_annealing(step, config_.anneal_schedule);
      break;
    case StrategyVariant::ExternalProposal:
      d = decide_external(config_.proposal_fraction, n, proposal_available);
      break;
    case StrategyVariant::CHPF:
      return decide_chpf(likelihoods, counters);
  }
  // Every variant reports the evidence sums for the trace.
  d.sum_likelihood = checked_sum(likelihoods, "likelihoods");
  d.sum_counter = checked_sum(counters, "counters");
  return d;
}

}  // namespace chpf
