#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chpf/candidate.hpp"
#include "chpf/config_json.hpp"
#include "chpf/depth_model.hpp"
#include "chpf/filter.hpp"
#include "chpf/metrics.hpp"
#include "chpf/scenario.hpp"
#include "chpf/strategy.hpp"

namespace chpf {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// Reads CHPF_LOG (quiet, info, debug); info when unset or unrecognized.
LogLevel log_level_from_env();

enum class InitMode { Truth, Detector, Candidate };

/// Initial particle cloud: Gaussian around the first ground-truth state or the
/// first detector estimate, or i.i.d. draws from the candidate distribution on
/// the first frame. Detector mode falls back to candidates during an outage.
struct InitConfig {
  InitMode mode = InitMode::Candidate;
  double sigma_translation = 0.01;
  double sigma_rotation = 0.1;
  double sigma_xy = 0.1;
  double sigma_theta = 0.1;
};

enum class CandidateCentering { Detector, Workspace };

struct CandidateSettings {
  /// Pose: box around the frame's detector estimate (the workspace during
  /// outages), or the scenario workspace itself.
  CandidateCentering centering = CandidateCentering::Detector;
  Eigen::Vector3d half_extent{0.03, 0.03, 0.03};
  DepthMode depth_mode = DepthMode::FromObservedDepth;
  double depth_jitter = 0.01;
  double depth_offset = 0.0;
  /// Planar: sampling rectangle; the scenario workspace when unset.
  std::optional<PlanarRegion> planar_region;
};

struct PlanarModelSettings {
  double sigma = 0.2;
  double margin = 3.0;
};

struct MetricsSettings {
  double auc_threshold = 0.1;
  double success_threshold = 0.05;
  std::size_t sustain = 5;
};

struct ExperimentConfig {
  /// Preset name or path to a scenario container.
  std::string scenario;
  std::optional<PlanarScenarioConfig> planar_scenario;
  std::optional<PoseScenarioConfig> pose_scenario;
  std::optional<Scenario> loaded_scenario;

  std::vector<StrategyConfig> strategies;
  std::size_t n_particles = 50;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "out";
  bool emit_svg = false;
  /// Concurrent (strategy, seed) runs.
  unsigned jobs = 1;

  FilterConfig filter;
  InitConfig init;
  CandidateSettings candidate;
  DepthModelConfig depth_model;
  PlanarModelSettings planar_model;
  DetectorConfig detector;
  MetricsSettings metrics;

  [[nodiscard]] Space space() const;
};

/// Run defaults for a preset or scenario file; the planar and pose tracks need
/// different diffusion, model and metric scales.
ExperimentConfig default_experiment(const std::string& scenario);

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Throws ConfigError naming the offending key.
ExperimentConfig parse_experiment(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// The scenario a given seed runs on: generated for presets, the loaded
/// container otherwise.
Scenario build_scenario(const ExperimentConfig& cfg, std::uint64_t seed);

struct SummaryRow {
  std::string scenario;
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t n_particles = 0;
  double auc_add = 0.0;
  double auc_adds = 0.0;
  /// Frames from the end of the last event to sustained recovery; inf if the
  /// filter never recovers, NaN for scenarios without events.
  double recovery_frames = 0.0;
  double mean_alpha = 0.0;
};

struct RunOutput {
  std::vector<RunTraceRow> trace;
  SummaryRow summary;
};

/// One full filter pass over `scenario` with `strategy`, all randomness
/// derived from `seed`.
RunOutput run_single(const ExperimentConfig& cfg, const Scenario& scenario,
                     const StrategyConfig& strategy, std::uint64_t seed);

SummaryRow summarize_run(const ExperimentConfig& cfg, const Scenario& scenario,
                         const StrategyConfig& strategy, std::uint64_t seed,
                         const std::vector<RunTraceRow>& trace);

// --- files --------------------------------------------------------------------

inline constexpr const char* kTraceHeader =
    "frame,alpha,n_reinvig,err_add,err_adds,ess,sum_L,sum_C,wall_micros";
inline constexpr const char* kSummaryHeader =
    "scenario,strategy,seed,n_particles,auc_add,auc_adds,recovery_frames,mean_alpha";

/// %.9g, with inf, -inf and nan spelled out.
std::string format_float(double v);
std::string trace_csv(const std::vector<RunTraceRow>& trace);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string trace_file_name(const StrategyConfig& strategy, std::uint64_t seed);

class SummaryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<SummaryRow> parse_summary(const std::string& text, const std::string& origin);

// --- subcommands (return process exit codes) ------------------------------------

/// 0 success, 1 config error, 2 runtime error. Partial outputs are removed on failure.
int run_command(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
                LogLevel level = LogLevel::Info);
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err,
                   LogLevel level = LogLevel::Info);

/// Prints a table of means grouped by (strategy, scenario). 1 on a schema mismatch.
int compare_command(const std::vector<std::filesystem::path>& summaries, std::ostream& out,
                    std::ostream& err);
std::string compare_table(const std::vector<SummaryRow>& rows);

/// 1 for an unknown preset (valid names listed), 2 when the output cannot be written.
int make_scenario_command(const std::string& preset, std::uint64_t seed,
                          const std::filesystem::path& out_path, std::ostream& out,
                          std::ostream& err);

}  // namespace chpf
