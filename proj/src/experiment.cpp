#include "chpf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "chpf/mesh.hpp"
#include "chpf/planar_model.hpp"
#include "chpf/scenario_io.hpp"
#include "chpf/svg_plot.hpp"

namespace chpf {

LogLevel log_level_from_env() {
  const char* v = std::getenv("CHPF_LOG");
  if (v == nullptr) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet" || s == "0") return LogLevel::Quiet;
  if (s == "debug" || s == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

Space ExperimentConfig::space() const {
  if (planar_scenario) return Space::Planar;
  if (pose_scenario) return Space::Pose6D;
  if (loaded_scenario) return space_of(*loaded_scenario);
  throw ConfigError("scenario", "no scenario configured");
}

// --- defaults -----------------------------------------------------------------

namespace {

void set_space_defaults(ExperimentConfig& cfg, Space space) {
  if (space == Space::Planar) {
    cfg.filter.motion.sigma_x = 0.02;
    cfg.filter.motion.sigma_y = 0.02;
    cfg.filter.motion.sigma_theta = 0.03;
    cfg.init.mode = InitMode::Truth;
    cfg.metrics.auc_threshold = 1.0;
    cfg.metrics.success_threshold = 0.3;
    cfg.metrics.sustain = 5;
  } else {
    cfg.filter.motion.sigma_translation = 0.01;
    cfg.filter.motion.sigma_rotation = 0.01;
    cfg.init.mode = InitMode::Detector;
    cfg.init.sigma_translation = 0.01;
    cfg.init.sigma_rotation = 0.05;
    cfg.metrics.auc_threshold = 0.1;
    cfg.metrics.success_threshold = 0.05;
    cfg.metrics.sustain = 5;
  }
}

}  // namespace

ExperimentConfig default_experiment(const std::string& scenario) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  if (is_preset(scenario)) {
    if (scenario.starts_with("planar")) {
      cfg.planar_scenario = planar_preset_config(scenario);
    } else {
      cfg.pose_scenario = pose_preset_config(scenario);
    }
  } else {
    try {
      cfg.loaded_scenario = load_scenario(scenario);
    } catch (const std::exception& e) {
      throw ConfigError("scenario", "'" + scenario + "' is neither a preset nor a readable scenario file (" +
                                        e.what() + ")");
    }
  }
  set_space_defaults(cfg, cfg.space());
  return cfg;
}

// --- parsing --------------------------------------------------------------------

namespace {

void parse_init(const Json& j, const std::string& path, InitConfig& init) {
  FieldReader r(j, path);
  std::string mode;
  if (r.get("mode", mode)) {
    if (mode == "truth") {
      init.mode = InitMode::Truth;
    } else if (mode == "detector") {
      init.mode = InitMode::Detector;
    } else if (mode == "candidate") {
      init.mode = InitMode::Candidate;
    } else {
      throw ConfigError(r.qualify("mode"), "expected 'truth', 'detector' or 'candidate'");
    }
  }
  r.get("sigma_translation", init.sigma_translation);
  r.get("sigma_rotation", init.sigma_rotation);
  r.get("sigma_xy", init.sigma_xy);
  r.get("sigma_theta", init.sigma_theta);
  r.finish();
  for (const auto& [k, v] : {std::pair{"sigma_translation", init.sigma_translation},
                             {"sigma_rotation", init.sigma_rotation},
                             {"sigma_xy", init.sigma_xy},
                             {"sigma_theta", init.sigma_theta}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(r.qualify(k), "must be >= 0");
  }
}

void parse_filter(const Json& j, const std::string& path, ExperimentConfig& cfg) {
  FieldReader r(j, path);
  std::string resampler;
  if (r.get("resampler", resampler)) {
    if (resampler == "systematic") {
      cfg.filter.resampler = ResamplerKind::Systematic;
    } else if (resampler == "multinomial") {
      cfg.filter.resampler = ResamplerKind::Multinomial;
    } else {
      throw ConfigError(r.qualify("resampler"), "expected 'systematic' or 'multinomial'");
    }
  }
  r.get("threads", cfg.filter.threads);
  if (const Json* m = r.child("motion")) apply_json(*m, r.qualify("motion"), cfg.filter.motion);
  if (const Json* i = r.child("init")) parse_init(*i, r.qualify("init"), cfg.init);
  r.finish();
  try {
    cfg.filter.motion.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + e.key(), e.message());
  }
}

void parse_candidate(const Json& j, const std::string& path, CandidateSettings& c) {
  FieldReader r(j, path);
  std::string centering;
  if (r.get("centering", centering)) {
    if (centering == "detector") {
      c.centering = CandidateCentering::Detector;
    } else if (centering == "workspace") {
      c.centering = CandidateCentering::Workspace;
    } else {
      throw ConfigError(r.qualify("centering"), "expected 'detector' or 'workspace'");
    }
  }
  if (const Json* h = r.raw("half_extent")) {
    c.half_extent = vector3_from_json(*h, r.qualify("half_extent"));
    if ((c.half_extent.array() < 0.0).any()) {
      throw ConfigError(r.qualify("half_extent"), "must be >= 0 per axis");
    }
  }
  std::string depth_mode;
  if (r.get("depth_mode", depth_mode)) {
    if (depth_mode == "uniform") {
      c.depth_mode = DepthMode::Uniform;
    } else if (depth_mode == "observed") {
      c.depth_mode = DepthMode::FromObservedDepth;
    } else {
      throw ConfigError(r.qualify("depth_mode"), "expected 'uniform' or 'observed'");
    }
  }
  r.get("depth_jitter", c.depth_jitter);
  r.get("depth_offset", c.depth_offset);
  if (const Json* reg = r.raw("planar_region")) {
    std::vector<double> v;
    try {
      v = reg->get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(r.qualify("planar_region"), "must be [x_min, x_max, y_min, y_max]");
    }
    if (v.size() != 4) throw ConfigError(r.qualify("planar_region"), "must be [x_min, x_max, y_min, y_max]");
    PlanarRegion p{v[0], v[1], v[2], v[3]};
    try {
      p.validate();
    } catch (const std::exception& e) {
      throw ConfigError(r.qualify("planar_region"), e.what());
    }
    c.planar_region = p;
  }
  r.finish();
  if (!(c.depth_jitter >= 0.0)) throw ConfigError(r.qualify("depth_jitter"), "must be >= 0");
}

void parse_model(const Json& j, const std::string& path, ExperimentConfig& cfg) {
  if (cfg.space() == Space::Pose6D) {
    apply_json(j, path, cfg.depth_model);
    try {
      cfg.depth_model.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
    return;
  }
  FieldReader r(j, path);
  r.get("sigma", cfg.planar_model.sigma);
  r.get("margin", cfg.planar_model.margin);
  r.finish();
  if (!(cfg.planar_model.sigma > 0.0)) throw ConfigError(r.qualify("sigma"), "must be positive");
  if (!(cfg.planar_model.margin >= 0.0)) throw ConfigError(r.qualify("margin"), "must be >= 0");
}

void parse_metrics(const Json& j, const std::string& path, MetricsSettings& m) {
  FieldReader r(j, path);
  r.get("auc_threshold", m.auc_threshold);
  r.get("success_threshold", m.success_threshold);
  r.get("sustain", m.sustain);
  r.finish();
  if (!(m.auc_threshold > 0.0)) throw ConfigError(r.qualify("auc_threshold"), "must be positive");
  if (!(m.success_threshold > 0.0)) {
    throw ConfigError(r.qualify("success_threshold"), "must be positive");
  }
  if (m.sustain < 1) throw ConfigError(r.qualify("sustain"), "must be >= 1");
}

/// Sensor degradation knobs, forwarded into the scenario generator config.
void parse_observation(const Json& j, const std::string& path, ExperimentConfig& cfg) {
  FieldReader r(j, path);
  if (cfg.planar_scenario) {
    r.get("range_sigma", cfg.planar_scenario->range_sigma);
    r.get("dropout", cfg.planar_scenario->dropout);
  } else if (cfg.pose_scenario) {
    r.get("depth_noise", cfg.pose_scenario->depth_noise);
    r.get("dropout", cfg.pose_scenario->dropout);
    r.get("background_depth", cfg.pose_scenario->background_depth);
  } else {
    throw ConfigError(path, "observation overrides need a preset scenario");
  }
  r.finish();
}

bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

ExperimentConfig parse_experiment(const Json& j, const std::filesystem::path& base_dir) {
  FieldReader r(j, "");
  std::string scenario;
  if (!r.get("scenario", scenario)) throw ConfigError("scenario", "is required");
  if (!is_preset(scenario)) {
    std::filesystem::path p(scenario);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    scenario = p.string();
  }
  ExperimentConfig cfg = default_experiment(scenario);

  if (const Json* sc = r.child("scenario_config")) {
    try {
      if (cfg.planar_scenario) {
        apply_json(*sc, "scenario_config", *cfg.planar_scenario);
        cfg.planar_scenario->validate();
      } else if (cfg.pose_scenario) {
        apply_json(*sc, "scenario_config", *cfg.pose_scenario);
        cfg.pose_scenario->validate();
      } else {
        throw ConfigError("scenario_config", "only applies to preset scenarios");
      }
    } catch (const ScenarioError& e) {
      throw ConfigError("scenario_config", e.what());
    }
  }
  if (const Json* obs = r.child("observation")) parse_observation(*obs, "observation", cfg);

  if (const Json* s = r.raw("strategies")) {
    if (!s->is_array()) throw ConfigError("strategies", "must be a list");
    for (std::size_t i = 0; i < s->size(); ++i) {
      StrategyConfig sc;
      const std::string path = "strategies[" + std::to_string(i) + "]";
      const Json& item = (*s)[i];
      if (item.is_string()) {
        apply_json(Json{{"variant", item}}, path, sc);
      } else {
        apply_json(item, path, sc);
      }
      if (!valid_label(sc.label())) {
        throw ConfigError(path + ".name", "must be nonempty and use only [A-Za-z0-9_.-]");
      }
      cfg.strategies.push_back(std::move(sc));
    }
  }
  if (cfg.strategies.empty()) throw ConfigError("strategies", "needs at least one strategy");
  std::set<std::string> labels;
  for (const auto& s : cfg.strategies) {
    if (!labels.insert(s.label()).second) {
      throw ConfigError("strategies", "duplicate strategy name '" + s.label() + "'");
    }
  }

  if (const Json* n = r.raw("n_particles")) {
    if (!n->is_number_integer() || n->get<std::int64_t>() < 2) {
      throw ConfigError("n_particles", "must be an integer >= 2");
    }
    cfg.n_particles = n->get<std::size_t>();
  }
  if (const Json* seeds = r.raw("seeds")) {
    if (!seeds->is_array()) throw ConfigError("seeds", "must be a list of integers");
    for (const auto& v : *seeds) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ConfigError("seeds", "must be a list of nonnegative integers");
      }
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (cfg.seeds.empty()) throw ConfigError("seeds", "needs at least one seed");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    throw ConfigError("seeds", "contains duplicates");
  }

  std::string out_dir;
  if (r.get("output_dir", out_dir)) {
    std::filesystem::path p(out_dir);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.output_dir = p;
  }
  r.get("emit_svg", cfg.emit_svg);
  r.get("jobs", cfg.jobs);
  if (cfg.jobs < 1) throw ConfigError("jobs", "must be >= 1");

  if (const Json* f = r.child("filter")) parse_filter(*f, "filter", cfg);
  if (const Json* c = r.child("candidate")) parse_candidate(*c, "candidate", cfg.candidate);
  if (const Json* m = r.child("model")) parse_model(*m, "model", cfg);
  if (const Json* d = r.child("detector")) {
    apply_json(*d, "detector", cfg.detector);
    cfg.detector.validate();
  }
  if (const Json* m = r.child("metrics")) parse_metrics(*m, "metrics", cfg.metrics);
  r.finish();
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", std::string("not valid JSON: ") + e.what());
  }
  return parse_experiment(j, path.parent_path());
}

Scenario build_scenario(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.planar_scenario) return generate_planar(*cfg.planar_scenario, seed);
  if (cfg.pose_scenario) return generate_pose_track(*cfg.pose_scenario, seed);
  if (cfg.loaded_scenario) return *cfg.loaded_scenario;
  throw ConfigError("scenario", "no scenario configured");
}

// --- running --------------------------------------------------------------------

namespace {

std::vector<Pose> initial_states(const ExperimentConfig& cfg, const PoseScenario& sc,
                                 const StateSampler<Pose, DepthImage>& cand,
                                 const std::optional<Pose>& detection, RandomStream& rng) {
  std::vector<Pose> out;
  out.reserve(cfg.n_particles);
  const bool from_candidate =
      cfg.init.mode == InitMode::Candidate || (cfg.init.mode == InitMode::Detector && !detection);
  const Pose& gt = cfg.init.mode == InitMode::Detector && detection ? *detection : sc.frames.front().truth;
  for (std::size_t i = 0; i < cfg.n_particles; ++i) {
    if (from_candidate) {
      out.push_back(cand.sample(sc.frames.front().observation, rng));
    } else {
      const Eigen::Vector3d n(rng.normal(), rng.normal(), rng.normal());
      out.emplace_back(gt.translation + cfg.init.sigma_translation * n,
                       gaussian_rotation(rng, cfg.init.sigma_rotation) * gt.rotation);
    }
  }
  return out;
}

std::vector<PlanarState> initial_states(const ExperimentConfig& cfg, const PlanarScenario& sc,
                                        const StateSampler<PlanarState, PlanarObservation>& cand,
                                        const std::optional<PlanarState>& detection,
                                        RandomStream& rng) {
  std::vector<PlanarState> out;
  out.reserve(cfg.n_particles);
  const bool from_candidate =
      cfg.init.mode == InitMode::Candidate || (cfg.init.mode == InitMode::Detector && !detection);
  const PlanarState& gt =
      cfg.init.mode == InitMode::Detector && detection ? *detection : sc.frames.front().truth;
  for (std::size_t i = 0; i < cfg.n_particles; ++i) {
    if (from_candidate) {
      out.push_back(cand.sample(sc.frames.front().observation, rng));
    } else {
      const double x = gt.x + cfg.init.sigma_xy * rng.normal();
      const double y = gt.y + cfg.init.sigma_xy * rng.normal();
      const double t = gt.theta + cfg.init.sigma_theta * rng.normal();
      out.emplace_back(x, y, t);
    }
  }
  return out;
}

CandidateDistribution pose_candidate(const ExperimentConfig& cfg, const PoseScenario& sc,
                                     const std::optional<Pose>& detection) {
  CandidateDistribution cand;
  cand.depth_mode = cfg.candidate.depth_mode;
  cand.depth_jitter = cfg.candidate.depth_jitter;
  cand.depth_offset = cfg.candidate.depth_offset;
  if (cfg.candidate.centering == CandidateCentering::Detector && detection) {
    cand.region = Box3::centered(detection->translation, cfg.candidate.half_extent);
  } else {
    cand.region = sc.world.workspace;
  }
  return cand;
}

RunOutput run_pose(const ExperimentConfig& cfg, const PoseScenario& sc,
                   const StrategyConfig& strat, std::uint64_t seed) {
  DepthObservationModel model(sc.world.mesh, cfg.depth_model);
  const auto points = model_points(sc.world.mesh);
  FilterStreams streams(seed);
  const RandomStream detector_root(seed, StreamId::Detector);
  RandomStream init_rng(seed, StreamId::Initialization);
  Strategy strategy(strat);

  RunOutput out;
  out.trace.reserve(sc.frames.size());
  ParticleSet<Pose> set;
  std::optional<Pose> previous;
  for (std::size_t k = 0; k < sc.frames.size(); ++k) {
    const auto& frame = sc.frames[k];
    RandomStream det_rng = detector_root.child(k);
    const std::optional<Pose> detection = simulated_detector(sc, k, cfg.detector, det_rng);
    const PoseCandidateSampler cand(pose_candidate(cfg, sc, detection));
    std::optional<PoseProposalSampler> proposal;
    if (strat.variant == StrategyVariant::ExternalProposal && detection) {
      proposal.emplace(*detection, strat.proposal_sigma_translation, strat.proposal_sigma_rotation);
    }
    if (k == 0) set = ParticleSet<Pose>::uniform(initial_states(cfg, sc, cand, detection, init_rng));

    auto res = step(std::move(set), frame.control, frame.observation, strategy, model, cand,
                    proposal ? &*proposal : nullptr, cfg.filter, streams,
                    previous ? &*previous : nullptr);
    set = std::move(res.set);
    previous = res.estimate;

    RunTraceRow row;
    row.frame = static_cast<std::int64_t>(k);
    row.alpha = res.record.decision.alpha;
    row.n_reinvig = static_cast<std::int64_t>(res.record.decision.n_reinvigorate);
    row.err_add = add_error(points, res.estimate, frame.truth);
    row.err_adds = adds_error(points, res.estimate, frame.truth);
    row.ess = res.record.ess;
    row.sum_L = res.record.decision.sum_likelihood;
    row.sum_C = res.record.decision.sum_counter;
    row.wall_micros = res.record.wall_micros;
    out.trace.push_back(row);
  }
  return out;
}

RunOutput run_planar(const ExperimentConfig& cfg, const PlanarScenario& sc,
                     const StrategyConfig& strat, std::uint64_t seed) {
  PlanarBeaconModel model(sc.world.beacons, cfg.planar_model.sigma, cfg.planar_model.margin);
  const PlanarCandidateSampler cand(cfg.candidate.planar_region.value_or(sc.world.workspace));
  FilterStreams streams(seed);
  const RandomStream detector_root(seed, StreamId::Detector);
  RandomStream init_rng(seed, StreamId::Initialization);
  Strategy strategy(strat);

  RunOutput out;
  out.trace.reserve(sc.frames.size());
  ParticleSet<PlanarState> set;
  std::optional<PlanarState> previous;
  for (std::size_t k = 0; k < sc.frames.size(); ++k) {
    const auto& frame = sc.frames[k];
    RandomStream det_rng = detector_root.child(k);
    const std::optional<PlanarState> detection = simulated_detector(sc, k, cfg.detector, det_rng);
    std::optional<PlanarProposalSampler> proposal;
    if (strat.variant == StrategyVariant::ExternalProposal && detection) {
      proposal.emplace(*detection, strat.proposal_sigma_translation, strat.proposal_sigma_rotation);
    }
    if (k == 0) {
      set = ParticleSet<PlanarState>::uniform(initial_states(cfg, sc, cand, detection, init_rng));
    }
    auto res = step(std::move(set), frame.control, frame.observation, strategy, model, cand,
                    proposal ? &*proposal : nullptr, cfg.filter, streams,
                    previous ? &*previous : nullptr);
    set = std::move(res.set);
    previous = res.estimate;

    RunTraceRow row;
    row.frame = static_cast<std::int64_t>(k);
    row.alpha = res.record.decision.alpha;
    row.n_reinvig = static_cast<std::int64_t>(res.record.decision.n_reinvigorate);
    row.err_add = planar_error(res.estimate, frame.truth);
    row.err_adds = row.err_add;
    row.ess = res.record.ess;
    row.sum_L = res.record.decision.sum_likelihood;
    row.sum_C = res.record.decision.sum_counter;
    row.wall_micros = res.record.wall_micros;
    out.trace.push_back(row);
  }
  return out;
}

}  // namespace

SummaryRow summarize_run(const ExperimentConfig& cfg, const Scenario& scenario,
                         const StrategyConfig& strategy, std::uint64_t seed,
                         const std::vector<RunTraceRow>& trace) {
  SummaryRow row;
  row.scenario = scenario_id(scenario);
  row.strategy = strategy.label();
  row.seed = seed;
  row.n_particles = cfg.n_particles;
  const AucSummary auc = summarize_auc(trace, cfg.metrics.auc_threshold);
  row.auc_add = auc.auc_add;
  row.auc_adds = auc.auc_adds;

  const auto& events = scenario_events(scenario);
  if (events.empty()) {
    row.recovery_frames = std::numeric_limits<double>::quiet_NaN();
  } else {
    std::size_t end = 0;
    for (const auto& e : events) end = std::max(end, e.last);
    const auto t = recovery_time(trace, static_cast<std::int64_t>(end),
                                 cfg.metrics.success_threshold, cfg.metrics.sustain);
    row.recovery_frames = t == kNeverRecovered ? std::numeric_limits<double>::infinity()
                                               : static_cast<double>(t - static_cast<std::int64_t>(end));
  }
  double sum = 0.0;
  for (const auto& r : trace) sum += r.alpha;
  row.mean_alpha = trace.empty() ? 0.0 : sum / static_cast<double>(trace.size());
  return row;
}

RunOutput run_single(const ExperimentConfig& cfg, const Scenario& scenario,
                     const StrategyConfig& strategy, std::uint64_t seed) {
  if (cfg.n_particles < 2) throw ConfigError("n_particles", "must be an integer >= 2");
  RunOutput out = std::visit(
      [&](const auto& sc) {
        using T = std::decay_t<decltype(sc)>;
        if constexpr (std::is_same_v<T, PlanarScenario>) {
          return run_planar(cfg, sc, strategy, seed);
        } else {
          return run_pose(cfg, sc, strategy, seed);
        }
      },
      scenario);
  out.summary = summarize_run(cfg, scenario, strategy, seed, out.trace);
  return out;
}

// --- files --------------------------------------------------------------------

std::string format_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string trace_csv(const std::vector<RunTraceRow>& trace) {
  std::string s = kTraceHeader;
  s += '\n';
  for (const auto& r : trace) {
    s += std::to_string(r.frame) + ',' + format_float(r.alpha) + ',' + std::to_string(r.n_reinvig) +
         ',' + format_float(r.err_add) + ',' + format_float(r.err_adds) + ',' + format_float(r.ess) +
         ',' + format_float(r.sum_L) + ',' + format_float(r.sum_C) + ',' +
         std::to_string(r.wall_micros) + '\n';
  }
  return s;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = kSummaryHeader;
  s += '\n';
  for (const auto& r : rows) {
    s += r.scenario + ',' + r.strategy + ',' + std::to_string(r.seed) + ',' +
         std::to_string(r.n_particles) + ',' + format_float(r.auc_add) + ',' +
         format_float(r.auc_adds) + ',' + format_float(r.recovery_frames) + ',' +
         format_float(r.mean_alpha) + '\n';
  }
  return s;
}

std::string trace_file_name(const StrategyConfig& strategy, std::uint64_t seed) {
  return "trace_" + strategy.label() + "_" + std::to_string(seed) + ".csv";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw SummaryFormatError(where + ": not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& s, const std::string& where) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw SummaryFormatError(where + ": not an unsigned integer: '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw SummaryFormatError(where + ": integer out of range: '" + s + "'");
  }
}

}  // namespace

std::vector<SummaryRow> parse_summary(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SummaryFormatError(origin + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSummaryHeader) {
    throw SummaryFormatError(origin + ": header does not match '" + std::string(kSummaryHeader) + "'");
  }
  std::vector<SummaryRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 8) {
      throw SummaryFormatError(where + ": expected 8 fields, found " + std::to_string(f.size()));
    }
    SummaryRow r;
    r.scenario = f[0];
    r.strategy = f[1];
    r.seed = parse_unsigned(f[2], where);
    r.n_particles = parse_unsigned(f[3], where);
    r.auc_add = parse_number(f[4], where);
    r.auc_adds = parse_number(f[5], where);
    r.recovery_frames = parse_number(f[6], where);
    r.mean_alpha = parse_number(f[7], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    written_.push_back(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    out.close();
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
    if (created_dir_) std::filesystem::remove(dir_, ec);
    written_.clear();
  }

  void ensure_dir() {
    std::error_code ec;
    if (!std::filesystem::exists(dir_, ec)) {
      std::filesystem::create_directories(dir_, ec);
      if (ec) throw std::runtime_error("cannot create " + dir_.string() + ": " + ec.message());
      created_dir_ = true;
    } else if (!std::filesystem::is_directory(dir_, ec)) {
      throw std::runtime_error(dir_.string() + " exists and is not a directory");
    }
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  bool created_dir_ = false;
};

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err,
                   LogLevel level) {
  struct Job {
    std::size_t seed_index;
    std::size_t strategy_index;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    for (std::size_t k = 0; k < cfg.strategies.size(); ++k) jobs.push_back({s, k});
  }

  OutputSet files(cfg.output_dir);
  std::mutex log_mutex;
  try {
    std::vector<Scenario> scenarios;
    scenarios.reserve(cfg.seeds.size());
    for (const auto seed : cfg.seeds) scenarios.push_back(build_scenario(cfg, seed));

    std::vector<RunOutput> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        const auto& job = jobs[i];
        const auto& strat = cfg.strategies[job.strategy_index];
        const auto seed = cfg.seeds[job.seed_index];
        try {
          results[i] = run_single(cfg, scenarios[job.seed_index], strat, seed);
          if (level >= LogLevel::Debug) {
            const std::lock_guard lock(log_mutex);
            out << "done " << strat.label() << " seed " << seed
                << " auc_add=" << format_float(results[i].summary.auc_add) << '\n';
          }
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(jobs.size())));
    if (n_workers == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    files.ensure_dir();
    std::vector<SummaryRow> rows;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const auto& strat = cfg.strategies[jobs[i].strategy_index];
      const auto seed = cfg.seeds[jobs[i].seed_index];
      files.write(trace_file_name(strat, seed), trace_csv(results[i].trace));
      if (cfg.emit_svg) {
        const auto& sc = scenarios[jobs[i].seed_index];
        const std::string title = scenario_id(sc) + " / " + strat.label() + " / seed " + std::to_string(seed);
        files.write("plot_" + strat.label() + "_" + std::to_string(seed) + ".svg",
                    render_trace_svg(results[i].trace, scenario_events(sc), title,
                                     cfg.metrics.auc_threshold));
      }
      rows.push_back(results[i].summary);
    }
    files.write("summary.csv", summary_csv(rows));
    if (level >= LogLevel::Info) {
      out << "wrote " << jobs.size() << " runs to " << cfg.output_dir.string() << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    files.rollback();
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    files.rollback();
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int run_command(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
                LogLevel level) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }
  return run_experiment(cfg, out, err, level);
}

// --- compare ------------------------------------------------------------------

std::string compare_table(const std::vector<SummaryRow>& rows) {
  struct Acc {
    std::size_t runs = 0;
    double auc_add = 0.0;
    double auc_adds = 0.0;
    double recovery = 0.0;
    std::size_t recovery_n = 0;
    double alpha = 0.0;
  };
  std::map<std::pair<std::string, std::string>, Acc> groups;
  for (const auto& r : rows) {
    Acc& a = groups[{r.strategy, r.scenario}];
    ++a.runs;
    a.auc_add += r.auc_add;
    a.auc_adds += r.auc_adds;
    a.alpha += r.mean_alpha;
    if (!std::isnan(r.recovery_frames)) {
      a.recovery += r.recovery_frames;
      ++a.recovery_n;
    }
  }

  const std::vector<std::string> header{"strategy", "scenario",        "runs",      "auc_add",
                                        "auc_adds", "recovery_frames", "mean_alpha"};
  std::vector<std::vector<std::string>> table{header};
  for (const auto& [key, a] : groups) {
    const double n = static_cast<double>(a.runs);
    table.push_back({key.first, key.second, std::to_string(a.runs), format_float(a.auc_add / n),
                     format_float(a.auc_adds / n),
                     a.recovery_n == 0 ? "-" : format_float(a.recovery / static_cast<double>(a.recovery_n)),
                     format_float(a.alpha / n)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream o;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) o << "  ";
      if (c < 2) {
        o << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      } else {
        o << std::right << std::setw(static_cast<int>(width[c])) << row[c];
      }
    }
    o << '\n';
  }
  std::string s = o.str();
  // Trim trailing padding on each line.
  std::string trimmed;
  std::istringstream lines(s);
  std::string line;
  while (std::getline(lines, line)) {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    trimmed += line + '\n';
  }
  return trimmed;
}

int compare_command(const std::vector<std::filesystem::path>& summaries, std::ostream& out,
                    std::ostream& err) {
  if (summaries.empty()) {
    err << "compare needs at least one summary file\n";
    return 1;
  }
  std::vector<SummaryRow> rows;
  for (const auto& p : summaries) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      err << "cannot read " << p.string() << '\n';
      return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      auto part = parse_summary(buf.str(), p.string());
      rows.insert(rows.end(), part.begin(), part.end());
    } catch (const SummaryFormatError& e) {
      err << "schema mismatch: " << e.what() << '\n';
      return 1;
    }
  }
  out << compare_table(rows);
  return 0;
}

// --- make-scenario ------------------------------------------------------------

int make_scenario_command(const std::string& preset, std::uint64_t seed,
                          const std::filesystem::path& out_path, std::ostream& out,
                          std::ostream& err) {
  if (!is_preset(preset)) {
    err << "unknown preset '" << preset << "'; valid presets:";
    for (const auto& n : preset_names()) err << ' ' << n;
    err << '\n';
    return 1;
  }
  Scenario sc;
  try {
    sc = make_preset(preset, seed);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    save_scenario(sc, out_path);
  } catch (const std::exception& e) {
    std::error_code ec;
    std::filesystem::remove(out_path, ec);
    std::filesystem::remove(sidecar_path(out_path), ec);
    err << "error: " << e.what() << '\n';
    return 2;
  }
  out << "wrote " << out_path.string() << '\n';
  return 0;
}

}  // namespace chpf
