#include "chpf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chpf/config_json.hpp"

namespace chpf {

namespace {

// Child-stream tags under the scenario-noise stream.
constexpr std::uint64_t kTrajectoryTag = 0x7472616aULL;
constexpr std::uint64_t kObservationTag = 0x6f627376ULL;
constexpr std::uint64_t kEventTag = 0x6576656eULL;

RandomStream scenario_stream(std::uint64_t seed, std::uint64_t tag) {
  return RandomStream(seed, StreamId::ScenarioNoise).child(tag);
}

void validate_events(const std::vector<Event>& events, int frames) {
  for (const auto& e : events) {
    if (e.first > e.last || e.last >= static_cast<std::size_t>(frames)) {
      throw ConfigError("events", "frame range must satisfy 0 <= first <= last < frames");
    }
    if (e.kind == EventKind::Occlusion) {
      if (!(e.coverage >= 0.0 && e.coverage <= 1.0)) {
        throw ConfigError("events.coverage", "must lie in [0, 1]");
      }
      if (!(e.gap > 0.0)) throw ConfigError("events.gap", "must be positive");
    }
    if (e.kind == EventKind::Kidnap && !(e.magnitude > 0.0)) {
      throw ConfigError("events.magnitude", "must be positive");
    }
  }
}

}  // namespace

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Occlusion: return "occlusion";
    case EventKind::Kidnap: return "kidnap";
    case EventKind::DetectorOutage: return "detector_outage";
  }
  return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::Occlusion, EventKind::Kidnap, EventKind::DetectorOutage}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

const std::string& scenario_id(const Scenario& s) {
  return std::visit([](const auto& sc) -> const std::string& { return sc.id; }, s);
}

std::size_t frame_count(const Scenario& s) {
  return std::visit([](const auto& sc) { return sc.frames.size(); }, s);
}

const std::vector<Event>& scenario_events(const Scenario& s) {
  return std::visit([](const auto& sc) -> const std::vector<Event>& { return sc.events; }, s);
}

bool detector_outage(const std::vector<Event>& events, std::size_t frame) {
  return std::any_of(events.begin(), events.end(), [&](const Event& e) {
    return e.kind == EventKind::DetectorOutage && e.covers(frame);
  });
}

// --- planar -----------------------------------------------------------------

void PlanarScenarioConfig::validate() const {
  if (frames < 1) throw ConfigError("frames", "must be >= 1");
  workspace.validate();
  if (beacons.empty()) throw ConfigError("beacons", "at least one beacon is required");
  for (const double v : {range_sigma, dropout, speed, turn_sigma, odometry_sigma,
                         odometry_sigma_theta, margin}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("planar", "noise, speed and margin settings must be nonnegative");
    }
  }
  if (dropout > 1.0) throw ConfigError("dropout", "must lie in [0, 1]");
  validate_events(events, frames);
  for (const auto& e : events) {
    if (e.kind == EventKind::Occlusion) {
      throw ConfigError("events", "occlusion events need a pose scenario");
    }
  }
}

PlanarScenario generate_planar(const PlanarScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PlanarScenario sc;
  sc.id = cfg.id;
  sc.seed = seed;
  sc.world.workspace = cfg.workspace;
  sc.world.beacons = cfg.beacons;
  sc.events = cfg.events;
  sc.config_json = to_json(cfg).dump();

  const PlanarRegion inner{cfg.workspace.x_min + cfg.margin, cfg.workspace.x_max - cfg.margin,
                           cfg.workspace.y_min + cfg.margin, cfg.workspace.y_max - cfg.margin};
  const bool has_inner = inner.x_max >= inner.x_min && inner.y_max >= inner.y_min;
  const RandomStream traj = scenario_stream(seed, kTrajectoryTag);
  const RandomStream obs = scenario_stream(seed, kObservationTag);
  const RandomStream evs = scenario_stream(seed, kEventTag);

  PlanarState truth;
  if (cfg.start) {
    truth = *cfg.start;
  } else {
    RandomStream r = traj.child(~0ULL);
    const PlanarRegion& area = has_inner ? inner : cfg.workspace;
    truth = sample_planar_candidate(area, r);
  }

  sc.frames.reserve(static_cast<std::size_t>(cfg.frames));
  for (int f = 0; f < cfg.frames; ++f) {
    const auto frame = static_cast<std::size_t>(f);
    ControlInput<PlanarState> control;
    if (f > 0) {
      RandomStream r = traj.child(frame);
      double turn = cfg.turn_sigma * r.normal();
      const double odo_x = cfg.odometry_sigma * r.normal();
      const double odo_y = cfg.odometry_sigma * r.normal();
      const double odo_t = cfg.odometry_sigma_theta * r.normal();
      // Steer back toward the interior when the next step would leave it.
      const PlanarState ahead = compose(truth, PlanarState(cfg.speed * 4.0, 0.0, turn));
      if (has_inner && (ahead.x < inner.x_min || ahead.x > inner.x_max || ahead.y < inner.y_min ||
                        ahead.y > inner.y_max)) {
        const double cx = 0.5 * (inner.x_min + inner.x_max);
        const double cy = 0.5 * (inner.y_min + inner.y_max);
        const double want = std::atan2(cy - truth.y, cx - truth.x);
        turn = std::clamp(wrap_angle(want - truth.theta), -0.3, 0.3);
      }
      const PlanarState motion(cfg.speed, 0.0, turn);
      control.delta = PlanarState(motion.x + odo_x, motion.y + odo_y, motion.theta + odo_t);

      const Event* kidnap = nullptr;
      for (const auto& e : cfg.events) {
        if (e.kind == EventKind::Kidnap && e.first == frame) kidnap = &e;
      }
      if (kidnap != nullptr) {
        RandomStream kr = evs.child(frame);
        bool placed = false;
        for (int attempt = 0; attempt < 256 && !placed; ++attempt) {
          const double dir = kr.uniform(-std::numbers::pi, std::numbers::pi);
          const double nx = truth.x + kidnap->magnitude * std::cos(dir);
          const double ny = truth.y + kidnap->magnitude * std::sin(dir);
          if (nx >= cfg.workspace.x_min && nx <= cfg.workspace.x_max &&
              ny >= cfg.workspace.y_min && ny <= cfg.workspace.y_max) {
            truth = PlanarState(nx, ny, truth.theta);
            placed = true;
          }
        }
        if (!placed) throw ScenarioError("kidnap magnitude does not fit inside the workspace");
      } else {
        truth = compose(truth, motion);
      }
    }

    PlanarObservation z;
    z.beacon_distances.reserve(cfg.beacons.size());
    RandomStream r = obs.child(frame);
    for (const auto& b : cfg.beacons) {
      const double n = r.normal();
      const double u = r.uniform();
      double d = std::hypot(b.x() - truth.x, b.y() - truth.y) + cfg.range_sigma * n;
      d = std::max(0.0, d);
      if (u < cfg.dropout) d = std::numeric_limits<double>::quiet_NaN();
      z.beacon_distances.push_back(d);
    }
    sc.frames.push_back({truth, control, std::move(z)});
  }
  return sc;
}

// --- 6D pose ----------------------------------------------------------------

void PoseScenarioConfig::validate() const {
  if (frames < 1) throw ConfigError("frames", "must be >= 1");
  if (width < 1 || height < 1) throw ConfigError("width", "image dimensions must be >= 1");
  if (!(focal > 0.0)) throw ConfigError("focal", "must be positive");
  workspace.validate();
  if (!(workspace.lo.z() > kNearPlane)) {
    throw ConfigError("workspace", "must lie in front of the camera");
  }
  if (!(depth_noise >= 0.0)) throw ConfigError("depth_noise", "must be nonnegative");
  if (!(dropout >= 0.0 && dropout <= 1.0)) throw ConfigError("dropout", "must lie in [0, 1]");
  if (waypoint_spacing < 1) throw ConfigError("waypoint_spacing", "must be >= 1");
  if (!(max_tilt >= 0.0) || !(max_spin >= 0.0)) {
    throw ConfigError("max_tilt", "rotation ranges must be nonnegative");
  }
  if (!(max_outside_fraction >= 0.0 && max_outside_fraction <= 1.0)) {
    throw ConfigError("max_outside_fraction", "must lie in [0, 1]");
  }
  validate_events(events, frames);
  for (const auto& e : events) {
    if (e.kind == EventKind::Kidnap) throw ConfigError("events", "kidnap events need a planar scenario");
  }
}

std::size_t composite_occluder(const Event& ev, const RenderedDepth& truth_render,
                               DepthImage& observed) {
  const int w = truth_render.image.width;
  const int h = truth_render.image.height;
  const double sign = ev.from_left ? 1.0 : -1.0;
  auto key = [&](int col, int row) { return sign * (col + ev.slant * row); };

  std::vector<double> keys;
  int c0 = w, c1 = -1, r0 = h, r1 = -1;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!truth_render.mask[truth_render.image.index(c, r)]) continue;
      keys.push_back(key(c, r));
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
    }
  }
  if (keys.empty() || ev.coverage <= 0.0) return 0;
  std::sort(keys.begin(), keys.end());
  const auto target = static_cast<std::size_t>(std::llround(ev.coverage * keys.size()));
  if (target == 0) return 0;
  // Everything with key < threshold is hidden; threshold sits between the
  // target-th and next key.
  const double threshold =
      target >= keys.size() ? keys.back() + 1.0 : 0.5 * (keys[target - 1] + keys[target]);

  double nearest = kNoReturn;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const std::size_t i = truth_render.image.index(c, r);
      if (truth_render.mask[i] && key(c, r) < threshold) {
        nearest = std::min(nearest, truth_render.image.depths[i]);
      }
    }
  }
  const double occluder_depth = std::max(kNearPlane, nearest - ev.gap);

  // The occluder plate spans the object's bounding box (plus a margin) on the hidden side.
  constexpr int kMargin = 3;
  std::size_t hidden = 0;
  for (int r = std::max(0, r0 - kMargin); r <= std::min(h - 1, r1 + kMargin); ++r) {
    for (int c = std::max(0, c0 - kMargin); c <= std::min(w - 1, c1 + kMargin); ++c) {
      if (key(c, r) >= threshold) continue;
      const std::size_t i = observed.index(c, r);
      if (occluder_depth < observed.depths[i]) {
        observed.depths[i] = occluder_depth;
        if (truth_render.mask[i]) ++hidden;
      }
    }
  }
  return hidden;
}

namespace {

Eigen::Vector3d catmull_rom(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                            const Eigen::Vector3d& p2, const Eigen::Vector3d& p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

std::vector<Pose> pose_trajectory(const PoseScenarioConfig& cfg, std::uint64_t seed) {
  const RandomStream traj = scenario_stream(seed, kTrajectoryTag);
  const auto n_frames = static_cast<std::size_t>(cfg.frames);
  const auto spacing = static_cast<std::size_t>(cfg.waypoint_spacing);
  const std::size_t n_way = n_frames / spacing + 2;
  const Box3& ws = cfg.workspace;
  const Eigen::Vector3d center = 0.5 * (ws.lo + ws.hi);

  std::vector<Eigen::Vector3d> wp_t;
  std::vector<Eigen::Quaterniond> wp_q;
  double spin = 0.0;
  for (std::size_t k = 0; k < n_way; ++k) {
    RandomStream r = traj.child(k);
    Eigen::Vector3d t(r.uniform(ws.lo.x(), ws.hi.x()), r.uniform(ws.lo.y(), ws.hi.y()),
                      r.uniform(ws.lo.z(), ws.hi.z()));
    const Eigen::Vector3d tilt_axis = random_unit_vector(r);
    const double tilt = r.uniform(0.0, cfg.max_tilt);
    const double spin_step = r.uniform(-cfg.max_spin, cfg.max_spin);
    if (cfg.static_pose) {
      t = center;
    } else {
      spin += spin_step;
    }
    Eigen::Quaterniond q = cfg.base_rotation;
    if (!cfg.static_pose) q = axis_angle(tilt_axis, tilt) * q * axis_angle(cfg.spin_axis, spin);
    wp_t.push_back(t);
    wp_q.push_back(canonicalize(q.normalized()));
  }

  std::vector<Pose> out;
  out.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t k = f / spacing;
    const double t = static_cast<double>(f % spacing) / static_cast<double>(spacing);
    const Eigen::Vector3d& p0 = wp_t[k == 0 ? 0 : k - 1];
    const Eigen::Vector3d pos = catmull_rom(p0, wp_t[k], wp_t[k + 1],
                                            wp_t[std::min(k + 2, n_way - 1)], t);
    const double s = t * t * (3.0 - 2.0 * t);
    const Eigen::Quaterniond q = wp_q[k].slerp(s, wp_q[k + 1]);
    out.emplace_back(cfg.static_pose ? center : pos, q);
  }
  return out;
}

}  // namespace

PoseScenario generate_pose_track(const PoseScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PoseScenario sc;
  sc.id = cfg.id;
  sc.seed = seed;
  sc.events = cfg.events;
  sc.config_json = to_json(cfg).dump();
  sc.world.mesh_name = cfg.mesh_file.empty() ? cfg.mesh : cfg.mesh_file;
  sc.world.mesh = cfg.mesh_file.empty() ? make_named_mesh(cfg.mesh) : load_off(cfg.mesh_file);
  sc.world.mesh.validate();
  sc.world.camera = PinholeCamera{cfg.focal, cfg.focal, 0.5 * (cfg.width - 1), 0.5 * (cfg.height - 1)};
  sc.world.width = cfg.width;
  sc.world.height = cfg.height;
  sc.world.workspace = cfg.workspace;

  const auto truths = pose_trajectory(cfg, seed);
  const RandomStream obs = scenario_stream(seed, kObservationTag);
  const double background = cfg.background_depth > 0.0 ? cfg.background_depth : kNoReturn;

  std::size_t outside = 0;
  RenderedDepth gt;
  sc.frames.reserve(truths.size());
  for (std::size_t f = 0; f < truths.size(); ++f) {
    const Pose& truth = truths[f];
    render_depth_into(sc.world.mesh, truth, sc.world.camera, cfg.width, cfg.height, gt);
    const Eigen::Vector2d c = sc.world.camera.project(truth.translation);
    if (truth.translation.z() <= kNearPlane || c.x() < 0.0 || c.y() < 0.0 ||
        c.x() > cfg.width - 1 || c.y() > cfg.height - 1 || gt.covered() == 0) {
      ++outside;
    }

    DepthImage z = gt.image;
    for (std::size_t i = 0; i < z.depths.size(); ++i) {
      if (!gt.mask[i]) z.depths[i] = background;
    }
    for (const auto& e : cfg.events) {
      if (e.kind == EventKind::Occlusion && e.covers(f)) composite_occluder(e, gt, z);
    }
    RandomStream r = obs.child(f);
    for (double& d : z.depths) {
      const double n = r.normal();
      const double u = r.uniform();
      if (std::isfinite(d)) d = std::max(kNearPlane, d + cfg.depth_noise * n);
      if (u < cfg.dropout) d = kNoReturn;
    }
    sc.frames.push_back({truth, ControlInput<Pose>{}, std::move(z)});
  }
  if (static_cast<double>(outside) > cfg.max_outside_fraction * static_cast<double>(truths.size())) {
    throw ScenarioError("trajectory leaves the camera frustum on too many frames");
  }
  return sc;
}

// --- detector ---------------------------------------------------------------

void DetectorConfig::validate() const {
  if (!(sigma_translation >= 0.0)) throw ConfigError("detector.sigma_translation", "must be >= 0");
  if (!(sigma_rotation >= 0.0)) throw ConfigError("detector.sigma_rotation", "must be >= 0");
  if (!(p_out >= 0.0 && p_out <= 1.0)) throw ConfigError("detector.p_out", "must lie in [0, 1]");
}

std::optional<Pose> simulated_detector(const PoseScenario& s, std::size_t frame,
                                       const DetectorConfig& cfg, RandomStream& rng) {
  if (frame >= s.frames.size()) throw std::out_of_range("detector frame out of range");
  if (detector_outage(s.events, frame)) return std::nullopt;
  const double u = rng.uniform();
  if (u < cfg.p_out) {
    const Box3& ws = s.world.workspace;
    const Eigen::Vector3d t(rng.uniform(ws.lo.x(), ws.hi.x()), rng.uniform(ws.lo.y(), ws.hi.y()),
                            rng.uniform(ws.lo.z(), ws.hi.z()));
    return Pose(t, uniform_rotation(rng));
  }
  const Pose& gt = s.frames[frame].truth;
  if (cfg.sigma_translation == 0.0 && cfg.sigma_rotation == 0.0) return gt;
  const Eigen::Vector3d noise(rng.normal(), rng.normal(), rng.normal());
  Eigen::Quaterniond q = gt.rotation;
  if (cfg.sigma_rotation > 0.0) q = q * gaussian_rotation(rng, cfg.sigma_rotation);
  return Pose(gt.translation + cfg.sigma_translation * noise, q);
}

std::optional<PlanarState> simulated_detector(const PlanarScenario& s, std::size_t frame,
                                              const DetectorConfig& cfg, RandomStream& rng) {
  if (frame >= s.frames.size()) throw std::out_of_range("detector frame out of range");
  if (detector_outage(s.events, frame)) return std::nullopt;
  const double u = rng.uniform();
  if (u < cfg.p_out) return sample_planar_candidate(s.world.workspace, rng);
  const PlanarState& gt = s.frames[frame].truth;
  if (cfg.sigma_translation == 0.0 && cfg.sigma_rotation == 0.0) return gt;
  return PlanarState(gt.x + cfg.sigma_translation * rng.normal(),
                     gt.y + cfg.sigma_translation * rng.normal(),
                     gt.theta + cfg.sigma_rotation * rng.normal());
}

// --- presets ----------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"planar-kidnap", "pose-ambiguous-handle", "pose-occlusion", "pose-symmetry"};
}

bool is_preset(std::string_view name) {
  const auto names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

namespace {

[[noreturn]] void unknown_preset(std::string_view name) {
  std::string msg = "unknown preset '" + std::string(name) + "'; valid presets:";
  for (const auto& n : preset_names()) msg += " " + n;
  throw ScenarioError(msg);
}

// Object upright (object +z toward image-up) and facing the camera.
Eigen::Quaterniond upright() {
  return Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2.0, Eigen::Vector3d::UnitX()));
}

}  // namespace

PlanarScenarioConfig planar_preset_config(std::string_view name) {
  if (name != "planar-kidnap") unknown_preset(name);
  PlanarScenarioConfig cfg;
  cfg.id = "planar-kidnap";
  cfg.frames = 100;
  Event kidnap;
  kidnap.kind = EventKind::Kidnap;
  kidnap.first = kidnap.last = 40;
  kidnap.magnitude = 3.0;
  cfg.events.push_back(kidnap);
  return cfg;
}

PoseScenarioConfig pose_preset_config(std::string_view name) {
  PoseScenarioConfig cfg;
  if (name == "pose-occlusion") {
    cfg.id = "pose-occlusion";
    cfg.mesh = "notched-box";
    cfg.base_rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.35, Eigen::Vector3d::UnitY())) *
                        Eigen::Quaterniond(Eigen::AngleAxisd(-0.3, Eigen::Vector3d::UnitX()));
    cfg.max_tilt = 0.25;
    Event occ;
    occ.kind = EventKind::Occlusion;
    occ.first = 40;
    occ.last = 69;
    occ.coverage = 0.5;
    occ.gap = 0.01;
    cfg.events.push_back(occ);
  } else if (name == "pose-symmetry") {
    cfg.id = "pose-symmetry";
    cfg.mesh = "cylinder";
    cfg.base_rotation = upright();
    cfg.max_tilt = 0.2;
    cfg.max_spin = 1.0;
  } else if (name == "pose-ambiguous-handle") {
    cfg.id = "pose-ambiguous-handle";
    cfg.mesh = "mug";
    cfg.base_rotation = upright();
    cfg.max_tilt = 0.15;
    cfg.max_spin = 1.5;
  } else {
    unknown_preset(name);
  }
  return cfg;
}

Scenario make_preset(std::string_view name, std::uint64_t seed) {
  if (!is_preset(name)) unknown_preset(name);
  if (name == "planar-kidnap") return generate_planar(planar_preset_config(name), seed);
  return generate_pose_track(pose_preset_config(name), seed);
}

}  // namespace chpf
