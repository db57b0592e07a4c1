#include "chpf/config_json.hpp"

namespace chpf {

FieldReader::FieldReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
}

const Json* FieldReader::raw(const std::string& key) {
  seen_.insert(key);
  const auto it = j_.find(key);
  return it == j_.end() ? nullptr : &*it;
}

const Json* FieldReader::child(const std::string& key) {
  seen_.insert(key);
  const auto it = j_.find(key);
  if (it == j_.end()) return nullptr;
  if (!it->is_object()) throw ConfigError(qualify(key), "must be an object");
  return &*it;
}

std::string FieldReader::qualify(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

void FieldReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (!seen_.contains(it.key())) throw ConfigError(qualify(it.key()), "unknown key");
  }
}

Json to_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json to_json(const Eigen::Quaterniond& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

Eigen::Vector3d vector3_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(path, "must be a 3-element array");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path, "must contain numbers");
  }
}

Eigen::Quaterniond quaternion_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(path, "must be [w, x, y, z]");
  try {
    Eigen::Quaterniond q(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                         j[3].get<double>());
    if (!(q.norm() > 0.0)) throw ConfigError(path, "must be nonzero");
    return canonicalize(q.normalized());
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path, "must contain numbers");
  }
}

Json to_json(const Event& e) {
  Json j{{"kind", std::string(to_string(e.kind))}, {"first", e.first}, {"last", e.last}};
  switch (e.kind) {
    case EventKind::Occlusion:
      j["coverage"] = e.coverage;
      j["gap"] = e.gap;
      j["slant"] = e.slant;
      j["from_left"] = e.from_left;
      break;
    case EventKind::Kidnap:
      j["magnitude"] = e.magnitude;
      break;
    case EventKind::DetectorOutage:
      break;
  }
  return j;
}

void apply_json(const Json& j, const std::string& path, Event& e) {
  FieldReader r(j, path);
  std::string kind;
  if (r.get("kind", kind)) {
    const auto k = parse_event_kind(kind);
    if (!k) throw ConfigError(r.qualify("kind"), "unknown event kind '" + kind + "'");
    e.kind = *k;
  }
  r.get("first", e.first);
  r.get("last", e.last);
  r.get("coverage", e.coverage);
  r.get("gap", e.gap);
  r.get("slant", e.slant);
  r.get("from_left", e.from_left);
  r.get("magnitude", e.magnitude);
  r.finish();
}

namespace {

Json events_json(const std::vector<Event>& events) {
  Json arr = Json::array();
  for (const auto& e : events) arr.push_back(to_json(e));
  return arr;
}

void read_events(FieldReader& r, std::vector<Event>& out) {
  const Json* it = r.raw("events");
  if (it == nullptr) return;
  if (!it->is_array()) throw ConfigError(r.qualify("events"), "must be an array");
  out.clear();
  for (std::size_t i = 0; i < it->size(); ++i) {
    Event e;
    apply_json((*it)[i], r.qualify("events[" + std::to_string(i) + "]"), e);
    out.push_back(e);
  }
}

}  // namespace

Json to_json(const PlanarScenarioConfig& cfg) {
  Json beacons = Json::array();
  for (const auto& b : cfg.beacons) beacons.push_back(Json::array({b.x(), b.y()}));
  Json j{{"space", "planar"},
         {"id", cfg.id},
         {"frames", cfg.frames},
         {"workspace", Json::array({cfg.workspace.x_min, cfg.workspace.x_max, cfg.workspace.y_min,
                                    cfg.workspace.y_max})},
         {"beacons", beacons},
         {"range_sigma", cfg.range_sigma},
         {"dropout", cfg.dropout},
         {"speed", cfg.speed},
         {"turn_sigma", cfg.turn_sigma},
         {"odometry_sigma", cfg.odometry_sigma},
         {"odometry_sigma_theta", cfg.odometry_sigma_theta},
         {"margin", cfg.margin},
         {"events", events_json(cfg.events)}};
  if (cfg.start) j["start"] = Json::array({cfg.start->x, cfg.start->y, cfg.start->theta});
  return j;
}

void apply_json(const Json& j, const std::string& path, PlanarScenarioConfig& cfg) {
  FieldReader r(j, path);
  std::string space;
  if (r.get("space", space) && space != "planar") {
    throw ConfigError(r.qualify("space"), "expected 'planar'");
  }
  r.get("id", cfg.id);
  r.get("frames", cfg.frames);
  std::vector<double> ws;
  if (r.get("workspace", ws)) {
    if (ws.size() != 4) throw ConfigError(r.qualify("workspace"), "must be [x_min, x_max, y_min, y_max]");
    cfg.workspace = {ws[0], ws[1], ws[2], ws[3]};
  }
  std::vector<std::vector<double>> beacons;
  if (r.get("beacons", beacons)) {
    cfg.beacons.clear();
    for (const auto& b : beacons) {
      if (b.size() != 2) throw ConfigError(r.qualify("beacons"), "entries must be [x, y]");
      cfg.beacons.emplace_back(b[0], b[1]);
    }
  }
  r.get("range_sigma", cfg.range_sigma);
  r.get("dropout", cfg.dropout);
  r.get("speed", cfg.speed);
  r.get("turn_sigma", cfg.turn_sigma);
  r.get("odometry_sigma", cfg.odometry_sigma);
  r.get("odometry_sigma_theta", cfg.odometry_sigma_theta);
  r.get("margin", cfg.margin);
  std::vector<double> start;
  if (r.get("start", start)) {
    if (start.size() != 3) throw ConfigError(r.qualify("start"), "must be [x, y, theta]");
    cfg.start = PlanarState(start[0], start[1], start[2]);
  }
  read_events(r, cfg.events);
  r.finish();
}

Json to_json(const PoseScenarioConfig& cfg) {
  return Json{{"space", "pose6d"},
              {"id", cfg.id},
              {"mesh", cfg.mesh},
              {"mesh_file", cfg.mesh_file},
              {"frames", cfg.frames},
              {"width", cfg.width},
              {"height", cfg.height},
              {"focal", cfg.focal},
              {"workspace_lo", to_json(cfg.workspace.lo)},
              {"workspace_hi", to_json(cfg.workspace.hi)},
              {"background_depth", cfg.background_depth},
              {"depth_noise", cfg.depth_noise},
              {"dropout", cfg.dropout},
              {"waypoint_spacing", cfg.waypoint_spacing},
              {"base_rotation", to_json(cfg.base_rotation)},
              {"max_tilt", cfg.max_tilt},
              {"spin_axis", to_json(cfg.spin_axis)},
              {"max_spin", cfg.max_spin},
              {"static_pose", cfg.static_pose},
              {"max_outside_fraction", cfg.max_outside_fraction},
              {"events", events_json(cfg.events)}};
}

void apply_json(const Json& j, const std::string& path, PoseScenarioConfig& cfg) {
  FieldReader r(j, path);
  std::string space;
  if (r.get("space", space) && space != "pose6d") {
    throw ConfigError(r.qualify("space"), "expected 'pose6d'");
  }
  r.get("id", cfg.id);
  r.get("mesh", cfg.mesh);
  r.get("mesh_file", cfg.mesh_file);
  r.get("frames", cfg.frames);
  r.get("width", cfg.width);
  r.get("height", cfg.height);
  r.get("focal", cfg.focal);
  Json v;
  if (r.get("workspace_lo", v)) cfg.workspace.lo = vector3_from_json(v, r.qualify("workspace_lo"));
  if (r.get("workspace_hi", v)) cfg.workspace.hi = vector3_from_json(v, r.qualify("workspace_hi"));
  r.get("background_depth", cfg.background_depth);
  r.get("depth_noise", cfg.depth_noise);
  r.get("dropout", cfg.dropout);
  r.get("waypoint_spacing", cfg.waypoint_spacing);
  if (r.get("base_rotation", v)) cfg.base_rotation = quaternion_from_json(v, r.qualify("base_rotation"));
  r.get("max_tilt", cfg.max_tilt);
  if (r.get("spin_axis", v)) cfg.spin_axis = vector3_from_json(v, r.qualify("spin_axis"));
  r.get("max_spin", cfg.max_spin);
  r.get("static_pose", cfg.static_pose);
  r.get("max_outside_fraction", cfg.max_outside_fraction);
  read_events(r, cfg.events);
  r.finish();
}

Json to_json(const StrategyConfig& cfg) {
  return Json{{"variant", std::string(to_string(cfg.variant))},
              {"name", cfg.label()},
              {"fixed_alpha", cfg.fixed_alpha},
              {"beta", cfg.beta},
              {"decay_slow", cfg.decay_slow},
              {"decay_fast", cfg.decay_fast},
              {"anneal_schedule", cfg.anneal_schedule},
              {"proposal_fraction", cfg.proposal_fraction},
              {"proposal_sigma_translation", cfg.proposal_sigma_translation},
              {"proposal_sigma_rotation", cfg.proposal_sigma_rotation}};
}

void apply_json(const Json& j, const std::string& path, StrategyConfig& cfg) {
  FieldReader r(j, path);
  std::string variant;
  if (r.get("variant", variant)) {
    const auto v = parse_strategy_variant(variant);
    if (!v) {
      throw ConfigError(r.qualify("variant"),
                        "unknown strategy '" + variant +
                            "' (expected fixed, srl, augmcl, annealing, mcl_e2e or chpf)");
    }
    cfg.variant = *v;
  }
  r.get("name", cfg.name);
  r.get("fixed_alpha", cfg.fixed_alpha);
  r.get("beta", cfg.beta);
  r.get("decay_slow", cfg.decay_slow);
  r.get("decay_fast", cfg.decay_fast);
  r.get("anneal_schedule", cfg.anneal_schedule);
  r.get("proposal_fraction", cfg.proposal_fraction);
  r.get("proposal_sigma_translation", cfg.proposal_sigma_translation);
  r.get("proposal_sigma_rotation", cfg.proposal_sigma_rotation);
  r.finish();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.qualify(e.key()), e.message());
  }
}

void apply_json(const Json& j, const std::string& path, MotionModelConfig& cfg) {
  FieldReader r(j, path);
  r.get("sigma_translation", cfg.sigma_translation);
  r.get("sigma_rotation", cfg.sigma_rotation);
  r.get("sigma_x", cfg.sigma_x);
  r.get("sigma_y", cfg.sigma_y);
  r.get("sigma_theta", cfg.sigma_theta);
  r.finish();
}

void apply_json(const Json& j, const std::string& path, DepthModelConfig& cfg) {
  FieldReader r(j, path);
  r.get("tau_match", cfg.tau_match);
  r.get("tau_front", cfg.tau_front);
  r.get("min_coverage", cfg.min_coverage);
  r.finish();
}

void apply_json(const Json& j, const std::string& path, DetectorConfig& cfg) {
  FieldReader r(j, path);
  r.get("sigma_translation", cfg.sigma_translation);
  r.get("sigma_rotation", cfg.sigma_rotation);
  r.get("p_out", cfg.p_out);
  r.finish();
}

}  // namespace chpf
