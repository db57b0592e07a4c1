#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "chpf/candidate.hpp"
#include "chpf/geometry.hpp"
#include "chpf/mesh.hpp"
#include "chpf/planar_model.hpp"
#include "chpf/raster.hpp"
#include "chpf/rng.hpp"

namespace chpf {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Space : std::uint8_t { Planar = 0, Pose6D = 1 };
enum class EventKind : std::uint8_t { Occlusion = 0, Kidnap = 1, DetectorOutage = 2 };

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

/// Something that happens over frames [first, last] (inclusive). Only the
/// fields for `kind` are meaningful.
struct Event {
  EventKind kind = EventKind::Occlusion;
  std::size_t first = 0;
  std::size_t last = 0;

  // Occlusion: an image-space half-plane (edge col + slant * row) placed
  // `gap` meters in front of the nearest occluded object pixel, sized so that
  // `coverage` of the object's pixels are hidden.
  double coverage = 0.5;
  double gap = 0.01;
  double slant = 0.37;
  bool from_left = true;

  // Kidnap: planar teleport distance at frame `first`.
  double magnitude = 0.0;

  [[nodiscard]] bool covers(std::size_t frame) const { return frame >= first && frame <= last; }
  friend bool operator==(const Event&, const Event&) = default;
};

template <class State, class Obs>
struct Frame {
  State truth{};
  ControlInput<State> control{};
  Obs observation{};
};

struct PlanarWorld {
  PlanarRegion workspace;
  std::vector<Eigen::Vector2d> beacons;
};

struct PoseWorld {
  std::string mesh_name;
  TriMesh mesh;
  PinholeCamera camera;
  int width = 64;
  int height = 64;
  Box3 workspace;
};

template <class State, class Obs, class World>
struct ScenarioData {
  std::string id;
  std::uint64_t seed = 0;
  World world;
  std::vector<Frame<State, Obs>> frames;
  std::vector<Event> events;
  /// Generation config as JSON, carried alongside for provenance.
  std::string config_json;
};

using PlanarScenario = ScenarioData<PlanarState, PlanarObservation, PlanarWorld>;
using PoseScenario = ScenarioData<Pose, DepthImage, PoseWorld>;
using Scenario = std::variant<PlanarScenario, PoseScenario>;

inline Space space_of(const Scenario& s) {
  return std::holds_alternative<PlanarScenario>(s) ? Space::Planar : Space::Pose6D;
}
const std::string& scenario_id(const Scenario& s);
std::size_t frame_count(const Scenario& s);
const std::vector<Event>& scenario_events(const Scenario& s);

// --- planar -----------------------------------------------------------------

struct PlanarScenarioConfig {
  std::string id = "planar";
  int frames = 100;
  PlanarRegion workspace{0.0, 6.0, 0.0, 6.0};
  std::vector<Eigen::Vector2d> beacons{{0.0, 0.0}, {6.0, 0.0}, {0.0, 6.0}, {6.0, 6.0}};
  double range_sigma = 0.1;
  double dropout = 0.0;
  double speed = 0.05;       // meters per frame
  double turn_sigma = 0.1;   // heading random walk, radians per frame
  double odometry_sigma = 0.005;
  double odometry_sigma_theta = 0.005;
  /// Keep the trajectory this far inside the workspace.
  double margin = 0.75;
  std::optional<PlanarState> start;
  std::vector<Event> events;

  void validate() const;
};

PlanarScenario generate_planar(const PlanarScenarioConfig& cfg, std::uint64_t seed);

// --- 6D pose ----------------------------------------------------------------

struct PoseScenarioConfig {
  std::string id = "pose";
  std::string mesh = "box";
  /// Overrides `mesh` when non-empty.
  std::string mesh_file;
  int frames = 100;
  int width = 64;
  int height = 64;
  double focal = 80.0;
  /// Object-center trajectory stays in this camera-frame box.
  Box3 workspace{{-0.06, -0.05, 0.6}, {0.06, 0.05, 0.75}};
  /// Fronto-parallel backdrop depth; <= 0 leaves the background as no-return.
  double background_depth = 1.2;
  double depth_noise = 0.002;
  double dropout = 0.01;
  int waypoint_spacing = 25;
  /// Base orientation plus a bounded random tilt and a spin about `spin_axis`.
  Eigen::Quaterniond base_rotation = Eigen::Quaterniond::Identity();
  double max_tilt = 0.3;
  Eigen::Vector3d spin_axis = Eigen::Vector3d::UnitZ();
  double max_spin = 0.0;
  bool static_pose = false;
  /// Generation fails if the object center leaves the image on more frames than this.
  double max_outside_fraction = 0.1;
  std::vector<Event> events;

  void validate() const;
};

PoseScenario generate_pose_track(const PoseScenarioConfig& cfg, std::uint64_t seed);

/// Mask-aware occluder placement used by generate_pose_track; exposed for audits.
/// Composites the occluder for `ev` into `observed` given the clean render of
/// the ground truth. Returns the number of object pixels hidden.
std::size_t composite_occluder(const Event& ev, const RenderedDepth& truth_render,
                               DepthImage& observed);

// --- simulated detector -------------------------------------------------------

struct DetectorConfig {
  double sigma_translation = 0.01;
  double sigma_rotation = 0.05;
  double p_out = 0.0;

  void validate() const;
};

/// Ground truth plus Gaussian noise; with probability p_out a uniform random
/// state in the workspace. Empty during DetectorOutage events.
std::optional<Pose> simulated_detector(const PoseScenario& s, std::size_t frame,
                                       const DetectorConfig& cfg, RandomStream& rng);
std::optional<PlanarState> simulated_detector(const PlanarScenario& s, std::size_t frame,
                                              const DetectorConfig& cfg, RandomStream& rng);

bool detector_outage(const std::vector<Event>& events, std::size_t frame);

// --- presets ------------------------------------------------------------------

std::vector<std::string> preset_names();
bool is_preset(std::string_view name);
PlanarScenarioConfig planar_preset_config(std::string_view name);
PoseScenarioConfig pose_preset_config(std::string_view name);
/// Throws ScenarioError listing the valid names for an unknown preset.
Scenario make_preset(std::string_view name, std::uint64_t seed);

}  // namespace chpf
