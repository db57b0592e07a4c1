#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "chpf/candidate.hpp"
#include "chpf/depth_model.hpp"
#include "chpf/filter.hpp"
#include "chpf/scenario.hpp"
#include "chpf/strategy.hpp"

namespace chpf {

using Json = nlohmann::json;

/// Reads fields out of one JSON object and rejects keys nobody asked for.
///
///   FieldReader r(j, "filter.motion");
///   r.get("sigma_x", cfg.sigma_x);
///   r.finish();  // ConfigError("filter.motion.typo", ...) on leftovers
class FieldReader {
 public:
  FieldReader(const Json& j, std::string path);

  template <class T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return false;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(qualify(key), "has the wrong type");
    }
    return true;
  }

  /// Value at `key` of any type, or nullptr when absent.
  const Json* raw(const std::string& key);
  /// Sub-object at `key`, or nullptr when absent.
  const Json* child(const std::string& key);
  [[nodiscard]] std::string qualify(const std::string& key) const;
  void finish() const;

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json to_json(const Eigen::Vector3d& v);
Json to_json(const Eigen::Quaterniond& q);
Json to_json(const Event& e);
Json to_json(const PlanarScenarioConfig& cfg);
Json to_json(const PoseScenarioConfig& cfg);
Json to_json(const StrategyConfig& cfg);

Eigen::Vector3d vector3_from_json(const Json& j, const std::string& path);
/// Quaternion as [w, x, y, z].
Eigen::Quaterniond quaternion_from_json(const Json& j, const std::string& path);

// Overlay the keys present in `j` onto an existing config. Unknown keys throw.
void apply_json(const Json& j, const std::string& path, Event& e);
void apply_json(const Json& j, const std::string& path, PlanarScenarioConfig& cfg);
void apply_json(const Json& j, const std::string& path, PoseScenarioConfig& cfg);
void apply_json(const Json& j, const std::string& path, StrategyConfig& cfg);
void apply_json(const Json& j, const std::string& path, MotionModelConfig& cfg);
void apply_json(const Json& j, const std::string& path, DepthModelConfig& cfg);
void apply_json(const Json& j, const std::string& path, DetectorConfig& cfg);

}  // namespace chpf
