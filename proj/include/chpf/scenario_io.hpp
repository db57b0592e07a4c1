#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "chpf/scenario.hpp"

namespace chpf {

class ScenarioFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kScenarioFormatVersion = 1;

// Container layout (little-endian throughout):
//
//   "CHPF" | u16 version | u8 space | u8 reserved | u64 seed
//   str id | str config_json
//   world   (planar: workspace, beacons; pose: mesh name, mesh, camera, size, workspace)
//   u32 n_events, events
//   u32 n_frames, frames  (depth frames: dims, intrinsics, u32 crc32 of the raw
//                          f64 buffer, u32 length, zlib stream)
//   u32 crc32 of everything above
//
// str = u32 length + bytes; f64 = IEEE-754 binary64.
std::vector<std::uint8_t> encode_scenario(const Scenario& s);

/// Throws ScenarioFormatError on bad magic, unknown version, truncation or a
/// checksum mismatch.
Scenario decode_scenario(std::span<const std::uint8_t> bytes);

/// Writes the container to `path` and a JSON sidecar to `path` + ".json".
void save_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& container);

}  // namespace chpf
