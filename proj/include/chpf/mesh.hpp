#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace chpf {

/// Triangle mesh in the object frame (meters).
struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  /// Throws std::invalid_argument on out-of-range indices or triangles with
  /// area <= 1e-12 m^2.
  void validate() const;

  /// Appends another mesh, offsetting its indices.
  void append(const TriMesh& other);
};

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c);

// Built-in primitives, all centered near the object-frame origin.
TriMesh make_box(const Eigen::Vector3d& size, const Eigen::Vector3d& center = Eigen::Vector3d::Zero());
/// L-shaped prism: a box with one upper corner block removed.
TriMesh make_notched_box(const Eigen::Vector3d& size, double notch_fraction = 0.5);
/// Closed cylinder about the z axis, tessellated as an n-gon prism.
TriMesh make_cylinder(double radius, double height, int segments);
/// Mug analog: a body box plus a handle box attached on the +x side.
TriMesh make_mug(const Eigen::Vector3d& body_size, const Eigen::Vector3d& handle_size);

/// Names accepted by make_named_mesh: box, notched-box, cylinder, mug.
std::vector<std::string> builtin_mesh_names();
TriMesh make_named_mesh(std::string_view name);

/// Minimal OFF reader: "OFF", "nv nf [ne]", nv vertex lines, nf lines "3 a b c".
/// '#' starts a comment. Throws std::runtime_error on malformed input.
TriMesh read_off(std::istream& in);
TriMesh load_off(const std::filesystem::path& path);
void write_off(std::ostream& out, const TriMesh& mesh);

/// At most max_points vertices, picked at a fixed stride.
std::vector<Eigen::Vector3d> model_points(const TriMesh& mesh, std::size_t max_points = 500);

}  // namespace chpf
