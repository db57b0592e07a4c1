#include "chpf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>

namespace chpf {

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

void TriMesh::validate() const {
  if (vertices.empty() || triangles.empty()) throw std::invalid_argument("mesh is empty");
  for (const auto& t : triangles) {
    for (const auto i : t) {
      if (i >= vertices.size()) throw std::invalid_argument("triangle index out of range");
    }
    if (!(triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) > 1e-12)) {
      throw std::invalid_argument("degenerate triangle");
    }
  }
}

void TriMesh::append(const TriMesh& other) {
  const auto base = static_cast<std::uint32_t>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const auto& t : other.triangles) triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

TriMesh make_box(const Eigen::Vector3d& size, const Eigen::Vector3d& center) {
  const Eigen::Vector3d h = 0.5 * size;
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back(center.x() + ((i & 1) ? h.x() : -h.x()),
                            center.y() + ((i & 2) ? h.y() : -h.y()),
                            center.z() + ((i & 4) ? h.z() : -h.z()));
  }
  // Outward-facing quads as vertex-index corners.
  constexpr std::array<std::array<std::uint32_t, 4>, 6> quads{{
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  }};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriMesh make_notched_box(const Eigen::Vector3d& size, double notch_fraction) {
  // Full-height lower slab plus a partial upper block; the missing corner is the notch.
  const double f = std::clamp(notch_fraction, 0.1, 0.9);
  const double lower_h = size.z() * f;
  const double upper_h = size.z() - lower_h;
  const double upper_w = size.x() * (1.0 - f);
  TriMesh m = make_box({size.x(), size.y(), lower_h}, {0.0, 0.0, -0.5 * size.z() + 0.5 * lower_h});
  m.append(make_box({upper_w, size.y(), upper_h},
                    {-0.5 * size.x() + 0.5 * upper_w, 0.0, 0.5 * size.z() - 0.5 * upper_h}));
  return m;
}

TriMesh make_cylinder(double radius, double height, int segments) {
  if (segments < 3) throw std::invalid_argument("cylinder needs at least 3 segments");
  TriMesh m;
  const auto n = static_cast<std::uint32_t>(segments);
  const double hz = 0.5 * height;
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -hz);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), hz);
  }
  const std::uint32_t bottom = 2 * n;
  const std::uint32_t top = 2 * n + 1;
  m.vertices.emplace_back(0.0, 0.0, -hz);
  m.vertices.emplace_back(0.0, 0.0, hz);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    const std::uint32_t b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    m.triangles.push_back({b0, b1, t1});
    m.triangles.push_back({b0, t1, t0});
    m.triangles.push_back({bottom, b1, b0});
    m.triangles.push_back({top, t0, t1});
  }
  return m;
}

TriMesh make_mug(const Eigen::Vector3d& body_size, const Eigen::Vector3d& handle_size) {
  TriMesh m = make_box(body_size);
  m.append(make_box(handle_size, {0.5 * body_size.x() + 0.5 * handle_size.x(), 0.0, 0.0}));
  return m;
}

std::vector<std::string> builtin_mesh_names() { return {"box", "cylinder", "mug", "notched-box"}; }

TriMesh make_named_mesh(std::string_view name) {
  if (name == "box") return make_box({0.16, 0.21, 0.06});
  if (name == "notched-box") return make_notched_box({0.14, 0.08, 0.12});
  if (name == "cylinder") return make_cylinder(0.04, 0.14, 24);
  if (name == "mug") return make_mug({0.08, 0.08, 0.10}, {0.035, 0.015, 0.06});
  throw std::invalid_argument("unknown mesh name: " + std::string(name));
}

namespace {

// Next non-empty line with comments stripped.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TriMesh read_off(std::istream& in) {
  std::string line;
  if (!next_line(in, line) || line.substr(0, 3) != "OFF") {
    throw std::runtime_error("OFF: missing header");
  }
  std::istringstream rest(line.substr(3));
  long nv = -1, nf = -1;
  if (!(rest >> nv)) {
    if (!next_line(in, line)) throw std::runtime_error("OFF: missing counts");
    std::istringstream counts(line);
    counts >> nv >> nf;
  } else {
    rest >> nf;
  }
  if (nv <= 0 || nf <= 0) throw std::runtime_error("OFF: bad vertex/face counts");

  TriMesh m;
  m.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!next_line(in, line)) throw std::runtime_error("OFF: truncated vertex list");
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw std::runtime_error("OFF: malformed vertex line");
    m.vertices.emplace_back(x, y, z);
  }
  for (long i = 0; i < nf; ++i) {
    if (!next_line(in, line)) throw std::runtime_error("OFF: truncated face list");
    std::istringstream ls(line);
    long k = 0;
    long a, b, c;
    if (!(ls >> k >> a >> b >> c) || k != 3) {
      throw std::runtime_error("OFF: only triangle faces are supported");
    }
    if (a < 0 || b < 0 || c < 0) throw std::runtime_error("OFF: negative index");
    m.triangles.push_back(
        {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)});
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("OFF: ") + e.what());
  }
  return m;
}

TriMesh load_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path.string());
  return read_off(in);
}

void write_off(std::ostream& out, const TriMesh& mesh) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

std::vector<Eigen::Vector3d> model_points(const TriMesh& mesh, std::size_t max_points) {
  if (mesh.vertices.size() <= max_points) return mesh.vertices;
  std::vector<Eigen::Vector3d> out;
  out.reserve(max_points);
  const double stride = static_cast<double>(mesh.vertices.size()) / static_cast<double>(max_points);
  for (std::size_t k = 0; k < max_points; ++k) {
    out.push_back(mesh.vertices[static_cast<std::size_t>(static_cast<double>(k) * stride)]);
  }
  return out;
}

}  // namespace chpf
