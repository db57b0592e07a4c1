#include "chpf/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace chpf {

DepthImage::DepthImage(int w, int h, const PinholeCamera& cam)
    : width(w),
      height(h),
      depths(static_cast<std::size_t>(std::max(0, w)) * static_cast<std::size_t>(std::max(0, h)),
             kNoReturn),
      camera(cam) {}

void DepthImage::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("depth image dimensions must be >= 1");
  if (depths.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("depth buffer size does not match dimensions");
  }
  for (const double d : depths) {
    if (std::isnan(d) || d <= 0.0) throw std::invalid_argument("depths must be positive");
  }
}

std::size_t RenderedDepth::covered() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

PinholeCamera centered_camera(int width, int height, double focal) {
  return {focal, focal, 0.5 * (width - 1), 0.5 * (height - 1)};
}

namespace {

struct ScreenVertex {
  double x;
  double y;
  double inv_z;
};

// Sutherland-Hodgman against z >= kNearPlane. A triangle yields at most a quad.
int clip_near(const std::array<Eigen::Vector3d, 3>& in, std::array<Eigen::Vector3d, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d& a = in[i];
    const Eigen::Vector3d& b = in[(i + 1) % 3];
    const bool a_in = a.z() >= kNearPlane;
    const bool b_in = b.z() >= kNearPlane;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      Eigen::Vector3d p = a + t * (b - a);
      p.z() = kNearPlane;
      out[n++] = p;
    }
  }
  return n;
}

void raster_triangle(const ScreenVertex& v0, const ScreenVertex& v1, const ScreenVertex& v2,
                     int width, int height, RenderedDepth& out) {
  const double area = (v1.x - v0.x) * (v2.y - v0.y) - (v1.y - v0.y) * (v2.x - v0.x);
  if (std::abs(area) < 1e-14) return;
  const double inv_area = 1.0 / area;

  const double min_x = std::min({v0.x, v1.x, v2.x});
  const double max_x = std::max({v0.x, v1.x, v2.x});
  const double min_y = std::min({v0.y, v1.y, v2.y});
  const double max_y = std::max({v0.y, v1.y, v2.y});
  if (max_x < 0.0 || max_y < 0.0 || min_x > width - 1 || min_y > height - 1) return;
  const int c0 = std::max(0, static_cast<int>(std::ceil(min_x)));
  const int c1 = std::min(width - 1, static_cast<int>(std::floor(max_x)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(min_y)));
  const int r1 = std::min(height - 1, static_cast<int>(std::floor(max_y)));

  for (int row = r0; row <= r1; ++row) {
    const double py = row;
    for (int col = c0; col <= c1; ++col) {
      const double px = col;
      // Barycentrics from signed sub-areas; all share the sign of `area` inside.
      const double b0 = ((v1.x - px) * (v2.y - py) - (v1.y - py) * (v2.x - px)) * inv_area;
      const double b1 = ((v2.x - px) * (v0.y - py) - (v2.y - py) * (v0.x - px)) * inv_area;
      const double b2 = 1.0 - b0 - b1;
      if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) continue;
      const double inv_z = b0 * v0.inv_z + b1 * v1.inv_z + b2 * v2.inv_z;
      if (!(inv_z > 0.0)) continue;
      const double z = 1.0 / inv_z;
      const std::size_t idx = out.image.index(col, row);
      if (z < out.image.depths[idx]) {
        out.image.depths[idx] = z;
        out.mask[idx] = 1;
      }
    }
  }
}

}  // namespace

void render_depth_into(const TriMesh& mesh, const Pose& pose, const PinholeCamera& camera,
                       int width, int height, RenderedDepth& out) {
  if (width < 1 || height < 1) throw std::invalid_argument("render size must be >= 1");
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw std::invalid_argument("empty mesh");
  const auto n_pix = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  out.image.width = width;
  out.image.height = height;
  out.image.camera = camera;
  out.image.depths.assign(n_pix, kNoReturn);
  out.mask.assign(n_pix, 0);

  const Eigen::Matrix3d rot = pose.rotation.toRotationMatrix();
  std::vector<Eigen::Vector3d> cam_pts(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    cam_pts[i] = rot * mesh.vertices[i] + pose.translation;
  }

  auto to_screen = [&](const Eigen::Vector3d& p) {
    return ScreenVertex{camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy,
                        1.0 / p.z()};
  };

  std::array<Eigen::Vector3d, 4> poly;
  for (const auto& tri : mesh.triangles) {
    const std::array<Eigen::Vector3d, 3> v{cam_pts[tri[0]], cam_pts[tri[1]], cam_pts[tri[2]]};
    if (v[0].z() < kNearPlane && v[1].z() < kNearPlane && v[2].z() < kNearPlane) continue;
    const int n = clip_near(v, poly);
    if (n < 3) continue;
    const ScreenVertex s0 = to_screen(poly[0]);
    for (int k = 1; k + 1 < n; ++k) {
      raster_triangle(s0, to_screen(poly[k]), to_screen(poly[k + 1]), width, height, out);
    }
  }
}

RenderedDepth render_depth(const TriMesh& mesh, const Pose& pose, const PinholeCamera& camera,
                           int width, int height) {
  RenderedDepth out;
  render_depth_into(mesh, pose, camera, width, height, out);
  return out;
}

}  // namespace chpf
