#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "chpf/geometry.hpp"
#include "chpf/mesh.hpp"

namespace chpf {

/// Pinhole intrinsics, no distortion. Pixel (col, row) has its center at image
/// coordinates (col, row); the camera looks down +z.
struct PinholeCamera {
  double fx = 80.0;
  double fy = 80.0;
  double cx = 31.5;
  double cy = 31.5;

  [[nodiscard]] Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
  /// Camera-frame point at z = depth on the ray through image point (u, v).
  [[nodiscard]] Eigen::Vector3d back_project(double u, double v, double depth) const {
    return {(u - cx) / fx * depth, (v - cy) / fy * depth, depth};
  }

  friend bool operator==(const PinholeCamera&, const PinholeCamera&) = default;
};

inline constexpr double kNoReturn = std::numeric_limits<double>::infinity();

/// Row-major z-depth image in meters; +inf marks "no return".
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depths;
  PinholeCamera camera;

  DepthImage() = default;
  DepthImage(int w, int h, const PinholeCamera& cam);

  [[nodiscard]] double at(int col, int row) const { return depths[index(col, row)]; }
  double& at(int col, int row) { return depths[index(col, row)]; }
  [[nodiscard]] std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  [[nodiscard]] std::size_t pixel_count() const { return depths.size(); }

  /// Throws std::invalid_argument if dimensions are < 1 or a finite depth is <= 0.
  void validate() const;

  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

/// A rendered hypothesis: depth plus the object-coverage mask.
struct RenderedDepth {
  DepthImage image;
  std::vector<std::uint8_t> mask;

  [[nodiscard]] std::size_t covered() const;
};

/// Points closer than this are clipped away.
inline constexpr double kNearPlane = 1e-3;

/// Z-buffer rasterization of `mesh` placed at `pose` in the camera frame.
/// Depth is interpolated perspective-correctly (1/z is affine in screen space);
/// the nearest surface wins per pixel. Triangles are clipped at kNearPlane, so
/// geometry behind the camera simply produces an empty mask.
RenderedDepth render_depth(const TriMesh& mesh, const Pose& pose, const PinholeCamera& camera,
                           int width, int height);

/// Same, writing into caller-owned buffers (resized as needed).
void render_depth_into(const TriMesh& mesh, const Pose& pose, const PinholeCamera& camera,
                       int width, int height, RenderedDepth& out);

/// Camera centered on the image with the given focal length.
PinholeCamera centered_camera(int width, int height, double focal);

}  // namespace chpf
