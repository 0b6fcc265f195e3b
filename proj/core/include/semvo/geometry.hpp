#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace semvo {

using Point3 = Eigen::Vector3d;
using Pixel = Eigen::Vector2d;
using Vector6 = Eigen::Matrix<double, 6, 1>;

// Points with camera-frame depth at or below this are treated as behind the camera.
inline constexpr double kDepthEpsilon = 1e-6;

// Rigid world->camera transform: p_camera = rotation * p_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Point3 translation = Point3::Zero();

  static Pose identity() { return Pose{}; }
};

// Pinhole camera with a rolling shutter described by a single readout time:
// row v is exposed at frame_time + readout_time * row_capture_fraction(v).
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int image_width = 0;
  int image_height = 0;
  double readout_time = 0.0;  // seconds from first to last row
};

Point3 transform_point(const Pose& pose, const Point3& p_world);

// Throws NonPositiveDepth when p_camera.z() <= kDepthEpsilon.
Pixel project(const Intrinsics& intr, const Point3& p_camera);

// Inverse of project at a known depth (z of the camera-frame point).
Point3 backproject(const Intrinsics& intr, const Pixel& pixel, double depth);

// compose(a, b): apply b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& pose);

// Camera position in world coordinates: -R^T * t.
Point3 camera_center(const Pose& pose);

// Geodesic rotation interpolation (unit-quaternion slerp) + linear translation.
// alpha in [0, 1]; alpha=0 yields a, alpha=1 yields b.
Pose interpolate_pose(const Pose& a, const Pose& b, double alpha);

// v / (image_height - 1); throws RowOutOfRange for v outside [0, image_height).
double row_capture_fraction(const Intrinsics& intr, double v);

Eigen::Matrix3d skew(const Point3& v);
// Rodrigues exponential; safe at omega = 0.
Eigen::Matrix3d so3_exp(const Point3& omega);
// Logarithm of a rotation matrix (angle * axis); inverse of so3_exp away from pi.
Point3 so3_log(const Eigen::Matrix3d& rotation);

// Frobenius-norm orthonormality check (R^T R = I within tol) and det(R) > 0.
bool is_valid_rotation(const Eigen::Matrix3d& rotation, double tol = 1e-9);

}  // namespace semvo
