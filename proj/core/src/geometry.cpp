#include "semvo/geometry.hpp"

#include <cmath>
#include <string>

#include "semvo/errors.hpp"

namespace semvo {

Point3 transform_point(const Pose& pose, const Point3& p_world) {
  return pose.rotation * p_world + pose.translation;
}

Pixel project(const Intrinsics& intr, const Point3& p_camera) {
  const double z = p_camera.z();
  if (z <= kDepthEpsilon) {
    throw NonPositiveDepth("projection depth " + std::to_string(z) + " <= epsilon");
  }
  return Pixel(intr.fx * p_camera.x() / z + intr.cx,
               intr.fy * p_camera.y() / z + intr.cy);
}

Point3 backproject(const Intrinsics& intr, const Pixel& pixel, double depth) {
  if (depth <= kDepthEpsilon) {
    throw NonPositiveDepth("backprojection depth " + std::to_string(depth) + " <= epsilon");
  }
  return Point3((pixel.x() - intr.cx) / intr.fx * depth,
                (pixel.y() - intr.cy) / intr.fy * depth,
                depth);
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose inverse(const Pose& pose) {
  Pose out;
  out.rotation = pose.rotation.transpose();
  out.translation = -(pose.rotation.transpose() * pose.translation);
  return out;
}

Point3 camera_center(const Pose& pose) {
  return -(pose.rotation.transpose() * pose.translation);
}

Pose interpolate_pose(const Pose& a, const Pose& b, double alpha) {
  Eigen::Quaterniond qa(a.rotation);
  Eigen::Quaterniond qb(b.rotation);
  Pose out;
  out.rotation = qa.slerp(alpha, qb).normalized().toRotationMatrix();
  out.translation = (1.0 - alpha) * a.translation + alpha * b.translation;
  return out;
}

double row_capture_fraction(const Intrinsics& intr, double v) {
  if (!(v >= 0.0) || v >= static_cast<double>(intr.image_height)) {
    throw RowOutOfRange("row " + std::to_string(v) + " outside [0, " +
                        std::to_string(intr.image_height) + ")");
  }
  if (intr.image_height <= 1) return 0.0;
  return v / static_cast<double>(intr.image_height - 1);
}

Eigen::Matrix3d skew(const Point3& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Point3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) {
    // Second-order expansion keeps exp exact to machine precision near zero.
    const Eigen::Matrix3d s = skew(omega);
    return Eigen::Matrix3d::Identity() + s + 0.5 * s * s;
  }
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

Point3 so3_log(const Eigen::Matrix3d& rotation) {
  Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

bool is_valid_rotation(const Eigen::Matrix3d& rotation, double tol) {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).norm() > tol) return false;
  return rotation.determinant() > 0.0;
}

}  // namespace semvo
