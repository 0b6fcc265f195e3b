#pragma once

#include <string>
#include <vector>

#include "semvo/geometry.hpp"
#include "semvo/semantic_library.hpp"

namespace semvo {

// One (world point, geographic point) pair feeding the rigid fit.
struct Correspondence {
  Point3 world = Point3::Zero();
  Point3 geo = Point3::Zero();
};

// Rigid world -> ENU map: geo = rotation * p + translation.
struct GeoTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Point3 translation = Point3::Zero();
  // Per-component residual RMS over the solved pairs:
  // sqrt(sum ||d_i - (R p_i + t)||^2 / (3 n)).
  double rms_residual = 0.0;
  int pair_count = 0;
};

Point3 to_geographic(const GeoTransform& tf, const Point3& p_world);

// Least-squares rigid fit min sum ||d_i - (R p_i + t)||^2 (no scale), solved
// by SVD of the centered cross-covariance with determinant sign correction.
// Requires >= 3 pairs (InsufficientPoints) that are not collinear/coincident:
// the second-largest singular value of the centered world covariance must
// exceed 1e-9 x the largest (DegenerateConfiguration).
GeoTransform solve_rigid_alignment(const std::vector<Correspondence>& pairs);

// The n library frames nearest to o_w by translation distance (ties by
// frame_id), paired as (frame translation, frame geo). n >= 3; throws
// InsufficientPoints when the library holds fewer than n frames.
std::vector<Correspondence> select_nearest_frames(const BenchmarkLibrary& lib,
                                                  const Point3& o_w, int n);

// Single JSON object: rotation (9, row-major), translation (3), rms, n.
std::string alignment_report_json(const GeoTransform& tf);
void save_alignment_report(const GeoTransform& tf, const std::string& path);

}  // namespace semvo
