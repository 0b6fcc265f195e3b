#include "semvo/geo_alignment.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "semvo/errors.hpp"
#include "semvo/text_io.hpp"

namespace semvo {

Point3 to_geographic(const GeoTransform& tf, const Point3& p_world) {
  return tf.rotation * p_world + tf.translation;
}

GeoTransform solve_rigid_alignment(const std::vector<Correspondence>& pairs) {
  const int n = static_cast<int>(pairs.size());
  if (n < 3) throw InsufficientPoints("rigid alignment needs >= 3 pairs, got " + std::to_string(n));

  Point3 p_mean = Point3::Zero(), d_mean = Point3::Zero();
  for (const Correspondence& c : pairs) {
    p_mean += c.world;
    d_mean += c.geo;
  }
  p_mean /= n;
  d_mean /= n;

  // Cross-covariance between centered geo and world point sets.
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d world_cov = Eigen::Matrix3d::Zero();
  for (const Correspondence& c : pairs) {
    const Point3 p = c.world - p_mean;
    const Point3 d = c.geo - d_mean;
    cross += d * p.transpose();
    world_cov += p * p.transpose();
  }
  cross /= n;
  world_cov /= n;

  // Collinear or coincident world points leave a rotation about the common
  // line unconstrained. Three non-collinear points are always coplanar, so
  // the conditioning test is on the second singular value, with the familiar
  // determinant sign correction covering the rank-2 (planar) case.
  Eigen::JacobiSVD<Eigen::Matrix3d> cov_svd(world_cov);
  const Eigen::Vector3d sv = cov_svd.singularValues();
  if (!(sv(1) > 1e-9 * sv(0))) {
    throw DegenerateConfiguration("alignment points are collinear or coincident; widen the frame search");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2, 2) = -1.0;

  GeoTransform tf;
  tf.rotation = svd.matrixU() * s * svd.matrixV().transpose();
  tf.translation = d_mean - tf.rotation * p_mean;
  tf.pair_count = n;

  double sq_sum = 0.0;
  for (const Correspondence& c : pairs) {
    sq_sum += (c.geo - (tf.rotation * c.world + tf.translation)).squaredNorm();
  }
  tf.rms_residual = std::sqrt(sq_sum / (3.0 * n));
  return tf;
}

std::vector<Correspondence> select_nearest_frames(const BenchmarkLibrary& lib,
                                                  const Point3& o_w, int n) {
  if (n < 3) throw ConfigError("select_nearest_frames: n must be >= 3");
  if (lib.size() < static_cast<std::size_t>(n)) {
    throw InsufficientPoints("library holds " + std::to_string(lib.size()) +
                             " frames, need " + std::to_string(n));
  }
  struct Ranked {
    double dist;
    std::int64_t id;
    const ElementFrame* frame;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(lib.size());
  for (const ElementFrame& f : lib.frames()) {
    ranked.push_back(Ranked{(f.pose.translation - o_w).norm(), f.frame_id, &f});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
  });
  std::vector<Correspondence> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(Correspondence{ranked[i].frame->pose.translation, ranked[i].frame->geo});
  }
  return out;
}

std::string alignment_report_json(const GeoTransform& tf) {
  JsonWriter w;
  w.begin_object();
  w.key("rotation").begin_array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) w.value(tf.rotation(r, c));
  w.end_array();
  w.key("translation").begin_array();
  for (int i = 0; i < 3; ++i) w.value(tf.translation[i]);
  w.end_array();
  w.key("rms").value(tf.rms_residual);
  w.key("n").value(static_cast<std::int64_t>(tf.pair_count));
  w.end_object();
  return w.str();
}

void save_alignment_report(const GeoTransform& tf, const std::string& path) {
  write_text_file(path, alignment_report_json(tf) + "\n");
}

}  // namespace semvo
