#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semvo/geometry.hpp"

namespace semvo {

// Measurement covariance with its whitener (inverse Cholesky factor) cached.
// Construction validates symmetry (1e-12) and positive definiteness.
template <int N>
class NoiseModel {
 public:
  using Mat = Eigen::Matrix<double, N, N>;
  using Vec = Eigen::Matrix<double, N, 1>;

  static NoiseModel from_covariance(const Mat& covariance);
  static NoiseModel from_sigmas(const Vec& sigmas);  // diagonal, sigmas > 0

  const Mat& covariance() const { return covariance_; }
  // W with W^T W = covariance^-1; whitened = W * residual.
  const Mat& sqrt_information() const { return sqrt_information_; }
  Vec whiten(const Vec& residual) const { return sqrt_information_ * residual; }

 private:
  NoiseModel() = default;
  Mat covariance_ = Mat::Identity();
  Mat sqrt_information_ = Mat::Identity();
};

struct RobustKernel {
  enum class Kind { None, Huber };
  Kind kind = Kind::None;
  double parameter = 1.0;  // Huber k, in whitened units

  static RobustKernel none() { return RobustKernel{Kind::None, 1.0}; }
  static RobustKernel huber(double k) { return RobustKernel{Kind::Huber, k}; }
};

// rho(s) and the IRLS weight drho/ds for squared whitened norm s.
// None: (s, 1). Huber: s <= k^2 -> (s, 1); s > k^2 -> (2 k sqrt(s) - k^2, k / sqrt(s)).
struct RobustCost {
  double cost = 0.0;
  double weight = 1.0;
};
RobustCost robust_cost(const RobustKernel& kernel, double s);

// One pixel observation of a map point from a keyframe.
struct Observation {
  std::int64_t point_id = 0;
  Pixel pixel = Pixel::Zero();
};

// Translation-only semantic anchor: pulls the keyframe translation toward the
// matched library frame translation. Anchors are data, not variables.
struct SemanticAnchor {
  Point3 translation = Point3::Zero();
};

struct Keyframe {
  std::int64_t id = 0;
  Pose pose;
  bool fixed = false;
  std::vector<Observation> observations;
  std::optional<SemanticAnchor> anchor;
};

struct MapPoint {
  std::int64_t id = 0;
  Point3 position = Point3::Zero();
  bool fixed = false;
};

// Bundle-adjustment problem: keyframe poses and map points tied by whitened,
// optionally robustified reprojection factors, plus translation anchors.
// Ordered maps keep every traversal deterministic.
struct FactorGraph {
  Intrinsics intrinsics;
  NoiseModel<2> pixel_noise = NoiseModel<2>::from_sigmas(Eigen::Vector2d(1.0, 1.0));
  NoiseModel<3> anchor_noise = NoiseModel<3>::from_sigmas(Point3(0.5, 0.5, 1.0));
  RobustKernel pixel_kernel = RobustKernel::huber(2.0);
  RobustKernel anchor_kernel = RobustKernel::huber(1.0);

  std::map<std::int64_t, Keyframe> keyframes;
  std::map<std::int64_t, MapPoint> map_points;

  void add_keyframe(Keyframe kf);           // rejects duplicate ids
  void add_map_point(MapPoint point);       // rejects duplicate ids
  // Validates both endpoints exist before storing the factor.
  void add_observation(std::int64_t keyframe_id, std::int64_t point_id, const Pixel& pixel);
  void add_anchor(std::int64_t keyframe_id, const Point3& translation);

  std::size_t factor_count() const;  // observations + anchors
  bool has_gauge() const;            // any fixed keyframe or any anchor
};

// z - project(R p + t); unwhitened. Throws NonPositiveDepth via project.
Pixel reprojection_residual(const Pose& kf_pose, const Point3& point, const Pixel& observed,
                            const Intrinsics& intr);

// anchor - kf_translation; unwhitened.
Point3 semantic_residual(const Point3& kf_translation, const Point3& anchor);

// Analytic Jacobians of the unwhitened reprojection residual with respect to
// the 6-vector pose delta (omega, nu) applied by pose_update, and the point.
struct ReprojectionJacobians {
  Eigen::Matrix<double, 2, 6> d_pose;
  Eigen::Matrix<double, 2, 3> d_point;
};
ReprojectionJacobians reprojection_jacobians(const Pose& kf_pose, const Point3& point,
                                             const Intrinsics& intr);
// d(semantic_residual)/d(pose delta): [0 | -R].
Eigen::Matrix<double, 3, 6> semantic_residual_d_pose(const Pose& kf_pose);

// Right-composition retraction: pose * [exp(omega), nu].
Pose pose_update(const Pose& pose, const Vector6& delta);

struct ObjectiveBreakdown {
  double value = 0.0;
  int dropped_factors = 0;  // reprojection factors behind the camera
};
// Sum of robustified whitened squared residuals, in keyframe order
// (observations in stored order, then the anchor). Factors whose point falls
// at or behind the camera plane contribute 0 and are counted as dropped.
// Throws GaugeUnconstrained when the graph has neither a fixed keyframe nor
// an anchor.
ObjectiveBreakdown evaluate_objective(const FactorGraph& graph);
double objective(const FactorGraph& graph);

struct OptimizerConfig {
  int max_iterations = 50;
  double initial_damping = 1e-4;
  double damping_up_factor = 10.0;
  double damping_down_factor = 0.5;
  double relative_decrease_tol = 1e-12;
  double parameter_tol = 1e-12;
};

struct OptResult {
  enum class Termination { Converged, MaxIterations, Diverged };
  double final_objective = 0.0;
  // Objective after each accepted step, preceded by the initial value;
  // non-increasing by construction.
  std::vector<double> objective_history;
  int iterations = 0;
  Termination termination = Termination::Converged;
  int dropped_factors = 0;
  std::map<std::int64_t, Pose> poses;
  std::map<std::int64_t, Point3> points;
};

// Robust Levenberg-Marquardt with IRLS weights on the normal equations
// (dense Cholesky). Accepts a step only if the true objective strictly
// decreases; damping x= up_factor on rejection, x= down_factor on acceptance.
// Mutates the graph in place and copies the final state into the result.
OptResult solve(FactorGraph& graph, const OptimizerConfig& config);

// Snap the keyframe to anchor_pose, fix it, and drop every factor attached to
// keyframes that precede it (observations and anchors); the remaining factor
// set lives entirely on the suffix. Throws UnknownKeyframe.
void apply_reinitialization(FactorGraph& graph, std::int64_t keyframe_id,
                            const Pose& anchor_pose);

// --- external interfaces ---

// Solver + noise + kernel + camera parameters as a flat "key = value" file.
struct OptimizerSetup {
  OptimizerConfig solver;
  double huber_pixel_k = 2.0;
  double huber_anchor_k = 1.0;
  double pixel_sigma = 1.0;                      // px, isotropic
  Point3 anchor_sigma = Point3(0.5, 0.5, 1.0);   // m, diagonal
  Intrinsics intrinsics;
};
std::string optimizer_setup_to_text(const OptimizerSetup& setup);
OptimizerSetup parse_optimizer_setup(const std::string& text);
void save_optimizer_setup(const OptimizerSetup& setup, const std::string& path);
OptimizerSetup load_optimizer_setup(const std::string& path);

// Graph state as JSON Lines with record kinds keyframe | map_point | anchor;
// floats carry 17 significant digits and round-trip bit-exactly. Camera and
// noise parameters travel in the flat setup file, not the dump.
std::string graph_to_jsonl(const FactorGraph& graph);
void save_graph(const FactorGraph& graph, const std::string& path);
FactorGraph load_graph(const std::string& path, const OptimizerSetup& setup);
FactorGraph graph_from_jsonl(const std::string& text, const OptimizerSetup& setup);

}  // namespace semvo
