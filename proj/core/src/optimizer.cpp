#include "semvo/optimizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "semvo/errors.hpp"
#include "semvo/logging.hpp"
#include "semvo/text_io.hpp"

namespace semvo {

namespace {
constexpr double kLambdaCap = 1e12;
constexpr double kLambdaFloor = 1e-12;
}  // namespace

template <int N>
NoiseModel<N> NoiseModel<N>::from_covariance(const Mat& covariance) {
  if ((covariance - covariance.transpose()).template lpNorm<Eigen::Infinity>() > 1e-12) {
    throw ConfigError("noise covariance must be symmetric");
  }
  Eigen::LLT<Mat> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("noise covariance must be positive definite");
  }
  NoiseModel<N> m;
  m.covariance_ = covariance;
  // covariance = L L^T  =>  L^-1 whitens: cov(L^-1 r) = I.
  m.sqrt_information_ = Mat(llt.matrixL()).inverse();
  return m;
}

template <int N>
NoiseModel<N> NoiseModel<N>::from_sigmas(const Vec& sigmas) {
  Mat cov = Mat::Zero();
  for (int i = 0; i < N; ++i) {
    if (!(sigmas[i] > 0.0)) throw ConfigError("noise sigma must be > 0");
    cov(i, i) = sigmas[i] * sigmas[i];
  }
  return from_covariance(cov);
}

template class NoiseModel<2>;
template class NoiseModel<3>;

RobustCost robust_cost(const RobustKernel& kernel, double s) {
  if (s < 0.0) throw Error("robust_cost: squared norm must be >= 0");
  switch (kernel.kind) {
    case RobustKernel::Kind::None:
      return RobustCost{s, 1.0};
    case RobustKernel::Kind::Huber: {
      const double k = kernel.parameter;
      if (s <= k * k) return RobustCost{s, 1.0};
      const double root = std::sqrt(s);
      return RobustCost{2.0 * k * root - k * k, k / root};
    }
  }
  throw Error("unhandled kernel kind");
}

void FactorGraph::add_keyframe(Keyframe kf) {
  const auto id = kf.id;
  if (!keyframes.emplace(id, std::move(kf)).second) {
    throw DuplicateFrameId("keyframe " + std::to_string(id) + " already present");
  }
}

void FactorGraph::add_map_point(MapPoint point) {
  const auto id = point.id;
  if (!map_points.emplace(id, std::move(point)).second) {
    throw DuplicateFrameId("map point " + std::to_string(id) + " already present");
  }
}

void FactorGraph::add_observation(std::int64_t keyframe_id, std::int64_t point_id,
                                  const Pixel& pixel) {
  auto kf = keyframes.find(keyframe_id);
  if (kf == keyframes.end()) {
    throw UnknownKeyframe("observation references keyframe " + std::to_string(keyframe_id));
  }
  if (map_points.find(point_id) == map_points.end()) {
    throw Error("observation references unknown map point " + std::to_string(point_id));
  }
  kf->second.observations.push_back(Observation{point_id, pixel});
}

void FactorGraph::add_anchor(std::int64_t keyframe_id, const Point3& translation) {
  auto kf = keyframes.find(keyframe_id);
  if (kf == keyframes.end()) {
    throw UnknownKeyframe("anchor references keyframe " + std::to_string(keyframe_id));
  }
  kf->second.anchor = SemanticAnchor{translation};
}

std::size_t FactorGraph::factor_count() const {
  std::size_t n = 0;
  for (const auto& [id, kf] : keyframes) {
    n += kf.observations.size();
    if (kf.anchor.has_value()) ++n;
  }
  return n;
}

bool FactorGraph::has_gauge() const {
  for (const auto& [id, kf] : keyframes) {
    if (kf.fixed || kf.anchor.has_value()) return true;
  }
  for (const auto& [id, p] : map_points) {
    if (p.fixed) return true;
  }
  return false;
}

Pixel reprojection_residual(const Pose& kf_pose, const Point3& point, const Pixel& observed,
                            const Intrinsics& intr) {
  return observed - project(intr, transform_point(kf_pose, point));
}

Point3 semantic_residual(const Point3& kf_translation, const Point3& anchor) {
  return anchor - kf_translation;
}

ReprojectionJacobians reprojection_jacobians(const Pose& kf_pose, const Point3& point,
                                             const Intrinsics& intr) {
  const Point3 pc = transform_point(kf_pose, point);
  if (pc.z() <= kDepthEpsilon) {
    throw NonPositiveDepth("jacobian requested for point behind camera");
  }
  const double z = pc.z();
  const double z2 = z * z;
  Eigen::Matrix<double, 2, 3> dpi;  // projection derivative wrt camera point
  dpi << intr.fx / z, 0.0, -intr.fx * pc.x() / z2,
         0.0, intr.fy / z, -intr.fy * pc.y() / z2;

  // Retraction pose * [exp(omega), nu] gives
  //   P_c(delta) = R exp(omega) p + R nu + t,
  // so dP_c/domega = -R [p]x and dP_c/dnu = dP_c/dp = R.
  const Eigen::Matrix3d& R = kf_pose.rotation;
  ReprojectionJacobians j;
  j.d_pose.leftCols<3>() = dpi * R * skew(point);   // -(dpi * (-R [p]x))
  j.d_pose.rightCols<3>() = -(dpi * R);
  j.d_point = -(dpi * R);
  return j;
}

Eigen::Matrix<double, 3, 6> semantic_residual_d_pose(const Pose& kf_pose) {
  Eigen::Matrix<double, 3, 6> j = Eigen::Matrix<double, 3, 6>::Zero();
  j.rightCols<3>() = -kf_pose.rotation;
  return j;
}

Pose pose_update(const Pose& pose, const Vector6& delta) {
  Pose out;
  out.rotation = pose.rotation * so3_exp(delta.head<3>());
  out.translation = pose.rotation * delta.tail<3>() + pose.translation;
  return out;
}

ObjectiveBreakdown evaluate_objective(const FactorGraph& graph) {
  if (!graph.has_gauge()) {
    throw GaugeUnconstrained("graph has no fixed variable and no anchor");
  }
  ObjectiveBreakdown out;
  for (const auto& [id, kf] : graph.keyframes) {
    for (const Observation& obs : kf.observations) {
      const MapPoint& mp = graph.map_points.at(obs.point_id);
      const Point3 pc = transform_point(kf.pose, mp.position);
      if (pc.z() <= kDepthEpsilon) {
        ++out.dropped_factors;
        continue;
      }
      const Pixel r = obs.pixel - project(graph.intrinsics, pc);
      const Eigen::Vector2d rw = graph.pixel_noise.whiten(r);
      out.value += robust_cost(graph.pixel_kernel, rw.squaredNorm()).cost;
    }
    if (kf.anchor.has_value()) {
      const Point3 r = semantic_residual(kf.pose.translation, kf.anchor->translation);
      const Point3 rw = graph.anchor_noise.whiten(r);
      out.value += robust_cost(graph.anchor_kernel, rw.squaredNorm()).cost;
    }
  }
  return out;
}

double objective(const FactorGraph& graph) { return evaluate_objective(graph).value; }

namespace {

// Variable layout for one LM solve: free keyframes first (6 each), then free
// map points (3 each), both in ascending id order.
struct VariableIndex {
  std::map<std::int64_t, int> pose_offset;
  std::map<std::int64_t, int> point_offset;
  int dimension = 0;
};

VariableIndex build_index(const FactorGraph& graph) {
  VariableIndex idx;
  for (const auto& [id, kf] : graph.keyframes) {
    if (kf.fixed) continue;
    // A keyframe with no factors has no gradient; leave it out of the system.
    if (kf.observations.empty() && !kf.anchor.has_value()) continue;
    idx.pose_offset[id] = idx.dimension;
    idx.dimension += 6;
  }
  std::map<std::int64_t, int> obs_count;
  for (const auto& [id, kf] : graph.keyframes) {
    for (const Observation& o : kf.observations) ++obs_count[o.point_id];
  }
  for (const auto& [id, p] : graph.map_points) {
    if (p.fixed) continue;
    if (obs_count.find(id) == obs_count.end()) continue;
    idx.point_offset[id] = idx.dimension;
    idx.dimension += 3;
  }
  return idx;
}

struct StateSnapshot {
  std::map<std::int64_t, Pose> poses;
  std::map<std::int64_t, Point3> points;
};

StateSnapshot snapshot(const FactorGraph& graph, const VariableIndex& idx) {
  StateSnapshot s;
  for (const auto& [id, off] : idx.pose_offset) s.poses[id] = graph.keyframes.at(id).pose;
  for (const auto& [id, off] : idx.point_offset) s.points[id] = graph.map_points.at(id).position;
  return s;
}

void restore(FactorGraph& graph, const StateSnapshot& s) {
  for (const auto& [id, pose] : s.poses) graph.keyframes.at(id).pose = pose;
  for (const auto& [id, pos] : s.points) graph.map_points.at(id).position = pos;
}

void apply_delta(FactorGraph& graph, const VariableIndex& idx, const Eigen::VectorXd& delta) {
  for (const auto& [id, off] : idx.pose_offset) {
    Keyframe& kf = graph.keyframes.at(id);
    kf.pose = pose_update(kf.pose, delta.segment<6>(off));
  }
  for (const auto& [id, off] : idx.point_offset) {
    graph.map_points.at(id).position += delta.segment<3>(off);
  }
}

// Gauss-Newton normal equations with IRLS robust weights at the current state.
void assemble_normal_equations(const FactorGraph& graph, const VariableIndex& idx,
                               Eigen::MatrixXd& H, Eigen::VectorXd& g) {
  H.setZero(idx.dimension, idx.dimension);
  g.setZero(idx.dimension);
  const Eigen::Matrix2d Wp = graph.pixel_noise.sqrt_information();
  const Eigen::Matrix3d Wa = graph.anchor_noise.sqrt_information();

  for (const auto& [kf_id, kf] : graph.keyframes) {
    const auto pose_it = idx.pose_offset.find(kf_id);
    const int pose_off = pose_it == idx.pose_offset.end() ? -1 : pose_it->second;

    for (const Observation& obs : kf.observations) {
      const MapPoint& mp = graph.map_points.at(obs.point_id);
      const auto point_it = idx.point_offset.find(obs.point_id);
      const int point_off = point_it == idx.point_offset.end() ? -1 : point_it->second;
      if (pose_off < 0 && point_off < 0) continue;

      const Point3 pc = transform_point(kf.pose, mp.position);
      if (pc.z() <= kDepthEpsilon) continue;  // dropped this iteration

      const Pixel r = obs.pixel - project(graph.intrinsics, pc);
      const Eigen::Vector2d rw = Wp * r;
      const double w = robust_cost(graph.pixel_kernel, rw.squaredNorm()).weight;
      const ReprojectionJacobians jac = reprojection_jacobians(kf.pose, mp.position,
                                                               graph.intrinsics);
      const Eigen::Matrix<double, 2, 6> Jp = Wp * jac.d_pose;
      const Eigen::Matrix<double, 2, 3> Jx = Wp * jac.d_point;

      if (pose_off >= 0) {
        H.block<6, 6>(pose_off, pose_off) += w * Jp.transpose() * Jp;
        g.segment<6>(pose_off) += w * Jp.transpose() * rw;
      }
      if (point_off >= 0) {
        H.block<3, 3>(point_off, point_off) += w * Jx.transpose() * Jx;
        g.segment<3>(point_off) += w * Jx.transpose() * rw;
      }
      if (pose_off >= 0 && point_off >= 0) {
        const Eigen::Matrix<double, 6, 3> off_diag = w * Jp.transpose() * Jx;
        H.block<6, 3>(pose_off, point_off) += off_diag;
        H.block<3, 6>(point_off, pose_off) += off_diag.transpose();
      }
    }

    if (kf.anchor.has_value() && pose_off >= 0) {
      const Point3 r = semantic_residual(kf.pose.translation, kf.anchor->translation);
      const Point3 rw = Wa * r;
      const double w = robust_cost(graph.anchor_kernel, rw.squaredNorm()).weight;
      const Eigen::Matrix<double, 3, 6> J = Wa * semantic_residual_d_pose(kf.pose);
      H.block<6, 6>(pose_off, pose_off) += w * J.transpose() * J;
      g.segment<6>(pose_off) += w * J.transpose() * rw;
    }
  }
}

OptResult finish(FactorGraph& graph, OptResult result) {
  const ObjectiveBreakdown finals = evaluate_objective(graph);
  result.final_objective = finals.value;
  result.dropped_factors = finals.dropped_factors;
  for (const auto& [id, kf] : graph.keyframes) result.poses[id] = kf.pose;
  for (const auto& [id, p] : graph.map_points) result.points[id] = p.position;
  return result;
}

}  // namespace

OptResult solve(FactorGraph& graph, const OptimizerConfig& config) {
  OptResult result;
  double current = evaluate_objective(graph).value;  // throws GaugeUnconstrained
  result.objective_history.push_back(current);

  if (!std::isfinite(current)) {
    result.termination = OptResult::Termination::Diverged;
    return finish(graph, std::move(result));
  }
  if (current == 0.0) {
    result.termination = OptResult::Termination::Converged;
    return finish(graph, std::move(result));
  }

  const VariableIndex idx = build_index(graph);
  if (idx.dimension == 0) {
    // Nothing to optimize (everything fixed); the state is what it is.
    result.termination = OptResult::Termination::Converged;
    return finish(graph, std::move(result));
  }

  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double lambda = config.initial_damping;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    assemble_normal_equations(graph, idx, H, g);
    // Marquardt scaling; momentarily unconstrained variables get unit
    // stiffness so their (gradient-free) delta is exactly zero.
    Eigen::VectorXd damping_diag = H.diagonal();
    for (int i = 0; i < damping_diag.size(); ++i) {
      if (!(damping_diag[i] > 0.0)) damping_diag[i] = 1.0;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd Hd = H;
      Hd.diagonal() += lambda * damping_diag;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
      Eigen::VectorXd delta;
      bool usable = ldlt.info() == Eigen::Success;
      if (usable) {
        delta = ldlt.solve(-g);
        usable = delta.allFinite();
      }
      if (!usable) {
        lambda *= config.damping_up_factor;
        if (lambda > kLambdaCap) {
          throw NumericalFailure("damped normal equations are not factorizable");
        }
        continue;
      }

      const StateSnapshot saved = snapshot(graph, idx);
      apply_delta(graph, idx, delta);
      const double candidate = evaluate_objective(graph).value;

      if (!std::isfinite(candidate)) {
        restore(graph, saved);
        lambda *= config.damping_up_factor;
        if (lambda > kLambdaCap) {
          result.termination = OptResult::Termination::Diverged;
          return finish(graph, std::move(result));
        }
        continue;
      }
      if (candidate < current) {
        accepted = true;
        ++result.iterations;
        const double relative = (current - candidate) / current;
        current = candidate;
        result.objective_history.push_back(current);
        lambda = std::max(lambda * config.damping_down_factor, kLambdaFloor);
        if (relative < config.relative_decrease_tol ||
            delta.norm() < config.parameter_tol || current == 0.0) {
          result.termination = OptResult::Termination::Converged;
          return finish(graph, std::move(result));
        }
      } else {
        restore(graph, saved);
        lambda *= config.damping_up_factor;
        if (lambda > kLambdaCap) {
          // No strictly-decreasing step exists: a (local) minimum.
          result.termination = OptResult::Termination::Converged;
          return finish(graph, std::move(result));
        }
      }
    }
  }

  result.termination = OptResult::Termination::MaxIterations;
  return finish(graph, std::move(result));
}

void apply_reinitialization(FactorGraph& graph, std::int64_t keyframe_id,
                            const Pose& anchor_pose) {
  auto it = graph.keyframes.find(keyframe_id);
  if (it == graph.keyframes.end()) {
    throw UnknownKeyframe("reinitialization target " + std::to_string(keyframe_id) +
                          " not in graph");
  }
  it->second.pose = anchor_pose;
  it->second.fixed = true;
  for (auto& [id, kf] : graph.keyframes) {
    if (id < keyframe_id) {
      kf.observations.clear();
      kf.anchor.reset();
    }
  }
}

// --- flat key = value setup file ---

namespace {

double parse_number(const std::string& key, const std::string& raw) {
  double v = 0.0;
  const char* begin = raw.data();
  const char* end = raw.data() + raw.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("optimizer setup: bad number for key '" + key + "': " + raw);
  }
  return v;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string optimizer_setup_to_text(const OptimizerSetup& s) {
  std::ostringstream out;
  out << "# optimizer setup (key = value)\n";
  out << "max_iterations = " << s.solver.max_iterations << "\n";
  out << "initial_damping = " << format_double(s.solver.initial_damping) << "\n";
  out << "damping_up_factor = " << format_double(s.solver.damping_up_factor) << "\n";
  out << "damping_down_factor = " << format_double(s.solver.damping_down_factor) << "\n";
  out << "relative_decrease_tol = " << format_double(s.solver.relative_decrease_tol) << "\n";
  out << "parameter_tol = " << format_double(s.solver.parameter_tol) << "\n";
  out << "pixel_kernel = " << (s.huber_pixel_k > 0.0 ? "huber" : "none") << "\n";
  out << "huber_pixel_k = " << format_double(std::max(s.huber_pixel_k, 0.0)) << "\n";
  out << "anchor_kernel = " << (s.huber_anchor_k > 0.0 ? "huber" : "none") << "\n";
  out << "huber_anchor_k = " << format_double(std::max(s.huber_anchor_k, 0.0)) << "\n";
  out << "pixel_sigma = " << format_double(s.pixel_sigma) << "\n";
  out << "anchor_sigma_x = " << format_double(s.anchor_sigma.x()) << "\n";
  out << "anchor_sigma_y = " << format_double(s.anchor_sigma.y()) << "\n";
  out << "anchor_sigma_z = " << format_double(s.anchor_sigma.z()) << "\n";
  out << "fx = " << format_double(s.intrinsics.fx) << "\n";
  out << "fy = " << format_double(s.intrinsics.fy) << "\n";
  out << "cx = " << format_double(s.intrinsics.cx) << "\n";
  out << "cy = " << format_double(s.intrinsics.cy) << "\n";
  out << "image_width = " << s.intrinsics.image_width << "\n";
  out << "image_height = " << s.intrinsics.image_height << "\n";
  out << "readout_time = " << format_double(s.intrinsics.readout_time) << "\n";
  return out.str();
}

OptimizerSetup parse_optimizer_setup(const std::string& text) {
  OptimizerSetup s;
  std::string pixel_kernel = "huber", anchor_kernel = "huber";
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("optimizer setup line " + std::to_string(line_no) +
                        " is not 'key = value': " + stripped);
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "max_iterations") s.solver.max_iterations = static_cast<int>(parse_number(key, value));
    else if (key == "initial_damping") s.solver.initial_damping = parse_number(key, value);
    else if (key == "damping_up_factor") s.solver.damping_up_factor = parse_number(key, value);
    else if (key == "damping_down_factor") s.solver.damping_down_factor = parse_number(key, value);
    else if (key == "relative_decrease_tol") s.solver.relative_decrease_tol = parse_number(key, value);
    else if (key == "parameter_tol") s.solver.parameter_tol = parse_number(key, value);
    else if (key == "pixel_kernel") pixel_kernel = value;
    else if (key == "huber_pixel_k") s.huber_pixel_k = parse_number(key, value);
    else if (key == "anchor_kernel") anchor_kernel = value;
    else if (key == "huber_anchor_k") s.huber_anchor_k = parse_number(key, value);
    else if (key == "pixel_sigma") s.pixel_sigma = parse_number(key, value);
    else if (key == "anchor_sigma_x") s.anchor_sigma.x() = parse_number(key, value);
    else if (key == "anchor_sigma_y") s.anchor_sigma.y() = parse_number(key, value);
    else if (key == "anchor_sigma_z") s.anchor_sigma.z() = parse_number(key, value);
    else if (key == "fx") s.intrinsics.fx = parse_number(key, value);
    else if (key == "fy") s.intrinsics.fy = parse_number(key, value);
    else if (key == "cx") s.intrinsics.cx = parse_number(key, value);
    else if (key == "cy") s.intrinsics.cy = parse_number(key, value);
    else if (key == "image_width") s.intrinsics.image_width = static_cast<int>(parse_number(key, value));
    else if (key == "image_height") s.intrinsics.image_height = static_cast<int>(parse_number(key, value));
    else if (key == "readout_time") s.intrinsics.readout_time = parse_number(key, value);
    else throw ConfigError("optimizer setup: unknown key '" + key + "'");

    if (key == "pixel_kernel" && value != "huber" && value != "none")
      throw ConfigError("optimizer setup: pixel_kernel must be huber or none");
    if (key == "anchor_kernel" && value != "huber" && value != "none")
      throw ConfigError("optimizer setup: anchor_kernel must be huber or none");
  }
  if (pixel_kernel == "none") s.huber_pixel_k = 0.0;
  if (anchor_kernel == "none") s.huber_anchor_k = 0.0;
  return s;
}

void save_optimizer_setup(const OptimizerSetup& setup, const std::string& path) {
  write_text_file(path, optimizer_setup_to_text(setup));
}

OptimizerSetup load_optimizer_setup(const std::string& path) {
  return parse_optimizer_setup(read_text_file(path));
}

// --- graph JSONL dump/load ---

namespace {

using nlohmann::json;

void append_pose(JsonWriter& w, const Pose& pose) {
  w.begin_object();
  w.key("rotation").begin_array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) w.value(pose.rotation(r, c));
  w.end_array();
  w.key("translation").begin_array();
  for (int i = 0; i < 3; ++i) w.value(pose.translation[i]);
  w.end_array();
  w.end_object();
}

Pose pose_from(const json& j) {
  Pose p;
  const auto& rot = j.at("rotation");
  const auto& tra = j.at("translation");
  if (rot.size() != 9 || tra.size() != 3) throw IoError("graph pose must have 9+3 floats");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot.at(3 * r + c).get<double>();
  for (int i = 0; i < 3; ++i) p.translation[i] = tra.at(i).get<double>();
  return p;
}

}  // namespace

std::string graph_to_jsonl(const FactorGraph& graph) {
  std::string out;
  for (const auto& [id, kf] : graph.keyframes) {
    JsonWriter w;
    w.begin_object();
    w.key("kind").value("keyframe");
    w.key("id").value(id);
    w.key("pose");
    append_pose(w, kf.pose);
    w.key("fixed").value(kf.fixed);
    w.key("observations").begin_array();
    for (const Observation& o : kf.observations) {
      w.begin_object();
      w.key("point_id").value(o.point_id);
      w.key("u").value(o.pixel.x());
      w.key("v").value(o.pixel.y());
      w.end_object();
    }
    w.end_array();
    w.end_object();
    out += w.str();
    out += '\n';
  }
  for (const auto& [id, p] : graph.map_points) {
    JsonWriter w;
    w.begin_object();
    w.key("kind").value("map_point");
    w.key("id").value(id);
    w.key("position").begin_array();
    for (int i = 0; i < 3; ++i) w.value(p.position[i]);
    w.end_array();
    w.key("fixed").value(p.fixed);
    w.end_object();
    out += w.str();
    out += '\n';
  }
  for (const auto& [id, kf] : graph.keyframes) {
    if (!kf.anchor.has_value()) continue;
    JsonWriter w;
    w.begin_object();
    w.key("kind").value("anchor");
    w.key("keyframe_id").value(id);
    w.key("translation").begin_array();
    for (int i = 0; i < 3; ++i) w.value(kf.anchor->translation[i]);
    w.end_array();
    w.end_object();
    out += w.str();
    out += '\n';
  }
  return out;
}

void save_graph(const FactorGraph& graph, const std::string& path) {
  write_text_file(path, graph_to_jsonl(graph));
}

FactorGraph graph_from_jsonl(const std::string& text, const OptimizerSetup& setup) {
  FactorGraph graph;
  graph.intrinsics = setup.intrinsics;
  graph.pixel_noise = NoiseModel<2>::from_sigmas(Eigen::Vector2d(setup.pixel_sigma,
                                                                 setup.pixel_sigma));
  graph.anchor_noise = NoiseModel<3>::from_sigmas(setup.anchor_sigma);
  graph.pixel_kernel = setup.huber_pixel_k > 0.0 ? RobustKernel::huber(setup.huber_pixel_k)
                                                 : RobustKernel::none();
  graph.anchor_kernel = setup.huber_anchor_k > 0.0 ? RobustKernel::huber(setup.huber_anchor_k)
                                                   : RobustKernel::none();

  struct PendingKeyframe {
    Keyframe kf;
    std::vector<Observation> observations;
  };
  std::vector<PendingKeyframe> keyframes;
  std::vector<MapPoint> points;
  std::vector<std::pair<std::int64_t, Point3>> anchors;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "keyframe") {
        PendingKeyframe pk;
        pk.kf.id = j.at("id").get<std::int64_t>();
        pk.kf.pose = pose_from(j.at("pose"));
        pk.kf.fixed = j.at("fixed").get<bool>();
        for (const auto& oj : j.at("observations")) {
          pk.observations.push_back(Observation{
              oj.at("point_id").get<std::int64_t>(),
              Pixel(oj.at("u").get<double>(), oj.at("v").get<double>())});
        }
        keyframes.push_back(std::move(pk));
      } else if (kind == "map_point") {
        MapPoint p;
        p.id = j.at("id").get<std::int64_t>();
        const auto& pos = j.at("position");
        for (int i = 0; i < 3; ++i) p.position[i] = pos.at(i).get<double>();
        p.fixed = j.at("fixed").get<bool>();
        points.push_back(p);
      } else if (kind == "anchor") {
        Point3 t;
        const auto& tj = j.at("translation");
        for (int i = 0; i < 3; ++i) t[i] = tj.at(i).get<double>();
        anchors.emplace_back(j.at("keyframe_id").get<std::int64_t>(), t);
      } else {
        throw IoError("graph line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw IoError("graph line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  for (MapPoint& p : points) graph.add_map_point(std::move(p));
  for (PendingKeyframe& pk : keyframes) {
    const std::int64_t id = pk.kf.id;
    graph.add_keyframe(std::move(pk.kf));
    for (const Observation& o : pk.observations) graph.add_observation(id, o.point_id, o.pixel);
  }
  for (const auto& [kf_id, t] : anchors) graph.add_anchor(kf_id, t);
  return graph;
}

FactorGraph load_graph(const std::string& path, const OptimizerSetup& setup) {
  return graph_from_jsonl(read_text_file(path), setup);
}

}  // namespace semvo
