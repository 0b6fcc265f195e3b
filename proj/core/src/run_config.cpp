#include "semvo/run_config.hpp"

#include <initializer_list>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "semvo/errors.hpp"
#include "semvo/text_io.hpp"

namespace semvo {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (ok.count(key) == 0) {
      throw ConfigError("unknown config key: " + (section.empty() ? key : section + "." + key));
    }
  }
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  return j.at(key).get<int>();
}

Point3 get_vec3(const json& j, const char* key, const Point3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw ConfigError(std::string(key) + " must be [x, y, z]");
  return Point3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
}

void parse_world(const json& j, RunConfig& cfg) {
  check_keys(j, "world",
             {"scenario", "route_length_m", "sign_spacing_m", "lane_width_m", "geo_yaw_deg",
              "geo_offset", "world_seed"});
  if (j.contains("scenario")) cfg.world.scenario = scenario_from_name(j.at("scenario").get<std::string>());
  cfg.world.route_length_m = get_num(j, "route_length_m", cfg.world.route_length_m);
  cfg.world.sign_spacing_m = get_num(j, "sign_spacing_m", cfg.world.sign_spacing_m);
  cfg.world.lane_width_m = get_num(j, "lane_width_m", cfg.world.lane_width_m);
  cfg.world.geo_yaw_deg = get_num(j, "geo_yaw_deg", cfg.world.geo_yaw_deg);
  cfg.world.geo_offset = get_vec3(j, "geo_offset", cfg.world.geo_offset);
  if (j.contains("world_seed")) cfg.world_seed = j.at("world_seed").get<std::uint64_t>();
}

void parse_camera(const json& j, Intrinsics& intr) {
  check_keys(j, "drive.camera",
             {"fx", "fy", "cx", "cy", "image_width", "image_height", "readout_time"});
  intr.fx = get_num(j, "fx", intr.fx);
  intr.fy = get_num(j, "fy", intr.fy);
  intr.cx = get_num(j, "cx", intr.cx);
  intr.cy = get_num(j, "cy", intr.cy);
  intr.image_width = get_int(j, "image_width", intr.image_width);
  intr.image_height = get_int(j, "image_height", intr.image_height);
  intr.readout_time = get_num(j, "readout_time", intr.readout_time);
  if (intr.fx <= 0.0 || intr.fy <= 0.0) throw ConfigError("focal lengths must be > 0");
  if (intr.readout_time < 0.0) throw ConfigError("readout_time must be >= 0");
  if (intr.cx < 0.0 || intr.cx >= intr.image_width || intr.cy < 0.0 ||
      intr.cy >= intr.image_height) {
    throw ConfigError("principal point must lie inside the image");
  }
}

void parse_drive(const json& j, RunConfig& cfg) {
  check_keys(j, "drive",
             {"speed_mps", "frame_rate_hz", "camera_height_m", "camera_pitch_deg",
              "cull_range_m", "camera"});
  cfg.drive.speed_mps = get_num(j, "speed_mps", cfg.drive.speed_mps);
  cfg.drive.frame_rate_hz = get_num(j, "frame_rate_hz", cfg.drive.frame_rate_hz);
  cfg.drive.camera_height_m = get_num(j, "camera_height_m", cfg.drive.camera_height_m);
  cfg.drive.camera_pitch_deg = get_num(j, "camera_pitch_deg", cfg.drive.camera_pitch_deg);
  cfg.drive.cull_range_m = get_num(j, "cull_range_m", cfg.drive.cull_range_m);
  if (j.contains("camera")) parse_camera(j.at("camera"), cfg.drive.intrinsics);
}

void parse_noise(const json& j, SensorNoiseConfig& noise) {
  check_keys(j, "noise",
             {"ins_bias_rw_sigma", "ins_heading_rw_sigma", "pixel_sigma", "detection_dropout",
              "gnss_outage_windows"});
  noise.ins_bias_rw_sigma = get_num(j, "ins_bias_rw_sigma", noise.ins_bias_rw_sigma);
  noise.ins_heading_rw_sigma = get_num(j, "ins_heading_rw_sigma", noise.ins_heading_rw_sigma);
  noise.pixel_sigma = get_num(j, "pixel_sigma", noise.pixel_sigma);
  noise.detection_dropout = get_num(j, "detection_dropout", noise.detection_dropout);
  if (noise.detection_dropout < 0.0 || noise.detection_dropout > 1.0) {
    throw ConfigError("detection_dropout must be in [0, 1]");
  }
  if (j.contains("gnss_outage_windows")) {
    noise.gnss_outage_windows.clear();
    for (const auto& w : j.at("gnss_outage_windows")) {
      if (!w.is_array() || w.size() != 2) {
        throw ConfigError("gnss_outage_windows entries must be [start_s, end_s]");
      }
      const double a = w.at(0).get<double>(), b = w.at(1).get<double>();
      if (!(b > a)) throw ConfigError("gnss outage window must have end > start");
      noise.gnss_outage_windows.emplace_back(a, b);
    }
  }
}

void parse_matching(const json& j, MatchingConfig& m) {
  check_keys(j, "matching", {"delta_m", "xi_px", "reinit_threshold_m", "grid_cell_m"});
  m.delta_m = get_num(j, "delta_m", m.delta_m);
  m.xi_px = get_num(j, "xi_px", m.xi_px);
  m.reinit_threshold_m = get_num(j, "reinit_threshold_m", m.reinit_threshold_m);
  m.grid_cell_m = get_num(j, "grid_cell_m", m.grid_cell_m);
  if (m.grid_cell_m <= 0.0) throw ConfigError("grid_cell_m must be > 0");
}

void parse_optimizer(const json& j, PipelineOptimizerConfig& o) {
  check_keys(j, "optimizer",
             {"max_iterations", "initial_damping", "damping_up_factor", "damping_down_factor",
              "relative_decrease_tol", "parameter_tol", "huber_pixel_k", "huber_anchor_k",
              "pixel_sigma_px", "anchor_sigma_m", "window_size", "solve_cadence",
              "keyframe_stride", "polyline_vertex_stride"});
  o.lm.max_iterations = get_int(j, "max_iterations", o.lm.max_iterations);
  o.lm.initial_damping = get_num(j, "initial_damping", o.lm.initial_damping);
  o.lm.damping_up_factor = get_num(j, "damping_up_factor", o.lm.damping_up_factor);
  o.lm.damping_down_factor = get_num(j, "damping_down_factor", o.lm.damping_down_factor);
  o.lm.relative_decrease_tol = get_num(j, "relative_decrease_tol", o.lm.relative_decrease_tol);
  o.lm.parameter_tol = get_num(j, "parameter_tol", o.lm.parameter_tol);
  o.huber_pixel_k = get_num(j, "huber_pixel_k", o.huber_pixel_k);
  o.huber_anchor_k = get_num(j, "huber_anchor_k", o.huber_anchor_k);
  o.pixel_sigma_px = get_num(j, "pixel_sigma_px", o.pixel_sigma_px);
  o.anchor_sigma_m = get_vec3(j, "anchor_sigma_m", o.anchor_sigma_m);
  o.window_size = get_int(j, "window_size", o.window_size);
  o.solve_cadence = get_int(j, "solve_cadence", o.solve_cadence);
  o.keyframe_stride = get_int(j, "keyframe_stride", o.keyframe_stride);
  o.polyline_vertex_stride = get_int(j, "polyline_vertex_stride", o.polyline_vertex_stride);
  if (o.lm.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (o.pixel_sigma_px <= 0.0) throw ConfigError("pixel_sigma_px must be > 0");
  if (o.anchor_sigma_m.minCoeff() <= 0.0) throw ConfigError("anchor_sigma_m must be > 0");
  if (o.window_size < 2) throw ConfigError("window_size must be >= 2");
  if (o.solve_cadence < 1) throw ConfigError("solve_cadence must be >= 1");
  if (o.keyframe_stride < 1) throw ConfigError("keyframe_stride must be >= 1");
  if (o.polyline_vertex_stride < 1) throw ConfigError("polyline_vertex_stride must be >= 1");
}

void parse_alignment(const json& j, RunConfig& cfg) {
  check_keys(j, "alignment", {"frame_count"});
  cfg.alignment_frame_count = get_int(j, "frame_count", cfg.alignment_frame_count);
  if (cfg.alignment_frame_count < 3) throw ConfigError("alignment.frame_count must be >= 3");
}

void parse_evaluation(const json& j, MatchConfig& e) {
  check_keys(j, "evaluation", {"point_radius_m", "polyline_radius_m", "mre_pair_radius_m"});
  e.point_radius_m = get_num(j, "point_radius_m", e.point_radius_m);
  e.polyline_radius_m = get_num(j, "polyline_radius_m", e.polyline_radius_m);
  e.mre_pair_radius_m = get_num(j, "mre_pair_radius_m", e.mre_pair_radius_m);
  if (e.point_radius_m <= 0.0 || e.polyline_radius_m <= 0.0 || e.mre_pair_radius_m <= 0.0) {
    throw ConfigError("evaluation radii must be > 0");
  }
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  RunConfig cfg;
  cfg.config_hash = to_hex(fnv1a_hash(text));
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j, "",
             {"seed", "world", "drive", "noise", "matching", "optimizer", "alignment",
              "evaluation"});
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("world")) parse_world(j.at("world"), cfg);
    if (j.contains("drive")) parse_drive(j.at("drive"), cfg);
    if (j.contains("noise")) parse_noise(j.at("noise"), cfg.drive.noise);
    if (j.contains("matching")) parse_matching(j.at("matching"), cfg.matching);
    if (j.contains("optimizer")) parse_optimizer(j.at("optimizer"), cfg.optimizer);
    if (j.contains("alignment")) parse_alignment(j.at("alignment"), cfg);
    if (j.contains("evaluation")) parse_evaluation(j.at("evaluation"), cfg.evaluation);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError&) {
    throw ConfigError("config file not found or unreadable: " + path);
  }
  return from_json_text(text);
}

}  // namespace semvo
