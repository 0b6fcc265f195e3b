#include "semvo/sim_world.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "semvo/errors.hpp"
#include "semvo/logging.hpp"
#include "semvo/text_io.hpp"

namespace semvo {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix3d rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

// Standard normal; sigma scaling happens at the call site so the stream is
// consumed identically no matter which sigmas are zero.
double draw_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

struct RouteState {
  double x, y, heading;
};

RouteState route_state(const WorldModel& world, double s) {
  const auto& route = world.route;
  if (route.empty()) throw Error("world has an empty route");
  const double last_s = route.back().s;
  const double clamped = std::clamp(s, 0.0, last_s);
  const std::size_t hi_count = route.size() - 1;
  std::size_t i = static_cast<std::size_t>(std::min(std::floor(clamped), static_cast<double>(hi_count)));
  if (i >= hi_count) i = hi_count - (hi_count > 0 ? 1 : 0);
  const RouteSample& a = route[i];
  const RouteSample& b = route[std::min(i + 1, hi_count)];
  const double span = b.s - a.s;
  const double f = span > 0.0 ? (clamped - a.s) / span : 0.0;
  return RouteState{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y),
                    a.heading + f * (b.heading - a.heading)};
}

Point3 lateral_offset_point(const RouteState& st, double lateral, double z) {
  // +lateral is to the left of the travel direction.
  return Point3(st.x - std::sin(st.heading) * lateral, st.y + std::cos(st.heading) * lateral, z);
}

}  // namespace

std::string scenario_name(Scenario s) {
  return s == Scenario::Urban ? "urban" : "highway";
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "urban") return Scenario::Urban;
  if (name == "highway") return Scenario::Highway;
  throw ConfigError("unknown scenario: " + name);
}

std::uint64_t substream_seed(std::uint64_t master_seed, const std::string& name) {
  // Independent engines per named stream, all derived from the single seed.
  std::uint64_t h = fnv1a_hash(name);
  h ^= master_seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

WorldModel generate_world(const WorldConfig& config, std::uint64_t seed) {
  if (!(config.route_length_m > 0.0)) throw ConfigError("route_length_m must be > 0");
  if (!(config.sign_spacing_m > 0.0)) throw ConfigError("sign_spacing_m must be > 0");
  if (!(config.lane_width_m > 0.0)) throw ConfigError("lane_width_m must be > 0");

  std::mt19937_64 rng(substream_seed(seed, "world"));
  WorldModel world;
  world.lane_width = config.lane_width_m;
  world.geo_rotation = rot_z(config.geo_yaw_deg * kPi / 180.0);
  world.geo_translation = config.geo_offset;

  const double length = config.route_length_m;
  const int samples = static_cast<int>(std::floor(length)) + 1;

  // --- route ---
  std::vector<double> intersections;
  if (config.scenario == Scenario::Highway) {
    // Gentle clothoid-like sway: smooth low-frequency heading modulation.
    const double a1 = draw_uniform(rng, 0.04, 0.08);
    const double a2 = draw_uniform(rng, 0.015, 0.035);
    const double l1 = draw_uniform(rng, 700.0, 1100.0);
    const double l2 = draw_uniform(rng, 280.0, 480.0);
    const double p1 = draw_uniform(rng, 0.0, 2.0 * kPi);
    const double p2 = draw_uniform(rng, 0.0, 2.0 * kPi);
    double x = 0.0, y = 0.0;
    double prev_heading = a1 * std::sin(p1) + a2 * std::sin(p2);
    for (int i = 0; i < samples; ++i) {
      const double s = static_cast<double>(i);
      const double heading = a1 * std::sin(2.0 * kPi * s / l1 + p1) +
                             a2 * std::sin(2.0 * kPi * s / l2 + p2);
      if (i > 0) {
        // Midpoint integration of the unit tangent.
        const double mid = 0.5 * (heading + prev_heading);
        x += std::cos(mid);
        y += std::sin(mid);
      }
      world.route.push_back(RouteSample{s, x, y, heading});
      prev_heading = heading;
    }
  } else {
    // City blocks: straight stretches joined by 90-degree arcs at
    // intersections (turn direction seeded, sometimes straight through).
    double x = 0.0, y = 0.0, heading = 0.0;
    double next_block_end = draw_uniform(rng, 180.0, 280.0);
    double turn_remaining = 0.0;
    double turn_rate = 0.0;
    const double turn_arc = 30.0;
    for (int i = 0; i < samples; ++i) {
      const double s = static_cast<double>(i);
      if (i > 0) {
        const double prev = heading;
        if (turn_remaining > 0.0) {
          heading += turn_rate;
          turn_remaining -= 1.0;
        }
        const double mid = 0.5 * (prev + heading);
        x += std::cos(mid);
        y += std::sin(mid);
      }
      world.route.push_back(RouteSample{s, x, y, heading});
      if (turn_remaining <= 0.0 && s >= next_block_end && s + turn_arc < length) {
        intersections.push_back(s);
        const int dir = static_cast<int>(std::floor(draw_uniform(rng, 0.0, 3.0))) - 1;
        if (dir != 0) {
          turn_remaining = turn_arc;
          turn_rate = dir * (kPi / 2.0) / turn_arc;
        }
        next_block_end = s + turn_arc + draw_uniform(rng, 180.0, 280.0);
      }
    }
  }

  // --- elements ---
  std::int64_t next_id = 1;
  const double w = config.lane_width_m;
  const double segment_len = 30.0;
  const double vertex_step = 3.0;

  const auto near_intersection = [&](double s) {
    for (double c : intersections) {
      if (std::abs(s - c) < 8.0) return true;
    }
    return false;
  };

  const auto add_polyline_chain = [&](Category cat, double lateral, double z) {
    for (double seg = 0.0; seg < length; seg += segment_len) {
      WorldElement e;
      e.element_id = next_id;
      e.category = cat;
      e.is_polyline = true;
      const double seg_end = std::min(seg + segment_len, length);
      for (double s = seg; s <= seg_end + 1e-9; s += vertex_step) {
        if (near_intersection(s)) continue;
        e.vertices.push_back(lateral_offset_point(route_state(world, s), lateral, z));
      }
      if (e.vertices.size() < 2) continue;
      e.anchor = e.vertices[e.vertices.size() / 2];
      world.elements.push_back(std::move(e));
      ++next_id;
    }
  };

  // Ego lane plus one adjacent lane to the left.
  add_polyline_chain(Category::LaneBoundary, -w / 2.0, 0.0);
  add_polyline_chain(Category::LaneBoundary, w / 2.0, 0.0);
  add_polyline_chain(Category::LaneBoundary, 3.0 * w / 2.0, 0.0);
  if (config.scenario == Scenario::Highway) {
    add_polyline_chain(Category::RoadsideBarrier, -(w / 2.0 + 2.5), 0.6);
    add_polyline_chain(Category::RoadsideBarrier, 3.0 * w / 2.0 + 2.5, 0.6);
  }

  // Signs at s = spacing, 2*spacing, ... <= length, sides alternating.
  const auto add_quad = [&](Category cat, const Point3& center, const Point3& u_axis,
                            const Point3& v_axis, double half_u, double half_v) {
    WorldElement e;
    e.element_id = next_id++;
    e.category = cat;
    e.is_polyline = false;
    e.vertices = {center - half_u * u_axis - half_v * v_axis,
                  center + half_u * u_axis - half_v * v_axis,
                  center + half_u * u_axis + half_v * v_axis,
                  center - half_u * u_axis + half_v * v_axis};
    e.anchor = center;
    world.elements.push_back(std::move(e));
  };

  int sign_index = 0;
  for (double s = config.sign_spacing_m; s <= length + 1e-9; s += config.sign_spacing_m) {
    const RouteState st = route_state(world, std::min(s, length));
    const bool right = (sign_index++ % 2) == 0;
    const double lateral = right ? -(w / 2.0 + 4.0) : (3.0 * w / 2.0 + 4.0);
    const Point3 center = lateral_offset_point(st, lateral, 3.0);
    const Point3 side(-std::sin(st.heading), std::cos(st.heading), 0.0);
    add_quad(Category::Sign, center, side, Point3::UnitZ(), 0.6, 0.6);
  }

  // Painted arrows mid-way between signs, flat in the ego lane.
  for (double s = config.sign_spacing_m / 2.0; s <= length + 1e-9; s += config.sign_spacing_m) {
    const RouteState st = route_state(world, std::min(s, length));
    const Point3 center = lateral_offset_point(st, 0.0, 0.0);
    const Point3 dir(std::cos(st.heading), std::sin(st.heading), 0.0);
    const Point3 side(-std::sin(st.heading), std::cos(st.heading), 0.0);
    add_quad(Category::Arrow, center, dir, side, 1.5, 0.5);
  }

  // Urban: perpendicular lane-boundary stubs across each intersection.
  for (double c : intersections) {
    const RouteState st = route_state(world, c);
    const Point3 n(-std::sin(st.heading), std::cos(st.heading), 0.0);
    for (double off : {-w / 2.0, w / 2.0}) {
      WorldElement e;
      e.element_id = next_id++;
      e.category = Category::LaneBoundary;
      e.is_polyline = true;
      const Point3 base = lateral_offset_point(st, 0.0, 0.0) +
                          off * Point3(std::cos(st.heading), std::sin(st.heading), 0.0);
      for (double tpos = -12.0; tpos <= 12.0 + 1e-9; tpos += vertex_step) {
        e.vertices.push_back(base + tpos * n);
      }
      e.anchor = e.vertices[e.vertices.size() / 2];
      world.elements.push_back(std::move(e));
    }
  }

  return world;
}

Pose make_camera_pose(const Point3& center, double heading, double pitch_deg) {
  // Vehicle frame: x forward, y left, z up. Camera frame: x right, y down,
  // z forward, pitched down by pitch_deg.
  Eigen::Matrix3d vehicle_to_camera;
  vehicle_to_camera << 0.0, -1.0, 0.0,
                       0.0, 0.0, -1.0,
                       1.0, 0.0, 0.0;
  const Eigen::Matrix3d pitch =
      Eigen::AngleAxisd(pitch_deg * kPi / 180.0, Eigen::Vector3d::UnitX()).toRotationMatrix();
  Pose pose;
  pose.rotation = pitch * vehicle_to_camera * rot_z(-heading);
  pose.translation = -(pose.rotation * center);
  return pose;
}

Pose drive_pose_at(const WorldModel& world, const DriveConfig& config, double s) {
  const RouteState st = route_state(world, s);
  return make_camera_pose(Point3(st.x, st.y, config.camera_height_m), st.heading,
                          config.camera_pitch_deg);
}

std::optional<Pixel> rolling_shutter_project(const Intrinsics& intr, const Pose& pose_start,
                                             const Pose& pose_end, const Point3& p_world) {
  const auto project_with = [&](const Pose& pose) -> std::optional<Pixel> {
    const Point3 pc = transform_point(pose, p_world);
    if (pc.z() <= kDepthEpsilon) return std::nullopt;
    return project(intr, pc);
  };

  auto px = project_with(pose_start);
  if (!px.has_value() || intr.readout_time == 0.0) return px;

  const double max_row = static_cast<double>(intr.image_height - 1);
  for (int iter = 0; iter < 3; ++iter) {
    const double row = std::clamp(px->y(), 0.0, max_row);
    const double alpha = row_capture_fraction(intr, row);
    px = project_with(interpolate_pose(pose_start, pose_end, alpha));
    if (!px.has_value()) return std::nullopt;
  }
  return px;
}

std::vector<SimFrame> simulate_drive(const WorldModel& world, const DriveConfig& config,
                                     std::uint64_t seed) {
  if (!(config.speed_mps > 0.0)) throw ConfigError("speed_mps must be > 0");
  if (!(config.frame_rate_hz > 0.0)) throw ConfigError("frame_rate_hz must be > 0");
  if (config.intrinsics.image_width <= 0 || config.intrinsics.image_height <= 0) {
    throw ConfigError("image dimensions must be positive");
  }

  const double length = world.route.empty() ? 0.0 : world.route.back().s;
  const int frame_count =
      static_cast<int>(std::floor(length / config.speed_mps * config.frame_rate_hz));
  const double dt = 1.0 / config.frame_rate_hz;
  const SensorNoiseConfig& noise = config.noise;

  std::mt19937_64 ins_rng(substream_seed(seed, "drive.ins"));
  std::mt19937_64 pixel_rng(substream_seed(seed, "drive.pixel"));
  std::mt19937_64 dropout_rng(substream_seed(seed, "drive.dropout"));

  const auto in_outage = [&](double t) {
    for (const auto& [a, b] : noise.gnss_outage_windows) {
      if (t >= a && t < b) return true;
    }
    return false;
  };

  const Intrinsics& intr = config.intrinsics;
  const double img_w = static_cast<double>(intr.image_width);
  const double img_h = static_cast<double>(intr.image_height);
  const double sqrt_dt = std::sqrt(dt);
  // GNSS pull when not in outage. Long relative to the drift-scaling test
  // horizon so accumulated error still follows the sqrt(T) random-walk law
  // over tens of seconds, yet short enough that outage windows (no pull at
  // all) remain distinguishable on a multi-minute drive.
  constexpr double kAidedTau = 30.0;

  Point3 drift = Point3::Zero();
  double heading_drift = 0.0;

  std::vector<SimFrame> frames;
  frames.reserve(frame_count);

  for (int k = 0; k < frame_count; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double s = config.speed_mps * t;

    if (k > 0) {
      const Point3 step(draw_normal(ins_rng), draw_normal(ins_rng), draw_normal(ins_rng));
      const double heading_step = draw_normal(ins_rng);
      if (!in_outage(t)) {
        const double decay = std::exp(-dt / kAidedTau);
        drift *= decay;
        heading_drift *= decay;
      }
      drift += noise.ins_bias_rw_sigma * sqrt_dt * step;
      heading_drift += noise.ins_heading_rw_sigma * sqrt_dt * heading_step;
    }

    SimFrame frame;
    frame.frame_id = k;
    frame.timestamp = t;
    frame.gt_pose = drive_pose_at(world, config, s);

    const RouteState st = route_state(world, s);
    const Point3 gt_center(st.x, st.y, config.camera_height_m);
    frame.ins_pose = make_camera_pose(gt_center + drift, st.heading + heading_drift,
                                      config.camera_pitch_deg);

    const double s_end = std::min(s + config.speed_mps * intr.readout_time, length);
    const Pose pose_end = drive_pose_at(world, config, s_end);
    const Point3 cam = camera_center(frame.gt_pose);

    for (const WorldElement& e : world.elements) {
      if ((e.anchor - cam).norm() > config.cull_range_m) continue;

      struct ProjectedVertex {
        int index;
        Pixel pixel;
        bool in_image;
      };
      std::vector<ProjectedVertex> projected;
      int visible = 0;
      for (std::size_t vi = 0; vi < e.vertices.size(); ++vi) {
        const auto px = rolling_shutter_project(intr, frame.gt_pose, pose_end, e.vertices[vi]);
        if (!px.has_value()) continue;
        const bool in_image = px->x() >= 0.0 && px->x() < img_w && px->y() >= 0.0 && px->y() < img_h;
        if (in_image) ++visible;
        projected.push_back(ProjectedVertex{static_cast<int>(vi), *px, in_image});
      }
      if (visible < 2) continue;

      double min_u = projected[0].pixel.x(), max_u = min_u;
      double min_v = projected[0].pixel.y(), max_v = min_v;
      for (const auto& pv : projected) {
        min_u = std::min(min_u, pv.pixel.x());
        max_u = std::max(max_u, pv.pixel.x());
        min_v = std::min(min_v, pv.pixel.y());
        max_v = std::max(max_v, pv.pixel.y());
      }
      const double x0 = std::clamp(min_u, 0.0, img_w);
      const double x1 = std::clamp(max_u, 0.0, img_w);
      const double y0 = std::clamp(min_v, 0.0, img_h);
      const double y1 = std::clamp(max_v, 0.0, img_h);
      if (!(x1 - x0 > 0.0) || !(y1 - y0 > 0.0)) continue;

      // One uniform draw per emittable detection, consumed whether or not
      // dropout is enabled, so streams stay aligned across noise settings.
      const double drop_roll = draw_uniform(dropout_rng, 0.0, 1.0);
      if (drop_roll < noise.detection_dropout) continue;

      const double sigma = noise.pixel_sigma;
      const double nx0 = x0 + sigma * draw_normal(pixel_rng);
      const double ny0 = y0 + sigma * draw_normal(pixel_rng);
      const double nx1 = x1 + sigma * draw_normal(pixel_rng);
      const double ny1 = y1 + sigma * draw_normal(pixel_rng);

      SimDetection d;
      d.det.category = e.category;
      d.det.x = std::max(0.0, nx0);
      d.det.y = std::max(0.0, ny0);
      d.det.w = std::max(0.1, nx1 - nx0);
      d.det.h = std::max(0.1, ny1 - ny0);
      d.det.track_id = e.element_id;
      d.element_id = e.element_id;

      if (e.is_polyline) {
        for (const auto& pv : projected) {
          if (!pv.in_image) continue;
          const Pixel noisy(pv.pixel.x() + sigma * draw_normal(pixel_rng),
                            pv.pixel.y() + sigma * draw_normal(pixel_rng));
          d.points.push_back(TrackedPoint{pv.index, noisy});
        }
      } else {
        const auto anchor_px = rolling_shutter_project(intr, frame.gt_pose, pose_end, e.anchor);
        if (anchor_px.has_value() && anchor_px->x() >= 0.0 && anchor_px->x() < img_w &&
            anchor_px->y() >= 0.0 && anchor_px->y() < img_h) {
          const Pixel noisy(anchor_px->x() + sigma * draw_normal(pixel_rng),
                            anchor_px->y() + sigma * draw_normal(pixel_rng));
          d.points.push_back(TrackedPoint{-1, noisy});
        }
      }

      frame.detections.push_back(std::move(d));
    }

    frames.push_back(std::move(frame));
  }
  return frames;
}

// --- dataset export / import ---

namespace {

void append_pose_json(JsonWriter& w, const Pose& pose) {
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

Pose pose_from_json(const json& j) {
  Pose p;
  const auto& rot = j.at("rotation");
  const auto& tra = j.at("translation");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot.at(3 * r + c).get<double>();
  for (int i = 0; i < 3; ++i) p.translation[i] = tra.at(i).get<double>();
  return p;
}

std::string trajectory_csv(const std::vector<SimFrame>& frames, bool ground_truth) {
  std::string out;
  for (const SimFrame& f : frames) {
    const Pose& pose = ground_truth ? f.gt_pose : f.ins_pose;
    out += std::to_string(f.frame_id);
    out += ',';
    out += format_double(f.timestamp);
    for (int i = 0; i < 3; ++i) {
      out += ',';
      out += format_double(pose.translation[i]);
    }
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        out += ',';
        out += format_double(pose.rotation(r, c));
      }
    out += '\n';
  }
  return out;
}

}  // namespace

void export_dataset(const std::vector<SimFrame>& frames, const WorldModel& world,
                    const std::string& dir) {
  std::string fj;
  for (const SimFrame& f : frames) {
    JsonWriter w;
    w.begin_object();
    w.key("frame_id").value(f.frame_id);
    w.key("timestamp").value(f.timestamp);
    w.key("gt_pose");
    append_pose_json(w, f.gt_pose);
    w.key("ins_pose");
    append_pose_json(w, f.ins_pose);
    w.key("detections").begin_array();
    for (const SimDetection& d : f.detections) {
      w.begin_object();
      w.key("category").value(category_name(d.det.category));
      w.key("x").value(d.det.x);
      w.key("y").value(d.det.y);
      w.key("w").value(d.det.w);
      w.key("h").value(d.det.h);
      if (d.det.track_id.has_value()) w.key("track_id").value(*d.det.track_id);
      else w.key("track_id").null();
      if (d.element_id.has_value()) w.key("element_id").value(*d.element_id);
      else w.key("element_id").null();
      w.key("points").begin_array();
      for (const TrackedPoint& p : d.points) {
        w.begin_object();
        w.key("i").value(static_cast<std::int64_t>(p.vertex));
        w.key("u").value(p.pixel.x());
        w.key("v").value(p.pixel.y());
        w.end_object();
      }
      w.end_array();
      w.end_object();
    }
    w.end_array();
    w.end_object();
    fj += w.str();
    fj += '\n';
  }
  write_text_file(dir + "/frames.jsonl", fj);

  std::string wj;
  for (const WorldElement& e : world.elements) {
    JsonWriter w;
    w.begin_object();
    w.key("element_id").value(e.element_id);
    w.key("category").value(category_name(e.category));
    w.key("kind").value(e.is_polyline ? "polyline" : "box");
    w.key("vertices").begin_array();
    for (const Point3& v : e.vertices) {
      w.begin_array();
      for (int i = 0; i < 3; ++i) w.value(v[i]);
      w.end_array();
    }
    w.end_array();
    w.key("anchor").begin_array();
    for (int i = 0; i < 3; ++i) w.value(e.anchor[i]);
    w.end_array();
    w.key("geo_vertices").begin_array();
    for (const Point3& v : e.vertices) {
      const Point3 g = world.to_geo(v);
      w.begin_array();
      for (int i = 0; i < 3; ++i) w.value(g[i]);
      w.end_array();
    }
    w.end_array();
    w.key("geo_anchor").begin_array();
    {
      const Point3 g = world.to_geo(e.anchor);
      for (int i = 0; i < 3; ++i) w.value(g[i]);
    }
    w.end_array();
    w.end_object();
    wj += w.str();
    wj += '\n';
  }
  write_text_file(dir + "/world.jsonl", wj);

  // Frame <-> geographic rigid map; kept next to the contracted files so a
  // dataset directory is self-describing.
  {
    JsonWriter w;
    w.begin_object();
    w.key("rotation").begin_array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w.value(world.geo_rotation(r, c));
    w.end_array();
    w.key("translation").begin_array();
    for (int i = 0; i < 3; ++i) w.value(world.geo_translation[i]);
    w.end_array();
    w.key("lane_width").value(world.lane_width);
    w.key("route_length").value(world.route.empty() ? 0.0 : world.route.back().s);
    w.end_object();
    write_text_file(dir + "/geo_frame.json", w.str() + "\n");
  }

  write_text_file(dir + "/gt_trajectory.csv", trajectory_csv(frames, true));
  write_text_file(dir + "/ins_trajectory.csv", trajectory_csv(frames, false));
}

Dataset import_dataset(const std::string& dir) {
  Dataset ds;

  try {
    const json g = json::parse(read_text_file(dir + "/geo_frame.json"));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) ds.world.geo_rotation(r, c) = g.at("rotation").at(3 * r + c).get<double>();
    for (int i = 0; i < 3; ++i) ds.world.geo_translation[i] = g.at("translation").at(i).get<double>();
    ds.world.lane_width = g.at("lane_width").get<double>();
  } catch (const json::exception& e) {
    throw IoError(dir + "/geo_frame.json: " + e.what());
  }

  for (const std::string& line : read_lines(dir + "/world.jsonl")) {
    try {
      const json j = json::parse(line);
      WorldElement e;
      e.element_id = j.at("element_id").get<std::int64_t>();
      e.category = category_from_name(j.at("category").get<std::string>());
      e.is_polyline = j.at("kind").get<std::string>() == "polyline";
      for (const auto& vj : j.at("vertices")) {
        e.vertices.push_back(Point3(vj.at(0).get<double>(), vj.at(1).get<double>(),
                                    vj.at(2).get<double>()));
      }
      const auto& aj = j.at("anchor");
      e.anchor = Point3(aj.at(0).get<double>(), aj.at(1).get<double>(), aj.at(2).get<double>());
      ds.world.elements.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw IoError(dir + "/world.jsonl: " + e.what());
    }
  }

  for (const std::string& line : read_lines(dir + "/frames.jsonl")) {
    try {
      const json j = json::parse(line);
      SimFrame f;
      f.frame_id = j.at("frame_id").get<std::int64_t>();
      f.timestamp = j.at("timestamp").get<double>();
      f.gt_pose = pose_from_json(j.at("gt_pose"));
      f.ins_pose = pose_from_json(j.at("ins_pose"));
      for (const auto& dj : j.at("detections")) {
        SimDetection d;
        d.det.category = category_from_name(dj.at("category").get<std::string>());
        d.det.x = dj.at("x").get<double>();
        d.det.y = dj.at("y").get<double>();
        d.det.w = dj.at("w").get<double>();
        d.det.h = dj.at("h").get<double>();
        if (!dj.at("track_id").is_null()) d.det.track_id = dj.at("track_id").get<std::int64_t>();
        if (!dj.at("element_id").is_null()) d.element_id = dj.at("element_id").get<std::int64_t>();
        for (const auto& pj : dj.at("points")) {
          d.points.push_back(TrackedPoint{static_cast<int>(pj.at("i").get<std::int64_t>()),
                                          Pixel(pj.at("u").get<double>(), pj.at("v").get<double>())});
        }
        f.detections.push_back(std::move(d));
      }
      ds.frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw IoError(dir + "/frames.jsonl: " + e.what());
    }
  }

  return ds;
}

}  // namespace semvo
