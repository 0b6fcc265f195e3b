#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semvo/geometry.hpp"
#include "semvo/semantic_library.hpp"

namespace semvo {

enum class Scenario { Urban, Highway };
std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

// One road element. Box elements (signs, arrows) are planar quads whose
// anchor is the quad center; polyline elements (lane boundaries, barriers)
// carry their sampled vertices and use the mid vertex as anchor.
struct WorldElement {
  std::int64_t element_id = 0;
  Category category = Category::Sign;
  bool is_polyline = false;
  std::vector<Point3> vertices;
  Point3 anchor = Point3::Zero();
};

struct RouteSample {
  double s = 0.0;        // arc length, meters
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, world yaw of the travel direction
};

struct WorldConfig {
  double route_length_m = 1000.0;
  Scenario scenario = Scenario::Highway;
  double sign_spacing_m = 100.0;
  double lane_width_m = 3.5;
  // Fixed rigid world -> ENU map defining the geographic frame of the dataset.
  double geo_yaw_deg = 25.0;
  Point3 geo_offset = Point3(4000.0, -2500.0, 12.0);
};

struct WorldModel {
  std::vector<WorldElement> elements;
  std::vector<RouteSample> route;  // sampled every meter from 0 to route length
  double lane_width = 3.5;
  Eigen::Matrix3d geo_rotation = Eigen::Matrix3d::Identity();
  Point3 geo_translation = Point3::Zero();

  Point3 to_geo(const Point3& p_world) const { return geo_rotation * p_world + geo_translation; }
};

struct SensorNoiseConfig {
  double ins_bias_rw_sigma = 0.05;      // m / sqrt(s), translation random walk
  double ins_heading_rw_sigma = 0.002;  // rad / sqrt(s)
  double pixel_sigma = 0.0;             // px, boxes and tracked points
  double detection_dropout = 0.0;       // probability a detection is dropped
  std::vector<std::pair<double, double>> gnss_outage_windows;  // [start, end) seconds
};

struct DriveConfig {
  double speed_mps = 16.7;
  double frame_rate_hz = 30.0;
  Intrinsics intrinsics{1920.0, 1920.0, 1920.0, 1080.0, 3840, 2160, 0.030};
  double camera_height_m = 1.6;
  double camera_pitch_deg = 5.0;
  double cull_range_m = 120.0;
  SensorNoiseConfig noise;
};

// A tracked point inside a detection: the exact (noise-perturbed) projection
// of one element vertex (index >= 0) or of the element anchor (index == -1).
struct TrackedPoint {
  int vertex = -1;
  Pixel pixel = Pixel::Zero();
};

struct SimDetection {
  SemanticDetection det;
  std::optional<std::int64_t> element_id;  // ground-truth annotation, strippable
  std::vector<TrackedPoint> points;
};

struct SimFrame {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  Pose gt_pose;
  Pose ins_pose;
  std::vector<SimDetection> detections;
};

struct Dataset {
  WorldModel world;
  std::vector<SimFrame> frames;
};

// Deterministic for a given (config, seed); all randomness flows through
// named substreams derived from the seed.
WorldModel generate_world(const WorldConfig& config, std::uint64_t seed);

// World -> camera pose for a camera at `center` looking along `heading`
// (world yaw) with a downward pitch. Camera axes: x right, y down, z forward.
Pose make_camera_pose(const Point3& center, double heading, double pitch_deg);

// Ground-truth camera pose of the drive at arc length s.
Pose drive_pose_at(const WorldModel& world, const DriveConfig& config, double s);

// Rolling-shutter projection: the capture pose of a row is interpolated
// between the frame-start and frame-end (readout) poses at the row's capture
// fraction, resolved by a fixed 3-step fixed-point iteration. nullopt when
// the point is at or behind the camera plane. Identical to a plain projection
// when readout_time is 0 or the poses coincide.
std::optional<Pixel> rolling_shutter_project(const Intrinsics& intr, const Pose& pose_start,
                                             const Pose& pose_end, const Point3& p_world);

// Frame count is floor(route_length / speed * frame_rate). ins_pose equals
// gt_pose composed with a seeded random-walk drift that grows unconstrained
// inside GNSS outage windows and decays slowly (tau = 30 s) toward zero
// outside them, preserving the sqrt(T) error growth over tens of seconds.
std::vector<SimFrame> simulate_drive(const WorldModel& world, const DriveConfig& config,
                                     std::uint64_t seed);

// frames.jsonl, world.jsonl, gt_trajectory.csv, ins_trajectory.csv.
// CSV rows: frame_id,timestamp,tx,ty,tz,r00,...,r22 (row-major, no header).
void export_dataset(const std::vector<SimFrame>& frames, const WorldModel& world,
                    const std::string& dir);
Dataset import_dataset(const std::string& dir);

// Substream derivation: one master seed, one independent engine per name.
std::uint64_t substream_seed(std::uint64_t master_seed, const std::string& name);

}  // namespace semvo
