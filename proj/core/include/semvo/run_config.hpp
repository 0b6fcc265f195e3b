#pragma once

#include <cstdint>
#include <string>

#include "semvo/metrics.hpp"
#include "semvo/optimizer.hpp"
#include "semvo/sim_world.hpp"

namespace semvo {

// Two-stage matching thresholds (frame gate in meters, box-deviation gate in
// pixels) plus the reinitialization trigger and spatial-index cell size.
struct MatchingConfig {
  double delta_m = 15.0;
  double xi_px = 40.0;
  double reinit_threshold_m = 2.0;
  double grid_cell_m = 15.0;
};

// Solver settings plus the windowed-BA schedule used by localize.
struct PipelineOptimizerConfig {
  OptimizerConfig lm;
  double huber_pixel_k = 2.0;
  double huber_anchor_k = 1.0;
  double pixel_sigma_px = 1.0;
  Point3 anchor_sigma_m = Point3(0.5, 0.5, 1.0);
  int window_size = 15;
  int solve_cadence = 10;
  int keyframe_stride = 5;         // every N-th frame becomes a keyframe
  int polyline_vertex_stride = 5;  // tracked-vertex subsampling for map points
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::uint64_t world_seed = 1;  // separate so several drives can share a world
  WorldConfig world;
  DriveConfig drive;
  MatchingConfig matching;
  PipelineOptimizerConfig optimizer;
  int alignment_frame_count = 8;
  MatchConfig evaluation;
  std::string config_hash;  // FNV-1a of the source text

  // Strict parse: any key not in the schema is rejected naming the key.
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

}  // namespace semvo
