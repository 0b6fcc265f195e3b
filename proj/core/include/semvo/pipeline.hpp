#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semvo/run_config.hpp"

namespace semvo {

// One row of the headerless trajectory CSVs:
// frame_id,timestamp,tx,ty,tz,r00,...,r22.
struct TrajectoryRow {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  Pose pose;
};
std::vector<TrajectoryRow> load_trajectory_csv(const std::string& path);

// Generate a dataset (world + drive) into out_dir and write manifest.json
// with the config hash and the seeds.
void cmd_simulate(const RunConfig& config, const std::string& out_dir);

// Assemble the benchmark library from a mapping-pass dataset: frames with at
// least one detection, posed by their INS pose, geo-stamped from ground
// truth. Writes the library JSONL to out_path.
void cmd_build_library(const std::string& dataset_dir, const std::string& out_path,
                       const RunConfig& config);

struct LocalizeOptions {
  bool strip_ids = false;  // omit element ids from reported_elements.jsonl
};

struct LocalizeSummary {
  int frame_count = 0;
  int keyframe_count = 0;
  int solve_count = 0;
  int anchor_count = 0;
  int reinit_count = 0;
  int reported_elements = 0;
};

// Per-frame INS propagation + two-stage matching + drift decisions + windowed
// robust BA with semantic anchors. Writes into out_dir:
//   corrected_trajectory.csv   same schema as gt/ins CSVs
//   geo_trajectory.csv         frame_id,timestamp,gx,gy,gz (per-frame rigid
//                              alignment over the nearest library frames)
//   reported_elements.jsonl    optimized map elements in ENU
//   reported_elements_before.jsonl  same elements triangulated from raw INS
//   decisions.jsonl            per-frame match/drift log
//   alignment.json             global world->ENU fit over the whole library
LocalizeSummary cmd_localize(const std::string& dataset_dir, const std::string& library_path,
                             const RunConfig& config, const std::string& out_dir,
                             const LocalizeOptions& options = {});

// Evaluate reported elements (and trajectories) against dataset ground truth.
// Writes report_after.json + report_table.txt; with before_after also
// report_before.json, and the table carries both method rows.
void cmd_evaluate(const std::string& dataset_dir, const std::string& localize_dir,
                  const RunConfig& config, const std::string& out_dir, bool before_after);

// Render the table from report JSONs found in eval_dir; also rewrites
// report_table.txt there. Returns the rendered table.
std::string cmd_report(const std::string& eval_dir);

}  // namespace semvo
