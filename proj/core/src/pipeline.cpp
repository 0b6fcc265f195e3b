#include "semvo/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <utility>

#include "semvo/errors.hpp"
#include "semvo/geo_alignment.hpp"
#include "semvo/logging.hpp"
#include "semvo/metrics.hpp"
#include "semvo/optimizer.hpp"
#include "semvo/sim_world.hpp"
#include "semvo/text_io.hpp"

namespace semvo {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir + ": " + ec.message());
}

double parse_double_field(const std::string& field, const std::string& path, int line_no) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw IoError(path + " line " + std::to_string(line_no) + ": bad number '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string pose_to_csv(std::int64_t frame_id, double timestamp, const Pose& pose) {
  std::string out = std::to_string(frame_id);
  out += ',';
  out += format_double(timestamp);
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
  return out;
}

}  // namespace

std::vector<TrajectoryRow> load_trajectory_csv(const std::string& path) {
  std::vector<TrajectoryRow> rows;
  int line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 14) {
      throw IoError(path + " line " + std::to_string(line_no) + ": expected 14 fields, got " +
                    std::to_string(f.size()));
    }
    TrajectoryRow row;
    row.frame_id = static_cast<std::int64_t>(parse_double_field(f[0], path, line_no));
    row.timestamp = parse_double_field(f[1], path, line_no);
    for (int i = 0; i < 3; ++i) row.pose.translation[i] = parse_double_field(f[2 + i], path, line_no);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        row.pose.rotation(r, c) = parse_double_field(f[5 + 3 * r + c], path, line_no);
      }
    rows.push_back(std::move(row));
  }
  return rows;
}

void cmd_simulate(const RunConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const WorldModel world = generate_world(config.world, config.world_seed);
  const std::vector<SimFrame> frames = simulate_drive(world, config.drive, config.seed);
  export_dataset(frames, world, out_dir);

  JsonWriter w;
  w.begin_object();
  w.key("config_hash").value(config.config_hash.empty() ? std::string("default")
                                                        : config.config_hash);
  w.key("seed").value(static_cast<std::int64_t>(config.seed));
  w.key("world_seed").value(static_cast<std::int64_t>(config.world_seed));
  w.key("scenario").value(scenario_name(config.world.scenario));
  w.key("frame_count").value(static_cast<std::int64_t>(frames.size()));
  w.key("element_count").value(static_cast<std::int64_t>(world.elements.size()));
  w.end_object();
  write_text_file(out_dir + "/manifest.json", w.str() + "\n");
  log::info("simulate: " + std::to_string(frames.size()) + " frames, " +
            std::to_string(world.elements.size()) + " elements -> " + out_dir);
}

void cmd_build_library(const std::string& dataset_dir, const std::string& out_path,
                       const RunConfig& config) {
  const Dataset ds = import_dataset(dataset_dir);
  std::vector<ElementFrame> frames;
  for (const SimFrame& f : ds.frames) {
    if (f.detections.empty()) continue;
    ElementFrame ef;
    ef.frame_id = f.frame_id;
    ef.timestamp = f.timestamp;
    ef.pose = f.ins_pose;
    ef.geo = ds.world.to_geo(f.gt_pose.translation);
    for (const SimDetection& d : f.detections) ef.detections.push_back(d.det);
    frames.push_back(std::move(ef));
  }
  if (frames.empty()) throw EmptyInput("dataset contains no detections to build a library from");
  const BenchmarkLibrary lib = BenchmarkLibrary::build(std::move(frames), config.matching.grid_cell_m);
  const fs::path parent = fs::path(out_path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
  save_library(lib, out_path);
  log::info("build-library: " + std::to_string(lib.size()) + " frames -> " + out_path);
}

namespace {

std::optional<Point3> triangulate_point(const std::vector<std::pair<Pose, Pixel>>& views,
                                        const Intrinsics& intr) {
  if (views.size() < 2) return std::nullopt;
  std::vector<Point3> dirs, centers;
  dirs.reserve(views.size());
  centers.reserve(views.size());
  for (const auto& [pose, px] : views) {
    Point3 d((px.x() - intr.cx) / intr.fx, (px.y() - intr.cy) / intr.fy, 1.0);
    d.normalize();
    dirs.push_back(pose.rotation.transpose() * d);
    centers.push_back(camera_center(pose));
  }
  double max_sep = 0.0;
  for (std::size_t i = 1; i < dirs.size(); ++i) {
    max_sep = std::max(max_sep, 1.0 - std::abs(dirs[i].dot(dirs[0])));
  }
  if (max_sep < 5e-7) return std::nullopt;  // all rays near-parallel

  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Point3 b = Point3::Zero();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Eigen::Matrix3d m = Eigen::Matrix3d::Identity() - dirs[i] * dirs[i].transpose();
    a += m;
    b += m * centers[i];
  }
  const Point3 x = a.ldlt().solve(b);
  if (!x.allFinite()) return std::nullopt;
  for (const auto& [pose, px] : views) {
    (void)px;
    if (transform_point(pose, x).z() <= kDepthEpsilon) return std::nullopt;
  }
  return x;
}

// Nearest n library frames by translation distance, grid-accelerated with the
// exhaustive selector as fallback; ordering matches select_nearest_frames.
std::vector<Correspondence> nearest_frames_fast(const BenchmarkLibrary& lib, const Point3& t,
                                                int n) {
  double radius = std::max(2.0 * lib.grid_cell(), 1.0);
  for (int attempt = 0; attempt < 12; ++attempt) {
    const std::vector<FrameCandidate> cands = lib.radius_query(t, radius);
    if (cands.size() >= static_cast<std::size_t>(n)) {
      std::vector<Correspondence> out;
      out.reserve(n);
      for (int i = 0; i < n; ++i) {
        const ElementFrame& f = lib.frame_by_id(cands[i].frame_id);
        out.push_back(Correspondence{f.pose.translation, f.geo});
      }
      return out;
    }
    radius *= 2.0;
  }
  return select_nearest_frames(lib, t, n);
}

// Per-frame alignment with widening on degenerate (collinear) neighborhoods.
GeoTransform alignment_near(const BenchmarkLibrary& lib, const Point3& t, int n) {
  int count = std::min<int>(n, static_cast<int>(lib.size()));
  while (true) {
    const std::vector<Correspondence> pairs = nearest_frames_fast(lib, t, count);
    try {
      return solve_rigid_alignment(pairs);
    } catch (const DegenerateConfiguration&) {
      if (count >= static_cast<int>(lib.size())) throw;
      count = std::min<int>(static_cast<int>(lib.size()), count * 2);
    }
  }
}

struct PointRecord {
  Category category = Category::Sign;
  std::int64_t tid = 0;
  int vertex = -1;
  std::optional<Point3> position;
  std::vector<std::pair<std::int64_t, Pixel>> obs;      // cleared on reinitialization
  std::vector<std::pair<std::int64_t, Pixel>> all_obs;  // kept for the before-BA variant
};

struct KeyframeRecord {
  std::vector<std::pair<std::int64_t, Pixel>> obs;  // (point id, pixel)
  std::optional<Point3> anchor;
  bool snap_fixed = false;
};

}  // namespace

LocalizeSummary cmd_localize(const std::string& dataset_dir, const std::string& library_path,
                             const RunConfig& config, const std::string& out_dir,
                             const LocalizeOptions& options) {
  const Dataset ds = import_dataset(dataset_dir);
  if (ds.frames.empty()) throw EmptyInput("dataset has no frames");
  const BenchmarkLibrary lib = load_library(library_path, config.matching.grid_cell_m);
  ensure_dir(out_dir);

  const MatchingConfig& mc = config.matching;
  const PipelineOptimizerConfig& oc = config.optimizer;
  const bool matching_enabled = mc.delta_m > 0.0 && mc.xi_px > 0.0;
  const Intrinsics& intr = config.drive.intrinsics;
  const std::size_t n = ds.frames.size();

  std::vector<Pose> estimates(n);
  std::optional<Pose> correction;  // right-composed: estimate_k = ins_k * correction

  std::map<std::int64_t, KeyframeRecord> kf_recs;
  std::vector<std::int64_t> kf_frames;
  std::vector<PointRecord> points;
  std::map<std::pair<std::int64_t, int>, std::int64_t> point_ids;

  LocalizeSummary summary;
  summary.frame_count = static_cast<int>(n);
  std::string decisions;
  int kf_since_solve = 0;

  const auto views_for = [&](const std::vector<std::pair<std::int64_t, Pixel>>& obs,
                             const bool use_ins) {
    std::vector<std::pair<Pose, Pixel>> views;
    views.reserve(obs.size());
    for (const auto& [f, px] : obs) {
      views.emplace_back(use_ins ? ds.frames[f].ins_pose : estimates[f], px);
    }
    return views;
  };

  // Triangulation quality gates: all views in front, enough ray separation
  // to pin depth, and no catastrophic inconsistency with the current poses.
  const auto triangulate_gated = [&](const std::vector<std::pair<Pose, Pixel>>& views)
      -> std::optional<Point3> {
    const std::optional<Point3> x = triangulate_point(views, intr);
    if (!x.has_value()) return std::nullopt;
    double worst = 0.0;
    for (const auto& [pose, px] : views) {
      const Point3 pc = transform_point(pose, *x);
      if (pc.z() <= kDepthEpsilon) return std::nullopt;
      worst = std::max(worst, (project(intr, pc) - px).norm());
    }
    if (worst > 300.0) return std::nullopt;
    return x;
  };

  const auto run_solve = [&](std::int64_t at_frame) -> bool {
    const std::size_t window =
        std::min<std::size_t>(kf_frames.size(), static_cast<std::size_t>(oc.window_size));
    if (window < 2) return false;
    const std::size_t begin = kf_frames.size() - window;

    // Keyframes without a single factor (observations cleared by a later
    // reinitialization, no anchor) would be exactly unconstrained variables;
    // leave them out of the graph entirely.
    std::vector<std::int64_t> active;
    int anchors = 0;
    bool any_fixed = false;
    for (std::size_t i = begin; i < kf_frames.size(); ++i) {
      const std::int64_t f = kf_frames[i];
      const KeyframeRecord& rec = kf_recs.at(f);
      if (rec.obs.empty() && !rec.anchor.has_value() && !rec.snap_fixed) continue;
      active.push_back(f);
      if (rec.anchor.has_value()) ++anchors;
      if (rec.snap_fixed) any_fixed = true;
    }
    if (active.size() < 2) return false;
    if (anchors == 0 && !any_fixed) return false;  // nothing to correct against

    FactorGraph graph;
    graph.intrinsics = intr;
    graph.pixel_noise =
        NoiseModel<2>::from_sigmas(Eigen::Vector2d(oc.pixel_sigma_px, oc.pixel_sigma_px));
    graph.anchor_noise = NoiseModel<3>::from_sigmas(oc.anchor_sigma_m);
    graph.pixel_kernel =
        oc.huber_pixel_k > 0.0 ? RobustKernel::huber(oc.huber_pixel_k) : RobustKernel::none();
    graph.anchor_kernel =
        oc.huber_anchor_k > 0.0 ? RobustKernel::huber(oc.huber_anchor_k) : RobustKernel::none();

    std::map<std::int64_t, std::vector<std::pair<std::int64_t, Pixel>>> window_obs;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const std::int64_t f = active[i];
      const KeyframeRecord& rec = kf_recs.at(f);
      Keyframe kf;
      kf.id = f;
      kf.pose = estimates[f];
      // The oldest active keyframe is always held fixed. Anchors constrain
      // only translations, which are invariant under a world rotation about
      // the origin (R -> R*R0^-1 with points rotated), so without a fixed
      // pose that gauge freedom would wander from window to window and
      // displace camera centers by the rotation times the distance to origin.
      kf.fixed = rec.snap_fixed || i == 0;
      graph.add_keyframe(kf);
      if (rec.anchor.has_value()) graph.add_anchor(f, *rec.anchor);
      for (const auto& [pid, px] : rec.obs) window_obs[pid].emplace_back(f, px);
    }
    // Points are re-triangulated from the current pose estimates on every
    // solve: the first sighting pair has the longest range and the most
    // accumulated drift, so a one-shot triangulation there can be arbitrarily
    // bad and would drag the window with it.
    for (const auto& [pid, obs] : window_obs) {
      if (obs.size() < 2) continue;
      std::vector<std::pair<Pose, Pixel>> views;
      views.reserve(obs.size());
      for (const auto& [f, px] : obs) views.emplace_back(estimates[f], px);
      const std::optional<Point3> x = triangulate_gated(views);
      if (!x.has_value()) continue;
      graph.add_map_point(MapPoint{pid, *x, false});
      for (const auto& [f, px] : obs) graph.add_observation(f, pid, px);
    }
    if (graph.factor_count() == 0) return false;

    OptResult result;
    try {
      result = solve(graph, oc.lm);
    } catch (const Error& e) {
      log::warn("window solve at frame " + std::to_string(at_frame) + " failed: " + e.what());
      return false;
    }
    if (result.termination == OptResult::Termination::Diverged) {
      log::warn("window solve at frame " + std::to_string(at_frame) +
                " diverged; keeping propagated estimates");
      return false;
    }

    double max_shift = 0.0;
    for (const std::int64_t f : active) {
      max_shift = std::max(max_shift,
                           (result.poses.at(f).translation - estimates[f].translation).norm());
      estimates[f] = result.poses.at(f);
    }
    for (const auto& [pid, pos] : result.points) {
      points[static_cast<std::size_t>(pid)].position = pos;
    }
    const std::int64_t newest = active.back();
    correction = compose(inverse(ds.frames[newest].ins_pose), estimates[newest]);
    log::debug("solve at frame " + std::to_string(at_frame) + ": " +
               std::to_string(active.size()) + " kfs, " + std::to_string(anchors) +
               " anchors, obj " +
               format_double(result.objective_history.empty() ? -1.0
                                                              : result.objective_history.front()) +
               " -> " + format_double(result.final_objective) + " in " +
               std::to_string(result.iterations) + " iters, max kf shift " +
               format_double(max_shift));
    return true;
  };

  for (std::size_t k = 0; k < n; ++k) {
    const SimFrame& frame = ds.frames[k];
    const std::int64_t fid = static_cast<std::int64_t>(k);
    Pose estimate = correction.has_value() ? compose(frame.ins_pose, *correction) : frame.ins_pose;

    std::vector<SemanticDetection> dets;
    dets.reserve(frame.detections.size());
    for (const SimDetection& d : frame.detections) dets.push_back(d.det);

    std::optional<MatchResult> match;
    bool reinit = false;
    if (matching_enabled && !dets.empty()) {
      match = match_frame(lib, estimate, dets, mc.delta_m, mc.xi_px);
    }
    std::optional<Point3> frame_anchor;
    if (match.has_value()) {
      const DriftDecision dd = drift_decision(estimate, *match, mc.reinit_threshold_m);
      if (dd.kind == DriftDecision::Kind::Reinitialize) {
        reinit = true;
        estimate = *dd.correction_pose;
        correction = compose(inverse(frame.ins_pose), estimate);
        for (auto& [f, rec] : kf_recs) {
          if (f < fid) {
            rec.obs.clear();
            rec.anchor.reset();
          }
        }
        for (PointRecord& p : points) {
          const std::size_t before = p.obs.size();
          p.obs.erase(std::remove_if(p.obs.begin(), p.obs.end(),
                                     [&](const auto& o) { return o.first < fid; }),
                      p.obs.end());
          if (p.obs.size() != before) p.position.reset();
        }
        ++summary.reinit_count;
      } else {
        frame_anchor = match->pose.translation;
      }
    }
    estimates[k] = estimate;

    const bool stride_kf = (fid % oc.keyframe_stride) == 0;
    const bool is_kf = stride_kf || reinit;
    if (is_kf) {
      KeyframeRecord& rec = kf_recs[fid];
      kf_frames.push_back(fid);
      rec.snap_fixed = reinit;
      if (!reinit && frame_anchor.has_value()) {
        rec.anchor = frame_anchor;
        ++summary.anchor_count;
      }
      for (const SimDetection& d : frame.detections) {
        if (!d.det.track_id.has_value()) continue;
        const std::int64_t tid = *d.det.track_id;
        for (const TrackedPoint& tp : d.points) {
          if (tp.vertex >= 0 && (tp.vertex % oc.polyline_vertex_stride) != 0) continue;
          const auto key = std::make_pair(tid, tp.vertex);
          auto it = point_ids.find(key);
          if (it == point_ids.end()) {
            it = point_ids.emplace(key, static_cast<std::int64_t>(points.size())).first;
            points.push_back(PointRecord{d.det.category, tid, tp.vertex, std::nullopt, {}, {}});
          }
          PointRecord& pr = points[static_cast<std::size_t>(it->second)];
          pr.obs.emplace_back(fid, tp.pixel);
          pr.all_obs.emplace_back(fid, tp.pixel);
          rec.obs.emplace_back(it->second, tp.pixel);
        }
      }
      ++kf_since_solve;
      if (kf_since_solve >= oc.solve_cadence) {
        if (run_solve(fid)) ++summary.solve_count;
        kf_since_solve = 0;
      }
    }

    JsonWriter w;
    w.begin_object();
    w.key("frame_id").value(fid);
    w.key("matched").value(match.has_value());
    w.key("matched_frame_id");
    if (match.has_value()) w.value(match->frame_id);
    else w.null();
    w.key("distance_m");
    if (match.has_value()) w.value(match->distance);
    else w.null();
    w.key("deviation_px");
    if (match.has_value()) w.value(match->deviation);
    else w.null();
    w.key("decision").value(!match.has_value() ? "none"
                            : reinit            ? "reinitialize"
                                                : "micro_correct");
    w.key("keyframe").value(is_kf);
    w.key("anchored").value(frame_anchor.has_value() && is_kf && !reinit);
    w.end_object();
    decisions += w.str();
    decisions += '\n';
  }

  if (!kf_frames.empty() && kf_since_solve > 0) {
    if (run_solve(kf_frames.back())) ++summary.solve_count;
  }
  summary.keyframe_count = static_cast<int>(kf_frames.size());

  // Re-propagate non-keyframe estimates from the preceding (solved) keyframe
  // so the written trajectory is consistent with the final window solutions.
  // Without any correction the estimates are the INS poses verbatim.
  if (correction.has_value()) {
    std::size_t next_kf = 0;
    std::optional<std::int64_t> prev_kf;
    for (std::size_t k = 0; k < n; ++k) {
      const std::int64_t fid = static_cast<std::int64_t>(k);
      if (next_kf < kf_frames.size() && kf_frames[next_kf] == fid) {
        prev_kf = fid;
        ++next_kf;
        continue;
      }
      if (prev_kf.has_value()) {
        const Pose d = compose(inverse(ds.frames[*prev_kf].ins_pose), estimates[*prev_kf]);
        estimates[k] = compose(ds.frames[k].ins_pose, d);
      }
    }
  }

  std::string corrected;
  for (std::size_t k = 0; k < n; ++k) {
    corrected += pose_to_csv(ds.frames[k].frame_id, ds.frames[k].timestamp, estimates[k]);
  }
  write_text_file(out_dir + "/corrected_trajectory.csv", corrected);
  write_text_file(out_dir + "/decisions.jsonl", decisions);

  // Global world -> ENU alignment over the whole library, used for element
  // export; the trajectory output gets a local fit per frame.
  std::vector<Correspondence> all_pairs;
  all_pairs.reserve(lib.size());
  for (const ElementFrame& f : lib.frames()) {
    all_pairs.push_back(Correspondence{f.pose.translation, f.geo});
  }
  const GeoTransform global_tf = solve_rigid_alignment(all_pairs);
  save_alignment_report(global_tf, out_dir + "/alignment.json");

  std::string geo_csv;
  for (std::size_t k = 0; k < n; ++k) {
    const GeoTransform tf = alignment_near(lib, estimates[k].translation,
                                           config.alignment_frame_count);
    const Point3 g = to_geographic(tf, estimates[k].translation);
    geo_csv += std::to_string(ds.frames[k].frame_id);
    geo_csv += ',';
    geo_csv += format_double(ds.frames[k].timestamp);
    for (int i = 0; i < 3; ++i) {
      geo_csv += ',';
      geo_csv += format_double(g[i]);
    }
    geo_csv += '\n';
  }
  write_text_file(out_dir + "/geo_trajectory.csv", geo_csv);

  // Element export: group map points by track, optimized and INS-only variants.
  const auto export_elements = [&](bool use_ins) {
    std::map<std::int64_t, std::vector<std::size_t>> by_tid;
    for (std::size_t i = 0; i < points.size(); ++i) by_tid[points[i].tid].push_back(i);

    std::vector<EvalElement> elements;
    for (const auto& [tid, members] : by_tid) {
      std::vector<std::pair<int, Point3>> located;  // (vertex, world position)
      Category category = points[members.front()].category;
      bool polyline = false;
      for (const std::size_t i : members) {
        const PointRecord& p = points[i];
        if (p.vertex >= 0) polyline = true;
        std::optional<Point3> pos;
        if (use_ins) {
          pos = triangulate_gated(views_for(p.all_obs, true));
        } else {
          pos = p.position;
          if (!pos.has_value()) pos = triangulate_gated(views_for(p.obs, false));
        }
        if (pos.has_value()) located.emplace_back(p.vertex, *pos);
      }
      if (located.empty()) continue;
      std::sort(located.begin(), located.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      EvalElement e;
      if (!options.strip_ids) e.element_id = tid;
      e.category = category;
      e.is_polyline = polyline;
      for (const auto& [vertex, pos] : located) {
        if (polyline && vertex < 0) continue;  // mixed tracks keep the chain only
        e.points.push_back(to_geographic(global_tf, pos));
      }
      if (e.points.empty()) continue;
      elements.push_back(std::move(e));
    }
    return elements;
  };

  const std::vector<EvalElement> after = export_elements(false);
  write_text_file(out_dir + "/reported_elements.jsonl", eval_elements_to_jsonl(after));
  const std::vector<EvalElement> before = export_elements(true);
  write_text_file(out_dir + "/reported_elements_before.jsonl", eval_elements_to_jsonl(before));
  summary.reported_elements = static_cast<int>(after.size());

  log::info("localize: " + std::to_string(summary.frame_count) + " frames, " +
            std::to_string(summary.keyframe_count) + " keyframes, " +
            std::to_string(summary.solve_count) + " solves, " +
            std::to_string(summary.anchor_count) + " anchors, " +
            std::to_string(summary.reinit_count) + " reinits, " +
            std::to_string(summary.reported_elements) + " elements");
  return summary;
}

namespace {

std::vector<EvalElement> ground_truth_elements(const Dataset& ds) {
  std::vector<EvalElement> out;
  for (const WorldElement& we : ds.world.elements) {
    EvalElement e;
    e.element_id = we.element_id;
    e.category = we.category;
    e.is_polyline = we.is_polyline;
    if (we.is_polyline) {
      for (const Point3& v : we.vertices) e.points.push_back(ds.world.to_geo(v));
    } else {
      e.points.push_back(ds.world.to_geo(we.anchor));
    }
    out.push_back(std::move(e));
  }
  return out;
}

EvalTrajectory reference_trajectory(const Dataset& ds) {
  EvalTrajectory traj;
  traj.positions.reserve(ds.frames.size());
  for (const SimFrame& f : ds.frames) {
    traj.positions.push_back(ds.world.to_geo(camera_center(f.gt_pose)));
  }
  return traj;
}

}  // namespace

void cmd_evaluate(const std::string& dataset_dir, const std::string& localize_dir,
                  const RunConfig& config, const std::string& out_dir, bool before_after) {
  const Dataset ds = import_dataset(dataset_dir);
  if (ds.frames.size() < 2) throw EmptyInput("dataset too small to evaluate");
  ensure_dir(out_dir);

  const std::vector<EvalElement> gt = ground_truth_elements(ds);
  const EvalTrajectory traj = reference_trajectory(ds);

  // ATE is scored on camera centers: translation t = -R*c mixes heading into
  // position through the distance-to-origin lever arm, which is not what a
  // positioning error should measure.
  std::vector<Point3> gt_positions;
  gt_positions.reserve(ds.frames.size());
  for (const SimFrame& f : ds.frames) gt_positions.push_back(camera_center(f.gt_pose));

  const auto evaluate_variant = [&](const std::string& elements_path,
                                    const std::vector<Point3>& trajectory) {
    const std::vector<EvalElement> reported =
        eval_elements_from_jsonl(read_text_file(elements_path));
    MetricReport report = evaluate_elements(reported, gt, traj, config.evaluation);
    report.ate = trajectory_ate(trajectory, gt_positions);
    report.has_ate = true;
    return report;
  };

  std::vector<Point3> corrected_positions;
  for (const TrajectoryRow& row :
       load_trajectory_csv(localize_dir + "/corrected_trajectory.csv")) {
    corrected_positions.push_back(camera_center(row.pose));
  }
  const MetricReport after =
      evaluate_variant(localize_dir + "/reported_elements.jsonl", corrected_positions);
  write_text_file(out_dir + "/report_after.json", metric_report_json(after, "optimized") + "\n");

  std::vector<std::pair<std::string, MetricReport>> table_rows;
  if (before_after) {
    std::vector<Point3> ins_positions;
    ins_positions.reserve(ds.frames.size());
    for (const SimFrame& f : ds.frames) ins_positions.push_back(camera_center(f.ins_pose));
    const MetricReport before =
        evaluate_variant(localize_dir + "/reported_elements_before.jsonl", ins_positions);
    write_text_file(out_dir + "/report_before.json",
                    metric_report_json(before, "ins_only") + "\n");
    table_rows.emplace_back("ins_only", before);
  }
  table_rows.emplace_back("optimized", after);
  write_text_file(out_dir + "/report_table.txt", metric_report_table(table_rows));
}

std::string cmd_report(const std::string& eval_dir) {
  std::vector<std::pair<std::string, MetricReport>> rows;
  const std::string before_path = eval_dir + "/report_before.json";
  if (fs::exists(before_path)) {
    rows.emplace_back("ins_only", metric_report_from_json(read_text_file(before_path)));
  }
  const std::string after_path = eval_dir + "/report_after.json";
  if (!fs::exists(after_path)) throw IoError(after_path + ": not found");
  rows.emplace_back("optimized", metric_report_from_json(read_text_file(after_path)));
  const std::string table = metric_report_table(rows);
  write_text_file(eval_dir + "/report_table.txt", table);
  return table;
}

}  // namespace semvo
