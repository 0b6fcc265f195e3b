#include "semvo/semantic_library.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "semvo/errors.hpp"
#include "semvo/text_io.hpp"

namespace semvo {

namespace {

using nlohmann::json;

// Classic 3-D spatial hash; collisions only cost extra exact-distance checks.
std::uint64_t pack_cell(std::int64_t cx, std::int64_t cy, std::int64_t cz) {
  const std::uint64_t a = static_cast<std::uint64_t>(cx) * 73856093ull;
  const std::uint64_t b = static_cast<std::uint64_t>(cy) * 19349663ull;
  const std::uint64_t c = static_cast<std::uint64_t>(cz) * 83492791ull;
  return a ^ b ^ c;
}

std::int64_t floor_div(double v, double cell) {
  return static_cast<std::int64_t>(std::floor(v / cell));
}

}  // namespace

std::string category_name(Category c) {
  switch (c) {
    case Category::LaneBoundary: return "lane_boundary";
    case Category::Arrow: return "arrow";
    case Category::Sign: return "sign";
    case Category::RoadsideBarrier: return "roadside_barrier";
  }
  throw Error("unhandled category");
}

Category category_from_name(const std::string& name) {
  if (name == "lane_boundary") return Category::LaneBoundary;
  if (name == "arrow") return Category::Arrow;
  if (name == "sign") return Category::Sign;
  if (name == "roadside_barrier") return Category::RoadsideBarrier;
  throw IoError("unknown category: " + name);
}

BenchmarkLibrary BenchmarkLibrary::build(std::vector<ElementFrame> frames, double grid_cell) {
  if (frames.empty()) throw EmptyInput("benchmark library needs at least one frame");
  if (!(grid_cell > 0.0)) throw ConfigError("grid_cell must be > 0");

  BenchmarkLibrary lib;
  lib.grid_cell_ = grid_cell;
  lib.frames_ = std::move(frames);
  lib.index_by_id_.reserve(lib.frames_.size());
  for (std::size_t i = 0; i < lib.frames_.size(); ++i) {
    const ElementFrame& f = lib.frames_[i];
    if (f.detections.empty()) {
      throw EmptyInput("frame " + std::to_string(f.frame_id) +
                       " has no detections and cannot join the library");
    }
    if (!lib.index_by_id_.emplace(f.frame_id, i).second) {
      throw DuplicateFrameId("duplicate frame_id " + std::to_string(f.frame_id));
    }
    const Point3& t = f.pose.translation;
    const std::uint64_t key = pack_cell(floor_div(t.x(), grid_cell),
                                        floor_div(t.y(), grid_cell),
                                        floor_div(t.z(), grid_cell));
    lib.grid_[key].push_back(i);
  }
  return lib;
}

std::vector<FrameCandidate> BenchmarkLibrary::radius_query(const Point3& t_query,
                                                           double delta) const {
  std::vector<FrameCandidate> out;
  if (!(delta > 0.0)) return out;

  const auto collect = [&](std::size_t idx) {
    const double d = (frames_[idx].pose.translation - t_query).norm();
    if (d < delta) out.push_back(FrameCandidate{d, frames_[idx].frame_id});
  };

  const std::int64_t lo[3] = {floor_div(t_query.x() - delta, grid_cell_),
                              floor_div(t_query.y() - delta, grid_cell_),
                              floor_div(t_query.z() - delta, grid_cell_)};
  const std::int64_t hi[3] = {floor_div(t_query.x() + delta, grid_cell_),
                              floor_div(t_query.y() + delta, grid_cell_),
                              floor_div(t_query.z() + delta, grid_cell_)};
  const double span = static_cast<double>(hi[0] - lo[0] + 1) *
                      static_cast<double>(hi[1] - lo[1] + 1) *
                      static_cast<double>(hi[2] - lo[2] + 1);
  if (span > 8.0 * static_cast<double>(frames_.size()) + 64.0) {
    // Radius dwarfs the grid; scanning everything is cheaper than cell walking.
    for (std::size_t i = 0; i < frames_.size(); ++i) collect(i);
  } else {
    std::unordered_set<std::uint64_t> visited;
    for (std::int64_t cx = lo[0]; cx <= hi[0]; ++cx)
      for (std::int64_t cy = lo[1]; cy <= hi[1]; ++cy)
        for (std::int64_t cz = lo[2]; cz <= hi[2]; ++cz) {
          const std::uint64_t key = pack_cell(cx, cy, cz);
          if (!visited.insert(key).second) continue;  // hash collision: bucket done
          auto it = grid_.find(key);
          if (it == grid_.end()) continue;
          for (std::size_t idx : it->second) collect(idx);
        }
  }

  std::sort(out.begin(), out.end(), [](const FrameCandidate& a, const FrameCandidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.frame_id < b.frame_id;
  });
  return out;
}

const ElementFrame& BenchmarkLibrary::frame_by_id(std::int64_t frame_id) const {
  auto it = index_by_id_.find(frame_id);
  if (it == index_by_id_.end()) {
    throw Error("frame_id " + std::to_string(frame_id) + " not in library");
  }
  return frames_[it->second];
}

std::int64_t BenchmarkLibrary::cell_key(const Point3& p, int axis) const {
  return floor_div(p[axis], grid_cell_);
}

std::vector<FrameCandidate> candidates_by_distance(const BenchmarkLibrary& lib,
                                                   const Point3& t_query, double delta) {
  return lib.radius_query(t_query, delta);
}

std::optional<double> box_deviation(const std::vector<SemanticDetection>& current,
                                    const std::vector<SemanticDetection>& stored) {
  struct PairCand {
    double center_dist;
    std::size_t cur, sto;
  };
  std::vector<PairCand> cands;
  for (std::size_t i = 0; i < current.size(); ++i) {
    for (std::size_t j = 0; j < stored.size(); ++j) {
      if (current[i].category != stored[j].category) continue;
      const double dcx = (current[i].x + current[i].w / 2.0) - (stored[j].x + stored[j].w / 2.0);
      const double dcy = (current[i].y + current[i].h / 2.0) - (stored[j].y + stored[j].h / 2.0);
      cands.push_back(PairCand{std::hypot(dcx, dcy), i, j});
    }
  }
  if (cands.empty()) return std::nullopt;

  std::sort(cands.begin(), cands.end(), [](const PairCand& a, const PairCand& b) {
    if (a.center_dist != b.center_dist) return a.center_dist < b.center_dist;
    if (a.cur != b.cur) return a.cur < b.cur;
    return a.sto < b.sto;
  });

  std::vector<bool> cur_used(current.size(), false), sto_used(stored.size(), false);
  double sum = 0.0;
  int pairs = 0;
  for (const PairCand& c : cands) {
    if (cur_used[c.cur] || sto_used[c.sto]) continue;
    cur_used[c.cur] = true;
    sto_used[c.sto] = true;
    const SemanticDetection& a = current[c.cur];
    const SemanticDetection& b = stored[c.sto];
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dw = a.w - b.w;
    const double dh = a.h - b.h;
    sum += std::sqrt(dx * dx + dy * dy + dw * dw + dh * dh);
    ++pairs;
  }
  if (pairs == 0) return std::nullopt;
  return sum / static_cast<double>(pairs);
}

std::optional<MatchResult> match_frame(const BenchmarkLibrary& lib, const Pose& current_pose,
                                       const std::vector<SemanticDetection>& detections,
                                       double delta, double xi) {
  if (!(delta > 0.0)) throw ConfigError("match_frame: delta must be > 0");
  if (!(xi > 0.0)) throw ConfigError("match_frame: xi must be > 0");

  const auto candidates = lib.radius_query(current_pose.translation, delta);
  // Candidates arrive sorted by (distance, id); the first deviation-gate
  // survivor is therefore the minimum-distance match.
  for (const FrameCandidate& cand : candidates) {
    const ElementFrame& frame = lib.frame_by_id(cand.frame_id);
    const auto dev = box_deviation(detections, frame.detections);
    if (!dev.has_value()) continue;  // incomparable: no shared categories
    if (*dev < xi) {
      MatchResult m;
      m.frame_id = frame.frame_id;
      m.pose = frame.pose;
      m.geo = frame.geo;
      m.distance = cand.distance;
      m.deviation = *dev;
      return m;
    }
  }
  return std::nullopt;
}

DriftDecision drift_decision(const Pose& current_pose, const MatchResult& match,
                             double reinit_threshold) {
  if (!(reinit_threshold > 0.0)) throw ConfigError("reinit_threshold must be > 0");
  DriftDecision d;
  const double dist = (current_pose.translation - match.pose.translation).norm();
  if (dist >= reinit_threshold) {
    d.kind = DriftDecision::Kind::Reinitialize;
    d.correction_pose = match.pose;
  } else {
    d.kind = DriftDecision::Kind::MicroCorrect;
  }
  return d;
}

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

void append_detection_json(JsonWriter& w, const SemanticDetection& d) {
  w.begin_object();
  w.key("category").value(category_name(d.category));
  w.key("x").value(d.x);
  w.key("y").value(d.y);
  w.key("w").value(d.w);
  w.key("h").value(d.h);
  if (d.track_id.has_value()) {
    w.key("track_id").value(*d.track_id);
  } else {
    w.key("track_id").null();
  }
  w.end_object();
}

Pose pose_from_json(const json& j) {
  const auto& rot = j.at("rotation");
  const auto& tra = j.at("translation");
  if (rot.size() != 9 || tra.size() != 3) throw IoError("pose must have 9+3 floats");
  Pose p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot.at(3 * r + c).get<double>();
  for (int i = 0; i < 3; ++i) p.translation[i] = tra.at(i).get<double>();
  return p;
}

SemanticDetection detection_from_json(const json& j) {
  SemanticDetection d;
  d.category = category_from_name(j.at("category").get<std::string>());
  d.x = j.at("x").get<double>();
  d.y = j.at("y").get<double>();
  d.w = j.at("w").get<double>();
  d.h = j.at("h").get<double>();
  if (j.contains("track_id") && !j.at("track_id").is_null()) {
    d.track_id = j.at("track_id").get<std::int64_t>();
  }
  return d;
}

}  // namespace

std::string library_to_jsonl(const BenchmarkLibrary& lib) {
  std::string out;
  for (const ElementFrame& f : lib.frames()) {
    JsonWriter w;
    w.begin_object();
    w.key("frame_id").value(f.frame_id);
    w.key("timestamp").value(f.timestamp);
    w.key("pose");
    append_pose_json(w, f.pose);
    w.key("geo").begin_array();
    for (int i = 0; i < 3; ++i) w.value(f.geo[i]);
    w.end_array();
    w.key("detections").begin_array();
    for (const SemanticDetection& d : f.detections) append_detection_json(w, d);
    w.end_array();
    w.end_object();
    out += w.str();
    out += '\n';
  }
  return out;
}

void save_library(const BenchmarkLibrary& lib, const std::string& path) {
  write_text_file(path, library_to_jsonl(lib));
}

BenchmarkLibrary load_library(const std::string& path, double grid_cell) {
  std::vector<ElementFrame> frames;
  for (const std::string& line : read_lines(path)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("bad library record in " + path + ": " + e.what());
    }
    try {
      ElementFrame f;
      f.frame_id = j.at("frame_id").get<std::int64_t>();
      f.timestamp = j.at("timestamp").get<double>();
      f.pose = pose_from_json(j.at("pose"));
      const auto& geo = j.at("geo");
      for (int i = 0; i < 3; ++i) f.geo[i] = geo.at(i).get<double>();
      for (const auto& dj : j.at("detections")) f.detections.push_back(detection_from_json(dj));
      frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw IoError("library record missing field in " + path + ": " + e.what());
    }
  }
  return BenchmarkLibrary::build(std::move(frames), grid_cell);
}

}  // namespace semvo
