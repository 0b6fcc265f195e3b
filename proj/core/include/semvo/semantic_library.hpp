#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semvo/geometry.hpp"

namespace semvo {

// Road semantic element classes the toolkit understands.
enum class Category { LaneBoundary, Arrow, Sign, RoadsideBarrier };

std::string category_name(Category c);
Category category_from_name(const std::string& name);

// One detector/tracker output box. x, y is the top-left corner in pixels.
struct SemanticDetection {
  Category category = Category::Sign;
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  std::optional<std::int64_t> track_id;
};

// A frame admitted to the benchmark library: pose from the mapping pass,
// geographic coordinate (ENU meters) derived from ground truth, and the
// detections observed in that frame.
struct ElementFrame {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  Pose pose;
  Point3 geo = Point3::Zero();
  std::vector<SemanticDetection> detections;
};

struct FrameCandidate {
  double distance = 0.0;
  std::int64_t frame_id = 0;
};

// Library of element frames with a uniform 3-D grid over frame translations
// for exact radius queries.
class BenchmarkLibrary {
 public:
  // grid_cell > 0; throws EmptyInput for zero frames, DuplicateFrameId on id
  // collisions, and rejects frames with no detections (they carry no semantic
  // content and must not be matched against).
  static BenchmarkLibrary build(std::vector<ElementFrame> frames, double grid_cell);

  // Frames with ||t_query - t_i|| strictly less than delta, sorted by
  // (distance, frame_id) ascending. Exact: grid cells are only a prefilter.
  std::vector<FrameCandidate> radius_query(const Point3& t_query, double delta) const;

  const ElementFrame& frame_by_id(std::int64_t frame_id) const;
  const std::vector<ElementFrame>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  double grid_cell() const { return grid_cell_; }

 private:
  BenchmarkLibrary() = default;

  std::int64_t cell_key(const Point3& p, int axis) const;

  std::vector<ElementFrame> frames_;
  std::unordered_map<std::int64_t, std::size_t> index_by_id_;
  // Grid cell -> indices into frames_. Key packs the three cell coordinates.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid_;
  double grid_cell_ = 0.0;
};

std::vector<FrameCandidate> candidates_by_distance(const BenchmarkLibrary& lib,
                                                   const Point3& t_query, double delta);

// Mean per-pair box deviation between two detection sets (the second matching
// gate). Pairs are formed per category, greedily by ascending box-center
// distance; the deviation of a pair is
//   sqrt((x'-x)^2 + (y'-y)^2 + (w'-w)^2 + (h'-h)^2).
// Returns nullopt (incomparable) when no pair can be formed.
std::optional<double> box_deviation(const std::vector<SemanticDetection>& current,
                                    const std::vector<SemanticDetection>& stored);

struct MatchResult {
  std::int64_t frame_id = 0;
  Pose pose;
  Point3 geo = Point3::Zero();
  double distance = 0.0;      // translation distance, meters
  double deviation = 0.0;     // mean box deviation, pixels
};

// Two-stage frame match: distance gate (strictly < delta) then box-deviation
// gate (strictly < xi); among survivors, the one with minimum distance
// (ties by frame_id). Requires delta > 0 and xi > 0.
std::optional<MatchResult> match_frame(const BenchmarkLibrary& lib, const Pose& current_pose,
                                       const std::vector<SemanticDetection>& detections,
                                       double delta, double xi);

struct DriftDecision {
  enum class Kind { MicroCorrect, Reinitialize };
  Kind kind = Kind::MicroCorrect;
  // Set for Reinitialize: the matched frame pose the estimate is reset to.
  std::optional<Pose> correction_pose;
};

// Reinitialize when the translation distance to the matched frame reaches
// reinit_threshold (>= comparison); micro-correct below it.
DriftDecision drift_decision(const Pose& current_pose, const MatchResult& match,
                             double reinit_threshold);

// JSON-Lines serialization, one frame per line, floats with 17 significant
// digits; save followed by load is bit-exact.
std::string library_to_jsonl(const BenchmarkLibrary& lib);
void save_library(const BenchmarkLibrary& lib, const std::string& path);
BenchmarkLibrary load_library(const std::string& path, double grid_cell);

}  // namespace semvo
