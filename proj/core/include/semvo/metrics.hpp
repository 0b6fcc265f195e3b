#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semvo/geometry.hpp"
#include "semvo/semantic_library.hpp"

namespace semvo {

// One map element as seen by the evaluator, either reported by the pipeline
// or taken from ground truth. Box-like elements (signs, arrows) carry a
// single anchor point; polylines carry their vertices in order.
struct EvalElement {
  std::optional<std::int64_t> element_id;
  Category category = Category::LaneBoundary;
  bool is_polyline = false;
  std::vector<Point3> points;

  Point3 representative() const;  // centroid of points
};

// Signed per-axis error, meters. Negative lateral = left of the reference
// line, negative longitudinal = rear, negative altitudinal = below.
struct AxisError {
  double lateral = 0.0;
  double longitudinal = 0.0;
  double altitudinal = 0.0;
};

// Reference line supplying local headings for the axis decomposition.
struct EvalTrajectory {
  std::vector<Point3> positions;

  // Unit ground-plane heading of the trajectory point nearest to `query`.
  Eigen::Vector2d heading_at(const Point3& query) const;
};

struct MatchConfig {
  double point_radius_m = 2.0;     // signs, arrows
  double polyline_radius_m = 1.0;  // lane boundaries, barriers (mean lateral)
  double mre_pair_radius_m = 50.0;
};

struct ElementMatches {
  std::vector<std::pair<std::size_t, std::size_t>> tp;  // (reported idx, gt idx)
  std::vector<std::size_t> fp;                          // unmatched reported
  std::vector<std::size_t> fn;                          // unmatched ground truth
};

// Greedy mutual-nearest matching per category, deterministic: candidate pairs
// within the category's radius are taken in ascending (distance, reported id,
// gt id) order, each side used at most once.
ElementMatches match_elements(const std::vector<EvalElement>& reported,
                              const std::vector<EvalElement>& ground_truth,
                              const MatchConfig& config);

// longitudinal = projection of the error on the heading; lateral = projection
// on the heading rotated +90 degrees with left negative; altitudinal = z.
AxisError axis_decompose(const Point3& error, const Eigen::Vector2d& heading);

// Distance from a point to a piecewise-linear chain (closest point on any
// segment). A single-vertex chain degenerates to point distance.
double point_to_chain_distance(const Point3& p, const std::vector<Point3>& chain);
Point3 closest_point_on_chain(const Point3& p, const std::vector<Point3>& chain);

// Chain resampled at fixed arc-length steps (includes both endpoints).
std::vector<Point3> sample_polyline(const std::vector<Point3>& points, double step_m);

// Per-element signed error: box elements compare anchors directly; polyline
// elements average the per-vertex error against the closest point on the
// ground-truth chain. Returned in the same order as `pairs`.
std::vector<AxisError> per_element_errors(const std::vector<EvalElement>& reported,
                                          const std::vector<EvalElement>& ground_truth,
                                          const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                          const EvalTrajectory& trajectory);

// Mean absolute (signed) error over matched elements; absent when no pairs.
std::optional<AxisError> mae(const std::vector<EvalElement>& reported,
                             const std::vector<EvalElement>& ground_truth,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             const EvalTrajectory& trajectory);

// Mean relative error over unordered same-category pairs of matched elements
// whose ground-truth representatives lie within pair_radius_m. Pair oriented
// ascending ground-truth id (index when ids are absent):
//   e = (reported_a - gt_a) - (reported_b - gt_b), decomposed at the heading
// of the midpoint of the two ground-truth representatives.
std::optional<AxisError> mre(const std::vector<EvalElement>& reported,
                             const std::vector<EvalElement>& ground_truth,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             const EvalTrajectory& trajectory, double pair_radius_m,
                             int* pair_count = nullptr);

struct AteResult {
  double rmse_m = 0.0;
  double max_m = 0.0;
};

// Absolute trajectory error between equal-length position sequences.
AteResult trajectory_ate(const std::vector<Point3>& estimate,
                         const std::vector<Point3>& ground_truth);

struct CategoryMetrics {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::optional<double> recall_pct;     // absent when tp + fn == 0
  std::optional<double> precision_pct;  // absent when tp + fp == 0
  std::optional<AxisError> mae;
  std::optional<AxisError> mre;
  int mre_pair_count = 0;
};

struct MetricReport {
  std::map<Category, CategoryMetrics> per_category;
  CategoryMetrics overall;  // counts summed; errors pooled over all pairs
  AteResult ate;            // filled by the pipeline when trajectories exist
  bool has_ate = false;
};

// Full evaluation: per-category matching, precision/recall, MAE, MRE.
MetricReport evaluate_elements(const std::vector<EvalElement>& reported,
                               const std::vector<EvalElement>& ground_truth,
                               const EvalTrajectory& trajectory, const MatchConfig& config);

std::string metric_report_json(const MetricReport& report, const std::string& label);
MetricReport metric_report_from_json(const std::string& text);

// Plain-text table, one block row per method and semantic element:
// Method | Semantic element | Recall | Precision | MAE lat/lon/alt | MRE lat/lon/alt.
std::string metric_report_table(
    const std::vector<std::pair<std::string, MetricReport>>& methods);

// reported_elements.jsonl round trip.
std::string eval_elements_to_jsonl(const std::vector<EvalElement>& elements);
std::vector<EvalElement> eval_elements_from_jsonl(const std::string& text);

}  // namespace semvo
