#include "semvo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <nlohmann/json.hpp>

#include "semvo/errors.hpp"
#include "semvo/text_io.hpp"

namespace semvo {

namespace {

using nlohmann::json;

bool is_point_category(Category c) {
  return c == Category::Sign || c == Category::Arrow;
}

}  // namespace

Point3 EvalElement::representative() const {
  if (points.empty()) throw EmptyInput("element has no points");
  Point3 sum = Point3::Zero();
  for (const Point3& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

Eigen::Vector2d EvalTrajectory::heading_at(const Point3& query) const {
  if (positions.size() < 2) throw EmptyInput("trajectory needs at least two positions");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double d = (positions[i] - query).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const std::size_t lo = best == 0 ? 0 : best - 1;
  const std::size_t hi = best + 1 < positions.size() ? best + 1 : best;
  Eigen::Vector2d h = (positions[hi] - positions[lo]).head<2>();
  const double n = h.norm();
  if (n < 1e-12) return Eigen::Vector2d(1.0, 0.0);
  return h / n;
}

Point3 closest_point_on_chain(const Point3& p, const std::vector<Point3>& chain) {
  if (chain.empty()) throw EmptyInput("empty chain");
  if (chain.size() == 1) return chain[0];
  Point3 best = chain[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const Point3& a = chain[i];
    const Point3 ab = chain[i + 1] - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Point3 q = a + t * ab;
    const double d = (p - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

double point_to_chain_distance(const Point3& p, const std::vector<Point3>& chain) {
  return (p - closest_point_on_chain(p, chain)).norm();
}

std::vector<Point3> sample_polyline(const std::vector<Point3>& points, double step_m) {
  if (!(step_m > 0.0)) throw ConfigError("polyline sample step must be > 0");
  if (points.empty()) throw EmptyInput("empty polyline");
  if (points.size() == 1) return points;

  std::vector<double> cum{0.0};
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    cum.push_back(cum.back() + (points[i + 1] - points[i]).norm());
  }
  const double total = cum.back();
  std::vector<Point3> out;
  std::size_t seg = 0;
  for (double s = 0.0; s < total; s += step_m) {
    while (seg + 1 < cum.size() - 1 && cum[seg + 1] <= s) ++seg;
    const double span = cum[seg + 1] - cum[seg];
    const double f = span > 0.0 ? (s - cum[seg]) / span : 0.0;
    out.push_back(points[seg] + f * (points[seg + 1] - points[seg]));
  }
  out.push_back(points.back());
  return out;
}

namespace {

// Matching distance between two same-category elements: anchor distance for
// point elements, mean reported-vertex-to-chain distance for polylines.
double element_distance(const EvalElement& rep, const EvalElement& gt) {
  if (is_point_category(rep.category) || (!rep.is_polyline && !gt.is_polyline)) {
    return (rep.representative() - gt.representative()).norm();
  }
  if (rep.points.empty() || gt.points.empty()) throw EmptyInput("element has no points");
  double sum = 0.0;
  for (const Point3& p : rep.points) sum += point_to_chain_distance(p, gt.points);
  return sum / static_cast<double>(rep.points.size());
}

}  // namespace

ElementMatches match_elements(const std::vector<EvalElement>& reported,
                              const std::vector<EvalElement>& ground_truth,
                              const MatchConfig& config) {
  if (!(config.point_radius_m > 0.0) || !(config.polyline_radius_m > 0.0)) {
    throw ConfigError("match radii must be > 0");
  }

  struct Candidate {
    double distance;
    std::size_t rep;
    std::size_t gt;
  };
  std::vector<Candidate> candidates;
  for (std::size_t r = 0; r < reported.size(); ++r) {
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (reported[r].category != ground_truth[g].category) continue;
      const double radius = is_point_category(reported[r].category) ? config.point_radius_m
                                                                    : config.polyline_radius_m;
      const double d = element_distance(reported[r], ground_truth[g]);
      if (d <= radius) candidates.push_back(Candidate{d, r, g});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.rep, a.gt) < std::tie(b.distance, b.rep, b.gt);
  });

  ElementMatches m;
  std::vector<bool> rep_used(reported.size(), false), gt_used(ground_truth.size(), false);
  for (const Candidate& c : candidates) {
    if (rep_used[c.rep] || gt_used[c.gt]) continue;
    rep_used[c.rep] = true;
    gt_used[c.gt] = true;
    m.tp.emplace_back(c.rep, c.gt);
  }
  for (std::size_t r = 0; r < reported.size(); ++r)
    if (!rep_used[r]) m.fp.push_back(r);
  for (std::size_t g = 0; g < ground_truth.size(); ++g)
    if (!gt_used[g]) m.fn.push_back(g);
  return m;
}

AxisError axis_decompose(const Point3& error, const Eigen::Vector2d& heading) {
  AxisError e;
  e.longitudinal = error.x() * heading.x() + error.y() * heading.y();
  e.lateral = error.x() * heading.y() - error.y() * heading.x();
  e.altitudinal = error.z();
  return e;
}

std::vector<AxisError> per_element_errors(
    const std::vector<EvalElement>& reported, const std::vector<EvalElement>& ground_truth,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    const EvalTrajectory& trajectory) {
  std::vector<AxisError> out;
  out.reserve(pairs.size());
  for (const auto& [ri, gi] : pairs) {
    const EvalElement& rep = reported.at(ri);
    const EvalElement& gt = ground_truth.at(gi);
    if (gt.is_polyline && rep.points.size() > 0 && gt.points.size() > 1) {
      AxisError acc{0.0, 0.0, 0.0};
      for (const Point3& p : rep.points) {
        const Point3 ref = closest_point_on_chain(p, gt.points);
        const AxisError e = axis_decompose(p - ref, trajectory.heading_at(ref));
        acc.lateral += e.lateral;
        acc.longitudinal += e.longitudinal;
        acc.altitudinal += e.altitudinal;
      }
      const double n = static_cast<double>(rep.points.size());
      out.push_back(AxisError{acc.lateral / n, acc.longitudinal / n, acc.altitudinal / n});
    } else {
      const Point3 truth = gt.representative();
      out.push_back(axis_decompose(rep.representative() - truth, trajectory.heading_at(truth)));
    }
  }
  return out;
}

std::optional<AxisError> mae(const std::vector<EvalElement>& reported,
                             const std::vector<EvalElement>& ground_truth,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             const EvalTrajectory& trajectory) {
  if (pairs.empty()) return std::nullopt;
  const std::vector<AxisError> errors = per_element_errors(reported, ground_truth, pairs, trajectory);
  AxisError acc{0.0, 0.0, 0.0};
  for (const AxisError& e : errors) {
    acc.lateral += e.lateral;
    acc.longitudinal += e.longitudinal;
    acc.altitudinal += e.altitudinal;
  }
  const double n = static_cast<double>(errors.size());
  return AxisError{acc.lateral / n, acc.longitudinal / n, acc.altitudinal / n};
}

std::optional<AxisError> mre(const std::vector<EvalElement>& reported,
                             const std::vector<EvalElement>& ground_truth,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             const EvalTrajectory& trajectory, double pair_radius_m,
                             int* pair_count) {
  if (!(pair_radius_m > 0.0)) throw ConfigError("pair_radius_m must be > 0");
  if (pair_count != nullptr) *pair_count = 0;
  if (pairs.size() < 2) return std::nullopt;

  // Order matched elements by ground-truth id (index fallback) so the pair
  // orientation — and therefore the sign — is reproducible.
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto key = [&](std::size_t i) {
    const EvalElement& g = ground_truth.at(pairs[i].second);
    return g.element_id.has_value() ? *g.element_id : static_cast<std::int64_t>(pairs[i].second);
  };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  AxisError acc{0.0, 0.0, 0.0};
  int count = 0;
  for (std::size_t ia = 0; ia < order.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < order.size(); ++ib) {
      const auto& [ra, ga] = pairs[order[ia]];
      const auto& [rb, gb] = pairs[order[ib]];
      if (ground_truth.at(ga).category != ground_truth.at(gb).category) continue;
      const Point3 gta = ground_truth.at(ga).representative();
      const Point3 gtb = ground_truth.at(gb).representative();
      if ((gta - gtb).norm() > pair_radius_m) continue;
      const Point3 rel = (reported.at(ra).representative() - gta) -
                         (reported.at(rb).representative() - gtb);
      const AxisError e = axis_decompose(rel, trajectory.heading_at(0.5 * (gta + gtb)));
      acc.lateral += e.lateral;
      acc.longitudinal += e.longitudinal;
      acc.altitudinal += e.altitudinal;
      ++count;
    }
  }
  if (pair_count != nullptr) *pair_count = count;
  if (count == 0) return std::nullopt;
  const double n = static_cast<double>(count);
  return AxisError{acc.lateral / n, acc.longitudinal / n, acc.altitudinal / n};
}

AteResult trajectory_ate(const std::vector<Point3>& estimate,
                         const std::vector<Point3>& ground_truth) {
  if (estimate.size() != ground_truth.size()) {
    throw LengthMismatch("trajectory length mismatch: " + std::to_string(estimate.size()) +
                         " vs " + std::to_string(ground_truth.size()));
  }
  if (estimate.empty()) throw EmptyInput("empty trajectories");
  double sum_sq = 0.0, max_d = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = (estimate[i] - ground_truth[i]).norm();
    sum_sq += d * d;
    max_d = std::max(max_d, d);
  }
  return AteResult{std::sqrt(sum_sq / static_cast<double>(estimate.size())), max_d};
}

MetricReport evaluate_elements(const std::vector<EvalElement>& reported,
                               const std::vector<EvalElement>& ground_truth,
                               const EvalTrajectory& trajectory, const MatchConfig& config) {
  MetricReport report;
  std::vector<std::pair<std::size_t, std::size_t>> all_pairs;

  for (Category cat : {Category::LaneBoundary, Category::Arrow, Category::Sign,
                       Category::RoadsideBarrier}) {
    std::vector<EvalElement> rep_c, gt_c;
    std::vector<std::size_t> rep_idx, gt_idx;
    for (std::size_t i = 0; i < reported.size(); ++i) {
      if (reported[i].category == cat) {
        rep_c.push_back(reported[i]);
        rep_idx.push_back(i);
      }
    }
    for (std::size_t i = 0; i < ground_truth.size(); ++i) {
      if (ground_truth[i].category == cat) {
        gt_c.push_back(ground_truth[i]);
        gt_idx.push_back(i);
      }
    }

    CategoryMetrics m;
    if (!rep_c.empty() || !gt_c.empty()) {
      const ElementMatches matches = match_elements(rep_c, gt_c, config);
      m.tp = static_cast<int>(matches.tp.size());
      m.fp = static_cast<int>(matches.fp.size());
      m.fn = static_cast<int>(matches.fn.size());
      if (m.tp + m.fn > 0) m.recall_pct = 100.0 * m.tp / static_cast<double>(m.tp + m.fn);
      if (m.tp + m.fp > 0) m.precision_pct = 100.0 * m.tp / static_cast<double>(m.tp + m.fp);
      m.mae = mae(rep_c, gt_c, matches.tp, trajectory);
      m.mre = mre(rep_c, gt_c, matches.tp, trajectory, config.mre_pair_radius_m,
                  &m.mre_pair_count);
      for (const auto& [r, g] : matches.tp) all_pairs.emplace_back(rep_idx[r], gt_idx[g]);
    }
    report.per_category[cat] = m;
  }

  CategoryMetrics& o = report.overall;
  for (const auto& [cat, m] : report.per_category) {
    o.tp += m.tp;
    o.fp += m.fp;
    o.fn += m.fn;
  }
  if (o.tp + o.fn > 0) o.recall_pct = 100.0 * o.tp / static_cast<double>(o.tp + o.fn);
  if (o.tp + o.fp > 0) o.precision_pct = 100.0 * o.tp / static_cast<double>(o.tp + o.fp);
  o.mae = mae(reported, ground_truth, all_pairs, trajectory);
  o.mre = mre(reported, ground_truth, all_pairs, trajectory, config.mre_pair_radius_m,
              &o.mre_pair_count);
  return report;
}

namespace {

void append_axis(JsonWriter& w, const char* name, const std::optional<AxisError>& e) {
  w.key(name);
  if (!e.has_value()) {
    w.null();
    return;
  }
  w.begin_object();
  w.key("lateral").value(e->lateral);
  w.key("longitudinal").value(e->longitudinal);
  w.key("altitudinal").value(e->altitudinal);
  w.end_object();
}

void append_category_metrics(JsonWriter& w, const CategoryMetrics& m) {
  w.begin_object();
  w.key("tp").value(static_cast<std::int64_t>(m.tp));
  w.key("fp").value(static_cast<std::int64_t>(m.fp));
  w.key("fn").value(static_cast<std::int64_t>(m.fn));
  w.key("recall_pct");
  if (m.recall_pct.has_value()) w.value(*m.recall_pct);
  else w.null();
  w.key("precision_pct");
  if (m.precision_pct.has_value()) w.value(*m.precision_pct);
  else w.null();
  append_axis(w, "mae_m", m.mae);
  append_axis(w, "mre_m", m.mre);
  w.key("mre_pair_count").value(static_cast<std::int64_t>(m.mre_pair_count));
  w.end_object();
}

std::optional<AxisError> axis_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return AxisError{j.at("lateral").get<double>(), j.at("longitudinal").get<double>(),
                   j.at("altitudinal").get<double>()};
}

CategoryMetrics category_metrics_from_json(const json& j) {
  CategoryMetrics m;
  m.tp = j.at("tp").get<int>();
  m.fp = j.at("fp").get<int>();
  m.fn = j.at("fn").get<int>();
  if (!j.at("recall_pct").is_null()) m.recall_pct = j.at("recall_pct").get<double>();
  if (!j.at("precision_pct").is_null()) m.precision_pct = j.at("precision_pct").get<double>();
  m.mae = axis_from_json(j.at("mae_m"));
  m.mre = axis_from_json(j.at("mre_m"));
  m.mre_pair_count = j.at("mre_pair_count").get<int>();
  return m;
}

}  // namespace

std::string metric_report_json(const MetricReport& report, const std::string& label) {
  JsonWriter w;
  w.begin_object();
  w.key("label").value(label);
  w.key("categories").begin_object();
  for (const auto& [cat, m] : report.per_category) {
    w.key(category_name(cat));
    append_category_metrics(w, m);
  }
  w.end_object();
  w.key("overall");
  append_category_metrics(w, report.overall);
  w.key("ate");
  if (report.has_ate) {
    w.begin_object();
    w.key("rmse_m").value(report.ate.rmse_m);
    w.key("max_m").value(report.ate.max_m);
    w.end_object();
  } else {
    w.null();
  }
  w.end_object();
  return w.str();
}

MetricReport metric_report_from_json(const std::string& text) {
  MetricReport report;
  try {
    const json j = json::parse(text);
    for (const auto& [name, jm] : j.at("categories").items()) {
      report.per_category[category_from_name(name)] = category_metrics_from_json(jm);
    }
    report.overall = category_metrics_from_json(j.at("overall"));
    if (!j.at("ate").is_null()) {
      report.has_ate = true;
      report.ate.rmse_m = j.at("ate").at("rmse_m").get<double>();
      report.ate.max_m = j.at("ate").at("max_m").get<double>();
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("metric report parse: ") + e.what());
  }
  return report;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string cell(const std::optional<double>& v) {
  return v.has_value() ? fixed2(*v) : std::string("/");
}

std::string pretty_category(Category c) {
  switch (c) {
    case Category::LaneBoundary: return "Lane Boundary";
    case Category::Arrow: return "Arrow";
    case Category::Sign: return "Sign";
    case Category::RoadsideBarrier: return "Roadside Barrier";
  }
  return "?";
}

}  // namespace

std::string metric_report_table(
    const std::vector<std::pair<std::string, MetricReport>>& methods) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Method", "Semantic element", "Recall", "Precision", "MAE lat", "MAE lon",
                  "MAE alt", "MRE lat", "MRE lon", "MRE alt"});
  for (const auto& [name, report] : methods) {
    bool first = true;
    for (const auto& [cat, m] : report.per_category) {
      std::vector<std::string> row;
      row.push_back(first ? name : "");
      first = false;
      row.push_back(pretty_category(cat));
      row.push_back(cell(m.recall_pct));
      row.push_back(cell(m.precision_pct));
      const auto axis_cells = [&row](const std::optional<AxisError>& e) {
        row.push_back(e.has_value() ? fixed2(e->lateral) : "/");
        row.push_back(e.has_value() ? fixed2(e->longitudinal) : "/");
        row.push_back(e.has_value() ? fixed2(e->altitudinal) : "/");
      };
      axis_cells(m.mae);
      axis_cells(m.mre);
      rows.push_back(std::move(row));
    }
  }

  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out += rows[r][c];
      if (c + 1 < rows[r].size()) {
        out.append(widths[c] - rows[r][c].size() + 2, ' ');
      }
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < widths.size(); ++c) {
        total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
      }
      out.append(total, '-');
      out += '\n';
    }
  }
  return out;
}

std::string eval_elements_to_jsonl(const std::vector<EvalElement>& elements) {
  std::string out;
  for (const EvalElement& e : elements) {
    JsonWriter w;
    w.begin_object();
    w.key("element_id");
    if (e.element_id.has_value()) w.value(*e.element_id);
    else w.null();
    w.key("category").value(category_name(e.category));
    w.key("kind").value(e.is_polyline ? "polyline" : "box");
    w.key("points").begin_array();
    for (const Point3& p : e.points) {
      w.begin_array();
      for (int i = 0; i < 3; ++i) w.value(p[i]);
      w.end_array();
    }
    w.end_array();
    w.end_object();
    out += w.str();
    out += '\n';
  }
  return out;
}

std::vector<EvalElement> eval_elements_from_jsonl(const std::string& text) {
  std::vector<EvalElement> out;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      EvalElement e;
      if (!j.at("element_id").is_null()) e.element_id = j.at("element_id").get<std::int64_t>();
      e.category = category_from_name(j.at("category").get<std::string>());
      e.is_polyline = j.at("kind").get<std::string>() == "polyline";
      for (const auto& pj : j.at("points")) {
        e.points.push_back(Point3(pj.at(0).get<double>(), pj.at(1).get<double>(),
                                  pj.at(2).get<double>()));
      }
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw IoError("reported elements line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace semvo
