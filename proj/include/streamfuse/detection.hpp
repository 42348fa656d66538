#pragma once

// Detection selection, per-class center-distance NMS, cross-slice
// aggregation and center-distance mAP.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "streamfuse/error.hpp"
#include "streamfuse/slicing.hpp"

namespace streamfuse {

struct Detection {
  Box3D box;
  int slice = 0;
  std::int64_t frame_id = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionSet = std::vector<Detection>;

inline double bev_distance(const Box3D& a, const Box3D& b) {
  return std::hypot(a.center.x() - b.center.x(), a.center.y() - b.center.y());
}

/// Indices of `dets` by descending score; equal scores keep input order.
inline std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> idx(dets.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].box.score > dets[b].box.score; });
  return idx;
}

inline constexpr std::size_t kMaxDetectionsPerSlice = 500;

/// The k highest-scoring detections, in descending score order.
inline DetectionSet top_k(std::span<const Detection> dets, std::size_t k = kMaxDetectionsPerSlice) {
  DetectionSet out;
  const auto order = score_order(dets);
  for (std::size_t n = 0; n < order.size() && n < k; ++n) out.push_back(dets[order[n]]);
  return out;
}

/// Suppression radius per class (meters).
struct NmsRadii {
  double default_radius_m = 0.5;
  std::map<int, double> per_class;

  double radius(int class_id) const {
    auto it = per_class.find(class_id);
    return it == per_class.end() ? default_radius_m : it->second;
  }
  void validate() const {
    if (!(default_radius_m > 0.0)) throw ConfigError("nms: radius must be positive");
    for (const auto& [_, r] : per_class) {
      if (!(r > 0.0)) throw ConfigError("nms: radius must be positive");
    }
  }
};

/// Greedy per-class NMS on BEV center distance: walking detections by
/// descending score, a detection is dropped when it lies strictly closer than
/// the class radius to an already kept detection of the same class. Output is
/// in descending score order.
inline DetectionSet nms_per_class(std::span<const Detection> dets, const NmsRadii& radii = {}) {
  radii.validate();
  DetectionSet kept;
  std::map<int, std::vector<std::size_t>> kept_by_class;  // indices into `kept`
  for (std::size_t idx : score_order(dets)) {
    const Detection& d = dets[idx];
    const double r = radii.radius(d.box.class_id);
    auto& same = kept_by_class[d.box.class_id];
    const bool suppressed = std::any_of(same.begin(), same.end(), [&](std::size_t k) {
      return bev_distance(kept[k].box, d.box) < r;
    });
    if (suppressed) continue;
    same.push_back(kept.size());
    kept.push_back(d);
  }
  return kept;
}

/// Pools the detections of all slices (slice order) and removes cross-slice
/// duplicates with per-class NMS. Survivors keep their slice provenance.
inline DetectionSet aggregate_slices(std::span<const DetectionSet> per_slice, const NmsRadii& radii = {}) {
  DetectionSet pooled;
  for (const auto& s : per_slice) pooled.insert(pooled.end(), s.begin(), s.end());
  return nms_per_class(pooled, radii);
}

struct EvalConfig {
  std::vector<double> thresholds_m{0.5, 1.0, 2.0, 4.0};
  std::vector<int> classes;  // empty: every class seen in GT or detections
  std::size_t max_detections_per_slice = kMaxDetectionsPerSlice;

  void validate() const {
    if (thresholds_m.empty()) throw ConfigError("eval: no distance thresholds");
    for (std::size_t k = 0; k < thresholds_m.size(); ++k) {
      if (!(thresholds_m[k] > 0.0)) throw ConfigError("eval: thresholds must be positive");
      if (k > 0 && !(thresholds_m[k] > thresholds_m[k - 1])) {
        throw ConfigError("eval: thresholds must be strictly increasing");
      }
    }
  }
};

struct ClassAp {
  int class_id = 0;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
  std::vector<double> ap;  // one per threshold; empty when the class has no GT

  bool present() const { return num_gt > 0; }
  double mean() const { return std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(ap.size()); }
};

struct EvalReport {
  std::vector<double> thresholds_m;
  std::vector<ClassAp> classes;
  std::optional<double> map;  // absent when no class has GT
};

inline constexpr int kRecallPoints = 101;

/// 101-point interpolated AP from a ranked TP/FP sequence.
inline double interpolated_ap(std::span<const std::uint8_t> is_tp, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += is_tp[k];
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  // Precision envelope: best precision at this rank or deeper.
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double sum = 0.0;
  std::size_t k = 0;
  for (int r = 0; r < kRecallPoints; ++r) {
    const double level = static_cast<double>(r) / (kRecallPoints - 1);
    while (k < n && recall[k] < level - 1e-12) ++k;
    if (k == n) break;
    sum += precision[k];
  }
  return sum / kRecallPoints;
}

namespace detail {

/// Greedy matching of one class at one threshold. Detections in score order
/// each take the nearest unmatched GT of the same frame within `thr`
/// (distance ties -> lower GT index).
inline std::vector<std::uint8_t> greedy_match(std::span<const Detection> dets, const std::vector<std::size_t>& order,
                                              std::span<const Detection> gts, const std::vector<std::size_t>& gt_idx,
                                              double thr) {
  std::vector<std::uint8_t> is_tp;
  is_tp.reserve(order.size());
  std::vector<std::uint8_t> used(gts.size(), 0);
  for (std::size_t di : order) {
    const Detection& d = dets[di];
    std::optional<std::size_t> best;
    double best_dist = 0.0;
    for (std::size_t gi : gt_idx) {
      if (used[gi] || gts[gi].frame_id != d.frame_id) continue;
      const double dist = bev_distance(d.box, gts[gi].box);
      if (dist <= thr && (!best || dist < best_dist)) {
        best = gi;
        best_dist = dist;
      }
    }
    if (best) used[*best] = 1;
    is_tp.push_back(best ? 1 : 0);
  }
  return is_tp;
}

}  // namespace detail

/// Center-distance mAP over frames. Detections and GT only match within the
/// same frame_id. mAP is the mean over present classes and all thresholds.
inline EvalReport evaluate_map(std::span<const Detection> dets, std::span<const Detection> gts,
                               const EvalConfig& cfg = {}) {
  cfg.validate();
  std::vector<int> classes = cfg.classes;
  if (classes.empty()) {
    std::set<int> seen;
    for (const auto& g : gts) seen.insert(g.box.class_id);
    for (const auto& d : dets) seen.insert(d.box.class_id);
    classes.assign(seen.begin(), seen.end());
  }
  EvalReport report;
  report.thresholds_m = cfg.thresholds_m;
  const auto order_all = score_order(dets);
  double sum = 0.0;
  std::size_t terms = 0;
  for (int cls : classes) {
    ClassAp row;
    row.class_id = cls;
    std::vector<std::size_t> order, gt_idx;
    for (std::size_t di : order_all) {
      if (dets[di].box.class_id == cls) order.push_back(di);
    }
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (gts[gi].box.class_id == cls) gt_idx.push_back(gi);
    }
    row.num_gt = gt_idx.size();
    row.num_det = order.size();
    if (row.present()) {
      for (double thr : cfg.thresholds_m) {
        const auto tp = detail::greedy_match(dets, order, gts, gt_idx, thr);
        row.ap.push_back(interpolated_ap(tp, row.num_gt));
        sum += row.ap.back();
        ++terms;
      }
    }
    report.classes.push_back(std::move(row));
  }
  if (terms > 0) report.map = sum / static_cast<double>(terms);
  return report;
}

/// Single-frame convenience overload: every detection is matched against
/// `gts` regardless of its frame_id.
inline EvalReport evaluate_map(std::span<const Detection> dets, std::span<const Box3D> gts,
                               const EvalConfig& cfg = {}) {
  DetectionSet d(dets.begin(), dets.end());
  for (auto& x : d) x.frame_id = 0;
  DetectionSet g;
  for (const auto& b : gts) g.push_back(Detection{b, 0, 0});
  return evaluate_map(std::span<const Detection>(d), std::span<const Detection>(g), cfg);
}

}  // namespace streamfuse
