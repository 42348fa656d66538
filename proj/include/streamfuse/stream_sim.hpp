#pragma once

// Discrete-event model of a streaming slice pipeline.
//
// Slice k becomes available at k * slice_interval_ms, after spending one
// interval being acquired. Within a slice, stages form a DAG. A stage flagged
// depends_on_previous_slice additionally waits for the same stage of slice
// k-1 (the past-feature bottleneck). Past-free stages run on an unlimited
// worker pool unless max_workers caps it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "streamfuse/error.hpp"
#include "streamfuse/rng.hpp"

namespace streamfuse {

struct StageSpec {
  std::string name;
  double latency_ms = 0.0;
  bool depends_on_previous_slice = false;
  std::string parallel_group;                  // consecutive stages sharing a group run together
  std::optional<std::vector<std::string>> after;  // explicit in-slice predecessors
};

struct PipelineModel {
  std::string name = "pipeline";
  double slice_interval_ms = 6.25;
  int n_slices = 8;
  int max_workers = 0;   // 0: unlimited, per past-free stage
  double jitter_ms = 0;  // uniform +/- jitter on every stage latency
  std::uint64_t seed = 0;
  std::vector<StageSpec> stages;

  bool past_dependent() const {
    return std::any_of(stages.begin(), stages.end(), [](const StageSpec& s) { return s.depends_on_previous_slice; });
  }
  double rotation_period_ms() const { return slice_interval_ms * n_slices; }
};

struct StageEvent {
  double start_ms = 0.0;
  double finish_ms = 0.0;
};

struct SliceEvents {
  int slice = 0;
  double arrival_ms = 0.0;
  double start_ms = 0.0;
  double finish_ms = 0.0;
  double service_ms = 0.0;  // critical path of stage latencies
  double wait_ms = 0.0;     // finish - arrival - service
  double e2e_ms = 0.0;      // acquisition interval + finish - arrival
  std::vector<StageEvent> stages;
};

struct SimTrace {
  std::string model;
  std::vector<SliceEvents> slices;
  double throughput_hz = 0.0;       // 1000 / (acquisition + per-slice processing)
  double completion_rate_hz = 0.0;  // 1000 / mean inter-completion time over the last rotation
  double mean_e2e_ms = 0.0;
  double max_e2e_ms = 0.0;
  double wait_growth_ms = 0.0;      // least-squares slope of wait per slice
};

namespace detail {

/// In-slice predecessor lists, by stage index.
inline std::vector<std::vector<std::size_t>> stage_predecessors(const PipelineModel& m) {
  std::map<std::string, std::size_t> by_name;
  for (std::size_t k = 0; k < m.stages.size(); ++k) {
    if (!by_name.emplace(m.stages[k].name, k).second) {
      throw ConfigError("pipeline: duplicate stage name '" + m.stages[k].name + "'");
    }
  }
  // Default ordering: list order, with consecutive stages of one parallel
  // group forming a single level.
  std::vector<std::size_t> level_of(m.stages.size());
  std::size_t level = 0;
  for (std::size_t k = 0; k < m.stages.size(); ++k) {
    const bool joins = k > 0 && !m.stages[k].parallel_group.empty() &&
                       m.stages[k].parallel_group == m.stages[k - 1].parallel_group;
    if (k > 0 && !joins) ++level;
    level_of[k] = level;
  }
  std::vector<std::vector<std::size_t>> preds(m.stages.size());
  for (std::size_t k = 0; k < m.stages.size(); ++k) {
    const auto& s = m.stages[k];
    if (s.after) {
      for (const auto& dep : *s.after) {
        auto it = by_name.find(dep);
        if (it == by_name.end()) throw ConfigError("pipeline: stage '" + s.name + "' depends on unknown '" + dep + "'");
        preds[k].push_back(it->second);
      }
    } else if (level_of[k] > 0) {
      for (std::size_t p = 0; p < k; ++p) {
        if (level_of[p] + 1 == level_of[k]) preds[k].push_back(p);
      }
    }
  }
  return preds;
}

/// Kahn topological order; lowest index first among ready stages.
inline std::vector<std::size_t> topo_order(const std::vector<std::vector<std::size_t>>& preds) {
  const std::size_t n = preds.size();
  std::vector<std::size_t> indeg(n, 0);
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p : preds[k]) {
      ++indeg[k];
      succ[p].push_back(k);
    }
  }
  std::set<std::size_t> ready;
  for (std::size_t k = 0; k < n; ++k) {
    if (indeg[k] == 0) ready.insert(k);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t k = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(k);
    for (std::size_t s : succ[k]) {
      if (--indeg[s] == 0) ready.insert(s);
    }
  }
  if (order.size() != n) throw ConfigError("pipeline: cyclic stage dependencies");
  return order;
}

}  // namespace detail

inline void validate(const PipelineModel& m) {
  if (!(m.slice_interval_ms > 0.0)) throw ConfigError("pipeline: slice_interval_ms must be positive");
  if (m.n_slices < 1) throw ConfigError("pipeline: n_slices must be >= 1");
  if (m.max_workers < 0) throw ConfigError("pipeline: max_workers must be >= 0");
  if (m.jitter_ms < 0.0) throw ConfigError("pipeline: jitter_ms must be >= 0");
  for (const auto& s : m.stages) {
    if (!(s.latency_ms >= 0.0)) throw ConfigError("pipeline: stage '" + s.name + "' has negative latency");
  }
  detail::topo_order(detail::stage_predecessors(m));
}

inline SimTrace simulate(const PipelineModel& model, int n_rotations) {
  if (n_rotations < 1) throw ConfigError("simulate: n_rotations must be >= 1");
  validate(model);
  const auto preds = detail::stage_predecessors(model);
  const auto order = detail::topo_order(preds);
  const std::size_t n_stages = model.stages.size();
  const int total = n_rotations * model.n_slices;
  Rng jitter = Rng::substream(model.seed, "sim_jitter");

  // Free times of each past-free stage's workers (only with a worker cap).
  using MinHeap = std::priority_queue<double, std::vector<double>, std::greater<>>;
  std::vector<MinHeap> workers(n_stages);
  if (model.max_workers > 0) {
    for (auto& w : workers) {
      for (int k = 0; k < model.max_workers; ++k) w.push(0.0);
    }
  }

  SimTrace trace;
  trace.model = model.name;
  trace.slices.reserve(total);
  for (int k = 0; k < total; ++k) {
    SliceEvents ev;
    ev.slice = k;
    ev.arrival_ms = k * model.slice_interval_ms;
    ev.stages.assign(n_stages, StageEvent{});
    // Times relative to the slice's arrival, so undelayed stages reproduce
    // the critical path exactly.
    std::vector<double> path(n_stages, 0.0), rel_ready(n_stages, 0.0), rel_finish(n_stages, 0.0);
    for (std::size_t s : order) {
      const StageSpec& st = model.stages[s];
      double lat = st.latency_ms;
      if (model.jitter_ms > 0.0) lat = std::max(0.0, lat + jitter.symmetric(model.jitter_ms));
      double ready = 0.0;
      double longest_pred = 0.0;
      for (std::size_t p : preds[s]) {
        ready = std::max(ready, rel_finish[p]);
        longest_pred = std::max(longest_pred, path[p]);
      }
      path[s] = longest_pred + lat;
      if (st.depends_on_previous_slice && k > 0) {
        ready = std::max(ready, trace.slices[k - 1].stages[s].finish_ms - ev.arrival_ms);
      } else if (!st.depends_on_previous_slice && model.max_workers > 0) {
        ready = std::max(ready, workers[s].top() - ev.arrival_ms);
        workers[s].pop();
        workers[s].push(ev.arrival_ms + ready + lat);
      }
      rel_ready[s] = ready;
      rel_finish[s] = ready + lat;
      ev.stages[s] = StageEvent{ev.arrival_ms + ready, ev.arrival_ms + rel_finish[s]};
    }
    double rel_start = 0.0, rel_end = 0.0;
    if (n_stages > 0) {
      rel_start = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < n_stages; ++s) {
        rel_start = std::min(rel_start, rel_ready[s]);
        rel_end = std::max(rel_end, rel_finish[s]);
      }
    }
    ev.start_ms = ev.arrival_ms + rel_start;
    ev.finish_ms = ev.arrival_ms + rel_end;
    ev.service_ms = path.empty() ? 0.0 : *std::max_element(path.begin(), path.end());
    ev.wait_ms = std::max(0.0, rel_end - ev.service_ms);
    ev.e2e_ms = model.slice_interval_ms + rel_end;
    trace.slices.push_back(std::move(ev));
  }

  double sum_e2e = 0.0, sum_proc = 0.0;
  for (const auto& ev : trace.slices) {
    sum_e2e += ev.e2e_ms;
    sum_proc += ev.e2e_ms - ev.wait_ms;
    trace.max_e2e_ms = std::max(trace.max_e2e_ms, ev.e2e_ms);
  }
  trace.mean_e2e_ms = sum_e2e / total;
  trace.throughput_hz = 1000.0 / (sum_proc / total);

  std::vector<double> finishes;
  for (const auto& ev : trace.slices) finishes.push_back(ev.finish_ms);
  std::sort(finishes.begin(), finishes.end());
  const int span = std::min(model.n_slices, total - 1);
  if (span > 0) {
    const double dt = (finishes.back() - finishes[finishes.size() - 1 - span]) / span;
    trace.completion_rate_hz = dt > 0.0 ? 1000.0 / dt : std::numeric_limits<double>::infinity();
  }

  if (total > 1) {
    const double mean_k = (total - 1) / 2.0;
    double mean_w = 0.0;
    for (const auto& ev : trace.slices) mean_w += ev.wait_ms;
    mean_w /= total;
    double num = 0.0, den = 0.0;
    for (const auto& ev : trace.slices) {
      num += (ev.slice - mean_k) * (ev.wait_ms - mean_w);
      den += (ev.slice - mean_k) * (ev.slice - mean_k);
    }
    trace.wait_growth_ms = num / den;
  }
  return trace;
}

struct ComparisonRow {
  std::string model;
  double throughput_hz = 0.0;
  double completion_rate_hz = 0.0;
  double mean_e2e_ms = 0.0;
  double max_e2e_ms = 0.0;
  double wait_growth_ms = 0.0;
};

inline ComparisonRow summarize(const SimTrace& t) {
  return ComparisonRow{t.model, t.throughput_hz, t.completion_rate_hz, t.mean_e2e_ms, t.max_e2e_ms, t.wait_growth_ms};
}

inline std::vector<ComparisonRow> compare_pipelines(std::span<const PipelineModel> models, int n_rotations) {
  if (models.size() < 2) throw ConfigError("compare_pipelines: need at least two models");
  std::vector<ComparisonRow> rows;
  for (const auto& m : models) rows.push_back(summarize(simulate(m, n_rotations)));
  return rows;
}

/// Largest per-slice processing time that still meets `target_hz`.
/// Past-dependent pipelines are additionally capped at one slice interval,
/// beyond which their queue grows without bound.
inline double latency_budget(const PipelineModel& model, double target_hz) {
  if (!(target_hz > 0.0)) throw ConfigError("latency_budget: target_hz must be positive");
  const double budget = 1000.0 / target_hz - model.slice_interval_ms;
  return model.past_dependent() ? std::min(budget, model.slice_interval_ms) : budget;
}

/// Single-stage pipeline processing each slice in `processing_ms`.
inline PipelineModel single_stage_model(std::string name, double processing_ms, bool past_dependent,
                                        double slice_interval_ms = 6.25, int n_slices = 8) {
  PipelineModel m;
  m.name = std::move(name);
  m.slice_interval_ms = slice_interval_ms;
  m.n_slices = n_slices;
  m.stages.push_back(StageSpec{"slice_inference", processing_ms, past_dependent, "", std::nullopt});
  return m;
}

}  // namespace streamfuse
