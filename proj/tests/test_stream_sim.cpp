#include <gtest/gtest.h>

#include "streamfuse/stream_sim.hpp"

using namespace streamfuse;

namespace {

PipelineModel two_stream() {
  PipelineModel m;
  m.name = "two_stream";
  m.stages = {StageSpec{"lidar_encoder", 4.1, false, "encoders", std::nullopt},
              StageSpec{"image_encoder", 7.9, false, "encoders", std::nullopt},
              StageSpec{"fusion_head", 7.9, false, "", std::nullopt}};
  return m;
}

}  // namespace

TEST(Simulate, ParallelPipeline) {
  const auto t = simulate(single_stage_model("parallel", 15.8, false), 4);
  ASSERT_EQ(t.slices.size(), 32u);
  for (const auto& s : t.slices) {
    EXPECT_NEAR(s.e2e_ms, 22.05, 1e-9);
    EXPECT_EQ(s.wait_ms, 0.0);
    EXPECT_EQ(s.arrival_ms, s.slice * 6.25);
  }
  EXPECT_NEAR(t.throughput_hz, 1000.0 / 22.05, 1e-9);
  EXPECT_NEAR(t.throughput_hz, 45.4, 0.1);
  // Completions are one interval apart once the pipe is full.
  EXPECT_NEAR(t.completion_rate_hz, 160.0, 1e-6);
}

TEST(Simulate, SequentialPipelineQueues) {
  const double service = 20.75;
  const auto t = simulate(single_stage_model("sequential", service, true), 4);
  EXPECT_NEAR(t.throughput_hz, 37.0, 0.05);
  EXPECT_NEAR(t.wait_growth_ms, service - 6.25, 1e-9);
  EXPECT_NEAR(t.wait_growth_ms, 14.5, 1e-9);
  for (std::size_t k = 0; k < t.slices.size(); ++k) {
    EXPECT_NEAR(t.slices[k].wait_ms, k * (service - 6.25), 1e-9);
    if (k > 0) {
      EXPECT_GE(t.slices[k].finish_ms, t.slices[k - 1].finish_ms);
    }
  }
  EXPECT_NEAR(t.completion_rate_hz, 1000.0 / service, 1e-9);
  EXPECT_GT(t.max_e2e_ms, t.slices.front().e2e_ms);
}

TEST(Simulate, ZeroLatencyIsAcquisitionOnly) {
  const auto t = simulate(single_stage_model("zero", 0.0, true), 2);
  for (const auto& s : t.slices) EXPECT_EQ(s.e2e_ms, 6.25);
  PipelineModel empty;
  for (const auto& s : simulate(empty, 1).slices) EXPECT_EQ(s.e2e_ms, 6.25);
}

TEST(Simulate, ServiceBelowIntervalNeverWaits) {
  for (double service : {0.5, 3.0, 6.0, 6.25}) {
    const auto t = simulate(single_stage_model("seq", service, true), 5);
    for (const auto& s : t.slices) EXPECT_NEAR(s.wait_ms, 0.0, 1e-9);
    EXPECT_NEAR(t.wait_growth_ms, 0.0, 1e-9);
  }
}

TEST(Simulate, PastFreeNeverWaitsAndWaitGrowthIsAffine) {
  for (double service : {1.0, 10.0, 50.0, 200.0}) {
    for (const auto& s : simulate(single_stage_model("p", service, false), 3).slices) EXPECT_EQ(s.wait_ms, 0.0);
    const auto seq = simulate(single_stage_model("s", service, true), 3);
    if (service > 6.25) {
      for (std::size_t k = 0; k < seq.slices.size(); ++k) {
        EXPECT_NEAR(seq.slices[k].wait_ms, k * (service - 6.25), 1e-7);
      }
    }
  }
}

TEST(Simulate, CausalityAndConservation) {
  PipelineModel m = two_stream();
  m.stages[2].depends_on_previous_slice = true;
  const auto t = simulate(m, 3);
  ASSERT_EQ(t.slices.size(), 24u);
  for (const auto& s : t.slices) {
    for (std::size_t k = 0; k < m.stages.size(); ++k) {
      EXPECT_GE(s.stages[k].start_ms, s.arrival_ms);
      EXPECT_NEAR(s.stages[k].finish_ms - s.stages[k].start_ms, m.stages[k].latency_ms, 1e-12);
    }
    EXPECT_EQ(s.stages[0].start_ms, s.stages[1].start_ms);
    EXPECT_GE(s.stages[2].start_ms, std::max(s.stages[0].finish_ms, s.stages[1].finish_ms));
    EXPECT_TRUE(std::isfinite(s.finish_ms));
  }
}

TEST(Simulate, ParallelGroupRunsConcurrently) {
  const auto t = simulate(two_stream(), 2);
  for (const auto& s : t.slices) {
    EXPECT_NEAR(s.service_ms, 7.9 + 7.9, 1e-12);
    EXPECT_NEAR(s.e2e_ms, 6.25 + 15.8, 1e-9);
    EXPECT_EQ(s.wait_ms, 0.0);
  }
}

TEST(Simulate, ExplicitDependencies) {
  PipelineModel m;
  m.stages = {StageSpec{"a", 2, false, "", std::nullopt}, StageSpec{"b", 3, false, "", std::vector<std::string>{}},
              StageSpec{"c", 1, false, "", std::vector<std::string>{"a", "b"}}};
  const auto t = simulate(m, 1);
  EXPECT_EQ(t.slices[0].stages[1].start_ms, 0.0);
  EXPECT_EQ(t.slices[0].stages[2].start_ms, 3.0);
  EXPECT_EQ(t.slices[0].service_ms, 4.0);
}

TEST(Simulate, CyclesAndBadModelsAreConfigErrors) {
  PipelineModel m;
  m.stages = {StageSpec{"a", 1, false, "", std::vector<std::string>{"b"}},
              StageSpec{"b", 1, false, "", std::vector<std::string>{"a"}}};
  EXPECT_THROW(simulate(m, 1), ConfigError);
  m.stages = {StageSpec{"a", 1, false, "", std::vector<std::string>{"zzz"}}};
  EXPECT_THROW(simulate(m, 1), ConfigError);
  m.stages = {StageSpec{"a", -1, false, "", std::nullopt}};
  EXPECT_THROW(simulate(m, 1), ConfigError);
  m.stages = {StageSpec{"a", 1, false, "", std::nullopt}, StageSpec{"a", 1, false, "", std::nullopt}};
  EXPECT_THROW(simulate(m, 1), ConfigError);
  EXPECT_THROW(simulate(single_stage_model("x", 1, false), 0), ConfigError);
  PipelineModel bad = single_stage_model("x", 1, false);
  bad.slice_interval_ms = 0;
  EXPECT_THROW(simulate(bad, 1), ConfigError);
}

TEST(Simulate, WorkerCapCreatesQueueing) {
  PipelineModel m = single_stage_model("capped", 15.8, false);
  m.max_workers = 1;
  const auto one = simulate(m, 4);
  const auto seq = simulate(single_stage_model("seq", 15.8, true), 4);
  for (std::size_t k = 0; k < one.slices.size(); ++k) EXPECT_NEAR(one.slices[k].finish_ms, seq.slices[k].finish_ms, 1e-9);
  m.max_workers = 3;  // 3 * 6.25 >= 15.8
  for (const auto& s : simulate(m, 4).slices) EXPECT_NEAR(s.wait_ms, 0.0, 1e-9);
}

TEST(Simulate, DeterministicWithJitter) {
  PipelineModel m = two_stream();
  m.jitter_ms = 1.5;
  m.seed = 9;
  const auto a = simulate(m, 3), b = simulate(m, 3);
  ASSERT_EQ(a.slices.size(), b.slices.size());
  for (std::size_t k = 0; k < a.slices.size(); ++k) {
    EXPECT_EQ(a.slices[k].finish_ms, b.slices[k].finish_ms);
    EXPECT_EQ(a.slices[k].e2e_ms, b.slices[k].e2e_ms);
  }
  m.seed = 10;
  const auto c = simulate(m, 3);
  EXPECT_NE(a.slices[0].finish_ms, c.slices[0].finish_ms);
  for (const auto& s : a.slices) EXPECT_LE(std::abs(s.service_ms - 15.8), 3.0 + 1e-12);
}

TEST(ComparePipelines, Rows) {
  const std::vector<PipelineModel> same{single_stage_model("a", 15.8, false), single_stage_model("a", 15.8, false)};
  const auto rows = compare_pipelines(same, 4);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].throughput_hz, rows[1].throughput_hz);
  EXPECT_EQ(rows[0].mean_e2e_ms, rows[1].mean_e2e_ms);
  EXPECT_EQ(rows[0].max_e2e_ms, rows[1].max_e2e_ms);
  EXPECT_EQ(rows[0].wait_growth_ms, rows[1].wait_growth_ms);
  EXPECT_THROW(compare_pipelines(std::vector<PipelineModel>{same[0]}, 4), ConfigError);

  const std::vector<PipelineModel> pair{single_stage_model("parallel", 15.8, false),
                                        single_stage_model("sequential", 20.75, true)};
  const auto pr = compare_pipelines(pair, 4);
  EXPECT_GT(pr[0].throughput_hz, pr[1].throughput_hz);
  EXPECT_LT(pr[0].max_e2e_ms, pr[1].max_e2e_ms);
  EXPECT_EQ(pr[0].wait_growth_ms, 0.0);
}

TEST(LatencyBudget, ClosedForm) {
  const auto parallel = single_stage_model("p", 15.8, false);
  const auto sequential = single_stage_model("s", 20.75, true);
  EXPECT_NEAR(latency_budget(parallel, 45.0), 1000.0 / 45.0 - 6.25, 1e-12);
  EXPECT_NEAR(latency_budget(parallel, 45.0), 15.97, 0.005);
  EXPECT_EQ(latency_budget(sequential, 45.0), 6.25);
  EXPECT_NEAR(latency_budget(sequential, 160.0), 0.0, 1e-12);
  EXPECT_GT(latency_budget(parallel, 1e-6), 1e8);
  EXPECT_THROW(latency_budget(parallel, 0.0), ConfigError);
  // A pipeline at its budget meets the target rate.
  const double b = latency_budget(parallel, 45.0);
  EXPECT_NEAR(simulate(single_stage_model("p", b, false), 2).throughput_hz, 45.0, 1e-9);
}
