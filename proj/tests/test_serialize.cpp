#include <gtest/gtest.h>

#include <sstream>

#include "ecdrive/serialize.hpp"

namespace {

using namespace ecdrive;
using io::Json;

Json minimal() {
  return Json::parse(R"({
    "scenario": {"name": "s", "lane_count": 3, "vehicle_count": 2},
    "seeds": [1, 2],
    "steps": 50,
    "output_dir": "out/s"
  })");
}

std::string config_error(const Json& j) {
  try {
    io::parse_experiment(j);
  } catch (const orch::ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Experiment, MinimalDefaults) {
  const auto c = io::parse_experiment(minimal());
  EXPECT_EQ(c.scenario.name, "s");
  EXPECT_EQ(c.scenario.lane_count, 3);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(c.steps, 50);
  ASSERT_EQ(c.modes.size(), 1u);
  EXPECT_EQ(c.modes[0], orch::Mode::kCollaborative);
  EXPECT_TRUE(c.injections.empty());
  EXPECT_FALSE(c.offload.remote);
}

TEST(Experiment, ShippedConfigsValidate) {
  for (const char* name : {"workzone", "obstacle", "highway"}) {
    const std::string path =
        std::string(ECDRIVE_SOURCE_DIR) + "/configs/" + name + ".json";
    EXPECT_NO_THROW(io::load_experiment(path)) << path;
  }
}

TEST(Experiment, PolicyDynamicsFollowScenario) {
  Json j = minimal();
  j["scenario"]["dynamics"] = {{"v_max", 12.0}};
  j["scenario"]["ego_speed"] = 10.0;
  j["scenario"]["speed_min"] = 8.0;
  j["scenario"]["speed_max"] = 12.0;
  const auto c = io::parse_experiment(j);
  EXPECT_EQ(c.offload.policy.dynamics.v_max, 12.0);
}

TEST(Experiment, FieldLevelErrors) {
  Json j = minimal();
  j.erase("steps");
  EXPECT_EQ(config_error(j), "steps: required field is missing");

  j = minimal();
  j["offload"] = {{"tau", 1.5}};
  EXPECT_NE(config_error(j).find("offload.tau"), std::string::npos);

  j = minimal();
  j["scenario"]["lane_count"] = "three";
  EXPECT_EQ(config_error(j), "scenario.lane_count: expected an integer");

  j = minimal();
  j["seeds"] = Json::array();
  EXPECT_NE(config_error(j).find("seeds"), std::string::npos);

  j = minimal();
  j["injections"] = Json::parse(
      R"([{"kind": "SensorNoise", "start_step": 9, "end_step": 3, "sigma": 1}])");
  EXPECT_EQ(config_error(j).rfind("injections[0].", 0), 0u) << config_error(j);

  j = minimal();
  j["injections"] = Json::parse(R"([{"kind": "Meteor", "start_step": 0, "end_step": 3}])");
  EXPECT_NE(config_error(j).find("injections[0].kind"), std::string::npos);

  j = minimal();
  j["modes"] = {"Hybrid"};
  EXPECT_NE(config_error(j).find("modes"), std::string::npos);
}

TEST(Experiment, UnknownKeysRejected) {
  Json j = minimal();
  j["stepz"] = 4;
  EXPECT_NE(config_error(j).find("stepz"), std::string::npos);
  j = minimal();
  j["remote"] = {{"base_url", "http://localhost:1/v1"}, {"api_key", "sk-x"}};
  EXPECT_NE(config_error(j).find("remote.api_key"), std::string::npos)
      << "credentials must come from the environment only";
}

TEST(Experiment, NotJson) {
  EXPECT_THROW(io::load_experiment("/nonexistent/file.json"), orch::ConfigError);
}

TEST(Snapshot, RemoteBlockRedacted) {
  Json j = minimal();
  j["remote"] = {{"base_url", "https://api.example.com/v1"},
                 {"model", "secret-model-name"},
                 {"timeout_ms", 1234}};
  const auto c = io::parse_experiment(j);
  ASSERT_TRUE(c.offload.remote);
  EXPECT_EQ(c.offload.remote->endpoint.timeout_ms, 1234);
  const Json snap = io::to_json(c.offload);
  EXPECT_EQ(snap["remote"], Json({{"base_url", "https://api.example.com/v1"}}));
  EXPECT_EQ(snap.dump().find("secret-model-name"), std::string::npos);
}

orch::EpisodeTrace small_trace(orch::Mode mode) {
  const auto c = io::parse_experiment(minimal());
  auto offload = c.offload;
  offload.mode = mode;
  offload.detector.n_ref = 60;
  offload.detector.window = 20;
  sim::DriftInjection inj;
  inj.kind = sim::DriftKind::kSensorNoise;
  inj.start_step = 10;
  inj.end_step = 30;
  inj.sigma = 3.0;
  return orch::run_episode(c.scenario, {inj}, offload, 4, 40);
}

TEST(Trace, RoundTripsExactly) {
  for (auto mode : {orch::Mode::kEdgeOnly, orch::Mode::kCollaborative}) {
    const auto t = small_trace(mode);
    std::istringstream in(io::trace_to_string(t));
    const auto loaded = io::read_trace(in, "mem");
    EXPECT_EQ(loaded.scenario, "s");
    EXPECT_EQ(loaded.mode, mode);
    EXPECT_EQ(loaded.seed, 4u);
    EXPECT_EQ(loaded.records, t.records);
    EXPECT_EQ(loaded.summary, t.summary);
    EXPECT_EQ(loaded.drift_windows, (std::vector<orch::Interval>{{10, 50}}));
    EXPECT_EQ(orch::aggregate_metrics(loaded.records, loaded.drift_windows),
              loaded.summary);
  }
}

TEST(Trace, RecordFieldNames) {
  const auto t = small_trace(orch::Mode::kCollaborative);
  const Json rec = io::to_json(t.records.front());
  std::vector<std::string> keys;
  for (const auto& [k, v] : rec.items()) keys.push_back(k);
  const std::vector<std::string> expected{
      "step", "feature", "edge_decision", "drift_report", "offloaded",
      "offload_reason", "cloud_decision", "executed_action", "latency_ms",
      "bytes_up", "collision", "fallback"};
  EXPECT_EQ(keys, expected);
  std::istringstream in(io::trace_to_string(t));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(Json::parse(header)["schema_version"], "1");
}

TEST(Trace, ErrorsNameTheLine) {
  std::string text = io::trace_to_string(small_trace(orch::Mode::kEdgeOnly));
  // Corrupt the third line (second record).
  std::size_t pos = 0;
  for (int i = 0; i < 2; ++i) pos = text.find('\n', pos) + 1;
  text.insert(pos, "{\"step\": \"x\"}\n");
  std::istringstream in(text);
  try {
    io::read_trace(in, "t.jsonl");
    FAIL() << "expected TraceError";
  } catch (const io::TraceError& e) {
    EXPECT_EQ(e.file(), "t.jsonl");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(std::string(e.what()).rfind("t.jsonl:3:", 0), 0u);
  }
  std::istringstream truncated("{\"schema_version\": \"1\"");
  EXPECT_THROW(io::read_trace(truncated, "u"), io::TraceError);
  std::istringstream empty("");
  EXPECT_THROW(io::read_trace(empty, "v"), io::TraceError);
  std::istringstream wrong_version(R"({"schema_version": "9"})");
  EXPECT_THROW(io::read_trace(wrong_version, "w"), io::TraceError);
}

}  // namespace
