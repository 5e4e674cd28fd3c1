#pragma once

// JSON forms of the experiment config and the JSON-Lines episode trace.
//
// Trace layout (schema_version "1"):
//   line 1: {"schema_version", "scenario", "mode", "seed", "steps", "config",
//            "summary"}
//   then one object per StepRecord.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecdrive/orchestrator.hpp"

namespace ecdrive::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

struct ExperimentConfig {
  sim::ScenarioConfig scenario;
  std::vector<sim::DriftInjection> injections;
  orch::OffloadConfig offload;  // offload.mode is set per episode
  std::vector<orch::Mode> modes{orch::Mode::kCollaborative};
  std::vector<std::uint64_t> seeds;
  int steps = 0;
  std::string output_dir;
};

/// Parses and validates an experiment config. Throws orch::ConfigError with a
/// field-level message (e.g. "steps: required field is missing").
ExperimentConfig parse_experiment(const Json& j);
ExperimentConfig load_experiment(const std::string& path);

/// A bare scenario object, validated. Errors are reported as in
/// parse_experiment with a "scenario." prefix.
sim::ScenarioConfig parse_scenario_config(const Json& j);

Json to_json(const sim::ScenarioConfig& c);
Json to_json(const sim::DriftInjection& inj);
Json to_json(const orch::OffloadConfig& c);  // remote block redacted
Json to_json(const policy::Decision& d);
Json to_json(const drift::DriftReport& r);
Json to_json(const orch::StepRecord& r);
Json to_json(const orch::Metrics& m);

/// Config snapshot embedded in trace headers; never contains credentials.
Json config_snapshot(const orch::EpisodeTrace& trace);

class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& file, std::size_t line,
             const std::string& message)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
        file_(file),
        line_(line) {}
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

void write_trace(std::ostream& out, const orch::EpisodeTrace& trace);
std::string trace_to_string(const orch::EpisodeTrace& trace);

struct LoadedTrace {
  std::string scenario;
  orch::Mode mode = orch::Mode::kCollaborative;
  std::uint64_t seed = 0;
  std::vector<orch::Interval> drift_windows;
  orch::Metrics summary;
  std::vector<orch::StepRecord> records;
};

/// Parses a trace stream. Throws TraceError naming `name` and the 1-based
/// line of the first malformed entry.
LoadedTrace read_trace(std::istream& in, const std::string& name);
LoadedTrace load_trace(const std::string& path);

orch::StepRecord parse_step_record(const Json& j);
orch::Metrics parse_metrics(const Json& j);

}  // namespace ecdrive::io
