#pragma once

// The collaborative driving loop: featurize, decide on the edge, test for
// drift or low confidence, optionally escalate to the cloud, execute, and
// account latency and uplink bytes per step.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecdrive/codec.hpp"
#include "ecdrive/drift.hpp"
#include "ecdrive/policies.hpp"
#include "ecdrive/remote.hpp"
#include "ecdrive/sim.hpp"

namespace ecdrive::orch {

enum class Mode { kEdgeOnly, kCloudOnly, kCollaborative };
enum class OffloadReason { kNone, kDrift, kLowConfidence, kBoth };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view name);
std::string_view to_string(OffloadReason reason);
std::optional<OffloadReason> offload_reason_from_string(std::string_view name);

struct LatencyModel {
  double edge_ms = 50.0;
  double cloud_ms = 700.0;
  double rtt_ms = 100.0;
  std::int64_t uplink_bytes_per_sample = 2048;

  bool operator==(const LatencyModel&) const = default;
};

struct RemoteSettings {
  remote::EndpointConfig endpoint;
  remote::Role role = remote::Role::kCloud;

  bool operator==(const RemoteSettings&) const = default;
};

struct OffloadConfig {
  double tau = 0.5;
  drift::DetectorSettings detector;
  LatencyModel latency;
  Mode mode = Mode::kCollaborative;
  policy::PolicyParams policy;
  std::optional<RemoteSettings> remote;

  bool operator==(const OffloadConfig&) const = default;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError naming the offending field.
void validate(const OffloadConfig& config);

struct StepRecord {
  int step = 0;
  codec::FeatureVector feature{};
  policy::Decision edge_decision;
  std::optional<drift::DriftReport> drift_report;
  bool offloaded = false;
  OffloadReason offload_reason = OffloadReason::kNone;
  std::optional<policy::Decision> cloud_decision;
  sim::Action executed_action = sim::Action::kKeep;
  double latency_ms = 0.0;
  std::int64_t bytes_up = 0;
  bool collision = false;
  // Remote failure or illegal-action fallback taken on this step, if any.
  std::optional<std::string> fallback;

  bool operator==(const StepRecord&) const = default;
};

struct Metrics {
  double offload_rate = 0.0;
  double mean_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  std::int64_t total_bytes_up = 0;
  std::int64_t collision_count = 0;
  // Fraction of offloaded steps where cloud and edge chose the same action;
  // 0 when nothing was offloaded.
  double agreement_rate = 0.0;
  // Offloads inside a drift window / all offloads; 0 when nothing was
  // offloaded.
  double in_window_offload_fraction = 0.0;

  bool operator==(const Metrics&) const = default;
};

/// Half-open step interval [begin, end).
struct Interval {
  int begin = 0;
  int end = 0;

  bool contains(int step) const { return step >= begin && step < end; }
  bool operator==(const Interval&) const = default;
};

/// Steps credited to each injection: [start_step, end_step + window), since a
/// window-based test lags the onset and release of a drift.
std::vector<Interval> drift_windows(
    std::span<const sim::DriftInjection> injections, int window);

struct OffloadDecision {
  bool offload = false;
  OffloadReason reason = OffloadReason::kNone;
};

/// Collaborative: offload iff the report flags drift or the confidence gate
/// fires. EdgeOnly: never. CloudOnly: always, with reason None.
OffloadDecision offload_rule(const drift::DriftReport* report,
                             double confidence, const OffloadConfig& config);

/// Arithmetic mean latency, nearest-rank p95. Throws std::invalid_argument on
/// an empty record list.
Metrics aggregate_metrics(std::span<const StepRecord> records,
                          std::span<const Interval> windows);

/// Nearest-rank percentile (q in (0, 1]) of an unsorted sample.
double nearest_rank_percentile(std::vector<double> values, double q);

struct EpisodeTrace {
  sim::ScenarioConfig scenario;
  std::vector<sim::DriftInjection> injections;
  OffloadConfig config;
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  Metrics summary;
};

/// Runs one episode. Before step 0 the world is driven by the edge policy
/// for detector.n_ref burn-in steps without injections; the features seen
/// there form the detector reference and the episode continues from that
/// state. Deterministic given its arguments unless a remote endpoint is
/// configured.
EpisodeTrace run_episode(const sim::ScenarioConfig& scenario,
                         const std::vector<sim::DriftInjection>& injections,
                         const OffloadConfig& config, std::uint64_t seed,
                         int steps);

}  // namespace ecdrive::orch
