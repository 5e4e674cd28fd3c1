#include "ecdrive/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>

namespace ecdrive::orch {

using policy::Decision;
using sim::Action;
using sim::Scene;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kEdgeOnly:
      return "EdgeOnly";
    case Mode::kCloudOnly:
      return "CloudOnly";
    case Mode::kCollaborative:
      return "Collaborative";
  }
  return "Collaborative";
}

std::optional<Mode> mode_from_string(std::string_view name) {
  for (Mode m : {Mode::kEdgeOnly, Mode::kCloudOnly, Mode::kCollaborative}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view to_string(OffloadReason reason) {
  switch (reason) {
    case OffloadReason::kNone:
      return "None";
    case OffloadReason::kDrift:
      return "Drift";
    case OffloadReason::kLowConfidence:
      return "LowConfidence";
    case OffloadReason::kBoth:
      return "Both";
  }
  return "None";
}

std::optional<OffloadReason> offload_reason_from_string(std::string_view name) {
  for (OffloadReason r : {OffloadReason::kNone, OffloadReason::kDrift,
                          OffloadReason::kLowConfidence, OffloadReason::kBoth}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void validate(const OffloadConfig& c) {
  require(c.tau >= 0 && c.tau <= 1, "offload.tau: must be in [0, 1]");
  const auto& det = c.detector;
  require(det.alpha > 0 && det.alpha < 1,
          "offload.detector.alpha: must be in (0, 1)");
  require(det.window >= 10, "offload.detector.window: must be >= 10");
  require(det.n_ref >= 30, "offload.detector.n_ref: must be >= 30");
  require(det.n_ref >= det.window,
          "offload.detector.n_ref: must be >= detector.window");
  require(det.n_perm >= 20, "offload.detector.n_perm: must be >= 20");
  const auto& lat = c.latency;
  require(lat.edge_ms >= 0, "offload.latency.edge_ms: must be >= 0");
  require(lat.cloud_ms >= 0, "offload.latency.cloud_ms: must be >= 0");
  require(lat.rtt_ms >= 0, "offload.latency.rtt_ms: must be >= 0");
  require(lat.uplink_bytes_per_sample >= 0,
          "offload.latency.uplink_bytes_per_sample: must be >= 0");
  const auto& s = c.policy.safety;
  require(s.time_headway > 0, "offload.policy.time_headway: must be > 0");
  require(s.min_gap >= 0, "offload.policy.min_gap: must be >= 0");
  require(s.edge_kappa > 0 && s.cloud_kappa > 0,
          "offload.policy.kappa: must be > 0");
  require(c.policy.cost.horizon >= 1, "offload.policy.horizon: must be >= 1");
  if (c.remote) {
    require(!c.remote->endpoint.base_url.empty(),
            "remote.base_url: must be non-empty");
    require(c.remote->endpoint.timeout_ms > 0,
            "remote.timeout_ms: must be > 0");
  }
}

std::vector<Interval> drift_windows(
    std::span<const sim::DriftInjection> injections, int window) {
  std::vector<Interval> out;
  out.reserve(injections.size());
  for (const auto& inj : injections) {
    out.push_back({inj.start_step, inj.end_step + window});
  }
  return out;
}

OffloadDecision offload_rule(const drift::DriftReport* report,
                             double confidence, const OffloadConfig& config) {
  switch (config.mode) {
    case Mode::kEdgeOnly:
      return {false, OffloadReason::kNone};
    case Mode::kCloudOnly:
      return {true, OffloadReason::kNone};
    case Mode::kCollaborative:
      break;
  }
  const bool drift = report && report->is_drift;
  const bool low = drift::confidence_gate(confidence, config.tau);
  if (drift && low) return {true, OffloadReason::kBoth};
  if (drift) return {true, OffloadReason::kDrift};
  if (low) return {true, OffloadReason::kLowConfidence};
  return {false, OffloadReason::kNone};
}

double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw std::invalid_argument("nearest_rank_percentile: empty sample");
  }
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

Metrics aggregate_metrics(std::span<const StepRecord> records,
                          std::span<const Interval> windows) {
  if (records.empty()) {
    throw std::invalid_argument("aggregate_metrics: no records");
  }
  Metrics m;
  std::int64_t offloads = 0;
  std::int64_t agree = 0;
  std::int64_t in_window = 0;
  double latency_sum = 0.0;
  std::vector<double> latencies;
  latencies.reserve(records.size());
  for (const auto& r : records) {
    latency_sum += r.latency_ms;
    latencies.push_back(r.latency_ms);
    m.total_bytes_up += r.bytes_up;
    if (r.collision) ++m.collision_count;
    if (!r.offloaded) continue;
    ++offloads;
    if (r.cloud_decision &&
        r.cloud_decision->action == r.edge_decision.action) {
      ++agree;
    }
    if (std::any_of(windows.begin(), windows.end(),
                    [&](const Interval& w) { return w.contains(r.step); })) {
      ++in_window;
    }
  }
  const auto n = static_cast<double>(records.size());
  m.offload_rate = static_cast<double>(offloads) / n;
  m.mean_latency_ms = latency_sum / n;
  m.p95_latency_ms = nearest_rank_percentile(std::move(latencies), 0.95);
  if (offloads > 0) {
    m.agreement_rate =
        static_cast<double>(agree) / static_cast<double>(offloads);
    m.in_window_offload_fraction =
        static_cast<double>(in_window) / static_cast<double>(offloads);
  }
  return m;
}

namespace {

struct RemoteOutcome {
  Decision decision;
  double elapsed_ms = 0.0;
  std::optional<std::string> fallback;
};

// Calls the remote endpoint; on failure returns the local policy of the same
// role and records why.
template <typename LocalPolicy>
RemoteOutcome remote_or_local(const Scene& scene, const RemoteSettings& remote,
                              LocalPolicy&& local) {
  RemoteOutcome out;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  try {
    out.decision = remote::remote_decide(scene, remote.endpoint, remote.role);
    out.elapsed_ms = elapsed();
  } catch (const remote::RemoteUnavailable& e) {
    out.elapsed_ms = e.timed_out()
                         ? static_cast<double>(remote.endpoint.timeout_ms)
                         : elapsed();
    out.fallback = std::string("RemoteUnavailable: ") + e.what();
    out.decision = local();
  } catch (const codec::NoDecisionFound& e) {
    out.elapsed_ms = elapsed();
    out.fallback = std::string("NoDecisionFound: ") + e.what();
    out.decision = local();
  }
  return out;
}

void append_note(std::optional<std::string>& slot, const std::string& note) {
  slot = slot ? *slot + "; " + note : note;
}

}  // namespace

EpisodeTrace run_episode(const sim::ScenarioConfig& scenario,
                         const std::vector<sim::DriftInjection>& injections,
                         const OffloadConfig& config, std::uint64_t seed,
                         int steps) {
  if (steps < 1) throw ConfigError("steps: must be >= 1");
  sim::validate(scenario);
  validate(config);
  for (const auto& inj : injections) sim::validate(inj, scenario.lane_count);

  const auto& params = config.policy;
  const auto& dyn = scenario.dynamics;  // world physics; the policies use their own copy
  const auto& lat = config.latency;
  const int window = config.detector.window;

  Scene scene = sim::spawn_scenario(scenario, seed);
  Rng traffic_rng(derive_seed(seed, Stream::kTraffic));
  Rng observe_rng(derive_seed(seed, Stream::kObservation));
  const std::uint64_t detector_seed = derive_seed(seed, Stream::kDetector);

  // Burn-in: in-distribution reference data for the detector.
  std::vector<codec::FeatureVector> reference;
  reference.reserve(config.detector.n_ref);
  for (int i = 0; i < config.detector.n_ref; ++i) {
    scene = sim::clear_transients(scene, {}, i, scenario.noise_sigma);
    reference.push_back(codec::featurize(scene, observe_rng));
    const Decision d = policy::edge_decide(scene, params);
    scene = sim::recycle_traffic(sim::step(scene, d.action, dyn.dt, dyn),
                                 scenario, traffic_rng);
  }

  std::optional<drift::DriftDetector> detector;
  std::deque<codec::FeatureVector> history;
  if (config.mode == Mode::kCollaborative) {
    detector = drift::DriftDetector::fit(reference, config.detector,
                                         detector_seed);
    history.assign(reference.end() - window, reference.end());
  }

  const bool remote_edge =
      config.remote && config.remote->role == remote::Role::kEdge;
  const bool remote_cloud =
      config.remote && config.remote->role == remote::Role::kCloud;

  EpisodeTrace trace;
  trace.scenario = scenario;
  trace.injections = injections;
  trace.config = config;
  trace.seed = seed;
  trace.records.reserve(steps);

  for (int k = 0; k < steps; ++k) {
    // Collect and perturb the driving data.
    scene = sim::clear_transients(scene, injections, k, scenario.noise_sigma);
    for (const auto& inj : injections) scene = sim::inject_drift(scene, inj, k);

    StepRecord rec;
    rec.step = k;
    rec.feature = codec::featurize(scene, observe_rng);

    // Edge inference always runs first.
    double edge_latency = lat.edge_ms;
    if (remote_edge) {
      RemoteOutcome r = remote_or_local(
          scene, *config.remote, [&] { return policy::edge_decide(scene, params); });
      rec.edge_decision = std::move(r.decision);
      edge_latency = r.elapsed_ms;
      if (r.fallback) append_note(rec.fallback, *r.fallback);
    } else {
      rec.edge_decision = policy::edge_decide(scene, params);
    }

    // Performance monitoring.
    if (detector) {
      history.pop_front();
      history.push_back(rec.feature);
      const std::vector<codec::FeatureVector> win(history.begin(),
                                                  history.end());
      rec.drift_report = detector->predict(
          std::span<const codec::FeatureVector>(win),
          derive_seed(detector_seed, static_cast<std::uint64_t>(k)));
    }
    const OffloadDecision off = offload_rule(
        rec.drift_report ? &*rec.drift_report : nullptr,
        rec.edge_decision.confidence, config);
    rec.offloaded = off.offload;
    rec.offload_reason = off.reason;
    rec.executed_action = rec.edge_decision.action;
    rec.latency_ms = edge_latency;

    if (rec.offloaded) {
      rec.bytes_up = lat.uplink_bytes_per_sample;
      if (remote_cloud) {
        RemoteOutcome r = remote_or_local(scene, *config.remote, [&] {
          return policy::cloud_decide(scene, params);
        });
        rec.cloud_decision = std::move(r.decision);
        rec.latency_ms += r.elapsed_ms;
        if (r.fallback) append_note(rec.fallback, *r.fallback);
      } else {
        rec.cloud_decision = policy::cloud_decide(scene, params);
        rec.latency_ms += lat.rtt_ms + lat.cloud_ms;
      }
      rec.executed_action = rec.cloud_decision->action;
    }

    if (!sim::is_legal(rec.executed_action, scene.ego.lane,
                       scene.lane_count)) {
      append_note(rec.fallback,
                  "illegal action " +
                      std::string(sim::to_string(rec.executed_action)) +
                      " mapped to Keep");
      rec.executed_action = Action::kKeep;
    }

    const Scene next = sim::step(scene, rec.executed_action, dyn.dt, dyn);
    rec.collision = sim::swept_collision(scene, next, dyn);
    scene = sim::recycle_traffic(next, scenario, traffic_rng);
    trace.records.push_back(std::move(rec));
  }

  const auto windows = drift_windows(injections, window);
  trace.summary = aggregate_metrics(trace.records, windows);
  return trace;
}

}  // namespace ecdrive::orch
