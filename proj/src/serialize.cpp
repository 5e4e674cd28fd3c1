#include "ecdrive/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ecdrive::io {

using orch::ConfigError;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Strict reader over one JSON object: typed accessors with field-level error
// messages, and rejection of unknown keys.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError((path_.empty() ? std::string("config") : path_) +
                        ": must be a JSON object");
    }
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& need(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError(join(path_, key) + ": required field is missing");
    return *v;
  }

  template <typename T>
  void opt(const std::string& key, T& out) {
    if (const Json* v = find(key)) out = convert<T>(*v, join(path_, key));
  }

  template <typename T>
  void req(const std::string& key, T& out) {
    out = convert<T>(need(key), join(path_, key));
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(join(path_, it.key()) + ": unknown field");
      }
    }
  }

  template <typename T>
  static T convert(const Json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
      }
      throw ConfigError(where + ": expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        throw ConfigError(where + ": expected an integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (v.is_null()) return std::nullopt;
      return convert<double>(v, where);
    } else {
      static_assert(std::is_same_v<T, double>);
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      return v.get<double>();
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_dynamics(const Json& j, const std::string& path, sim::Dynamics& d) {
  Fields f(j, path);
  f.opt("dt", d.dt);
  f.opt("v_max", d.v_max);
  f.opt("accelerate", d.accelerate);
  f.opt("decelerate", d.decelerate);
  f.opt("reversion", d.reversion);
  f.opt("follow_time_gap", d.follow_time_gap);
  f.opt("follow_min_clearance", d.follow_min_clearance);
  f.opt("follow_comfort_decel", d.follow_comfort_decel);
  f.opt("follow_max_decel", d.follow_max_decel);
  f.finish();
}

sim::ScenarioConfig parse_scenario(const Json& j, const std::string& path) {
  sim::ScenarioConfig c;
  Fields f(j, path);
  f.opt("name", c.name);
  f.opt("lane_count", c.lane_count);
  f.opt("ego_lane", c.ego_lane);
  f.opt("ego_speed", c.ego_speed);
  f.opt("ego_position", c.ego_position);
  f.opt("ego_accel", c.ego_accel);
  f.opt("vehicle_count", c.vehicle_count);
  f.opt("speed_min", c.speed_min);
  f.opt("speed_max", c.speed_max);
  f.opt("spawn_behind", c.spawn_behind);
  f.opt("spawn_ahead", c.spawn_ahead);
  f.opt("min_spawn_gap", c.min_spawn_gap);
  f.opt("noise_sigma", c.noise_sigma);
  f.opt("recycle", c.recycle);
  f.opt("recycle_behind", c.recycle_behind);
  f.opt("recycle_ahead", c.recycle_ahead);
  if (const Json* v = f.find("vehicles")) {
    if (!v->is_array()) {
      throw ConfigError(f.path("vehicles") + ": expected an array");
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string p = f.path("vehicles") + "[" + std::to_string(i) + "]";
      Fields vf((*v)[i], p);
      sim::VehicleSpec s;
      vf.req("id", s.id);
      vf.req("lane", s.lane);
      vf.req("position", s.position);
      vf.req("speed", s.speed);
      vf.opt("accel", s.accel);
      vf.finish();
      c.vehicles.push_back(s);
    }
  }
  if (const Json* v = f.find("dynamics")) {
    parse_dynamics(*v, f.path("dynamics"), c.dynamics);
  }
  f.finish();
  return c;
}

sim::DriftInjection parse_injection(const Json& j, const std::string& path) {
  sim::DriftInjection inj;
  Fields f(j, path);
  std::string kind;
  f.req("kind", kind);
  const auto k = sim::drift_kind_from_string(kind);
  if (!k) {
    throw ConfigError(f.path("kind") +
                      ": expected NewObstacle, TrafficPatternShift or "
                      "SensorNoise");
  }
  inj.kind = *k;
  f.req("start_step", inj.start_step);
  f.req("end_step", inj.end_step);
  switch (inj.kind) {
    case sim::DriftKind::kNewObstacle:
      f.opt("lane", inj.lane);
      f.opt("ahead_m", inj.ahead_m);
      f.opt("extent_m", inj.extent_m);
      break;
    case sim::DriftKind::kTrafficPatternShift:
      f.req("speed_offset", inj.speed_offset);
      break;
    case sim::DriftKind::kSensorNoise:
      f.req("sigma", inj.sigma);
      break;
  }
  f.finish();
  return inj;
}

std::vector<sim::DriftInjection> parse_injections(const Json& j,
                                                  const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<sim::DriftInjection> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_injection(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void parse_policy(const Json& j, const std::string& path,
                  policy::PolicyParams& p) {
  Fields f(j, path);
  f.opt("time_headway", p.safety.time_headway);
  f.opt("min_gap", p.safety.min_gap);
  f.opt("edge_kappa", p.safety.edge_kappa);
  f.opt("cloud_kappa", p.safety.cloud_kappa);
  f.opt("collision_weight", p.cost.collision);
  f.opt("speed_weight", p.cost.speed);
  f.opt("lane_change_weight", p.cost.lane_change);
  f.opt("headway_weight", p.cost.headway);
  f.opt("horizon", p.cost.horizon);
  f.opt("speed_reference", p.cost.speed_reference);
  f.opt("perception_range", p.cost.perception_range);
  f.finish();
}

orch::RemoteSettings parse_remote(const Json& j, const std::string& path) {
  orch::RemoteSettings r;
  Fields f(j, path);
  f.req("base_url", r.endpoint.base_url);
  f.opt("model", r.endpoint.model);
  f.opt("timeout_ms", r.endpoint.timeout_ms);
  std::string role = "Cloud";
  f.opt("role", role);
  const auto parsed = remote::role_from_string(role);
  if (!parsed) throw ConfigError(f.path("role") + ": expected Edge or Cloud");
  r.role = *parsed;
  f.finish();
  return r;
}

orch::OffloadConfig parse_offload(const Json& j, const std::string& path) {
  orch::OffloadConfig c;
  Fields f(j, path);
  f.opt("tau", c.tau);
  if (const Json* v = f.find("mode")) {
    const auto m = orch::mode_from_string(
        Fields::convert<std::string>(*v, f.path("mode")));
    if (!m) {
      throw ConfigError(f.path("mode") +
                        ": expected EdgeOnly, CloudOnly or Collaborative");
    }
    c.mode = *m;
  }
  if (const Json* v = f.find("detector")) {
    Fields d(*v, f.path("detector"));
    std::string method = "KS";
    d.opt("method", method);
    const auto m = drift::method_from_string(method);
    if (!m) throw ConfigError(d.path("method") + ": expected KS or MMD");
    c.detector.method = *m;
    d.opt("alpha", c.detector.alpha);
    d.opt("window", c.detector.window);
    d.opt("n_ref", c.detector.n_ref);
    d.opt("n_perm", c.detector.n_perm);
    d.finish();
  }
  if (const Json* v = f.find("latency")) {
    Fields l(*v, f.path("latency"));
    l.opt("edge_ms", c.latency.edge_ms);
    l.opt("cloud_ms", c.latency.cloud_ms);
    l.opt("rtt_ms", c.latency.rtt_ms);
    l.opt("uplink_bytes_per_sample", c.latency.uplink_bytes_per_sample);
    l.finish();
  }
  if (const Json* v = f.find("policy")) {
    parse_policy(*v, f.path("policy"), c.policy);
  }
  // Snapshots carry a redacted remote block; it is informational only.
  f.find("remote");
  f.finish();
  return c;
}

template <typename Fn>
void rethrow_as_config(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const sim::ScenarioError& e) {
    throw ConfigError(prefix + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment(const Json& j) {
  ExperimentConfig c;
  Fields f(j, "");
  if (const Json* v = f.find("scenario")) c.scenario = parse_scenario(*v, "scenario");
  if (const Json* v = f.find("injections")) {
    c.injections = parse_injections(*v, "injections");
  }
  if (const Json* v = f.find("offload")) c.offload = parse_offload(*v, "offload");
  if (const Json* v = f.find("remote")) c.offload.remote = parse_remote(*v, "remote");
  if (const Json* v = f.find("modes")) {
    if (!v->is_array()) throw ConfigError("modes: expected an array");
    c.modes.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string where = "modes[" + std::to_string(i) + "]";
      const auto m =
          orch::mode_from_string(Fields::convert<std::string>((*v)[i], where));
      if (!m) {
        throw ConfigError(where +
                          ": expected EdgeOnly, CloudOnly or Collaborative");
      }
      c.modes.push_back(*m);
    }
  }
  const Json& seeds = f.need("seeds");
  if (!seeds.is_array()) throw ConfigError("seeds: expected an array");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    c.seeds.push_back(Fields::convert<std::uint64_t>(
        seeds[i], "seeds[" + std::to_string(i) + "]"));
  }
  f.req("steps", c.steps);
  f.req("output_dir", c.output_dir);
  f.finish();

  // Policies simulate with the scenario's dynamics.
  c.offload.policy.dynamics = c.scenario.dynamics;

  rethrow_as_config("", [&] { sim::validate(c.scenario); });
  for (std::size_t i = 0; i < c.injections.size(); ++i) {
    rethrow_as_config("injections[" + std::to_string(i) + "].", [&] {
      sim::validate(c.injections[i], c.scenario.lane_count);
    });
  }
  orch::validate(c.offload);
  if (c.modes.empty()) throw ConfigError("modes: must be non-empty");
  if (c.seeds.empty()) throw ConfigError("seeds: must be non-empty");
  if (c.steps < 1) throw ConfigError("steps: must be >= 1");
  if (c.output_dir.empty()) throw ConfigError("output_dir: must be non-empty");
  return c;
}

sim::ScenarioConfig parse_scenario_config(const Json& j) {
  sim::ScenarioConfig c;
  rethrow_as_config("", [&] {
    c = parse_scenario(j, "scenario");
    sim::validate(c);
  });
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return parse_experiment(j);
}

// ---------------------------------------------------------------------------

Json to_json(const sim::ScenarioConfig& c) {
  Json vehicles = Json::array();
  for (const auto& v : c.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"lane", v.lane},
                        {"position", v.position},
                        {"speed", v.speed},
                        {"accel", v.accel}});
  }
  const auto& d = c.dynamics;
  return Json{{"name", c.name},
              {"lane_count", c.lane_count},
              {"ego_lane", c.ego_lane},
              {"ego_speed", c.ego_speed},
              {"ego_position", c.ego_position},
              {"ego_accel", c.ego_accel},
              {"vehicle_count", c.vehicle_count},
              {"speed_min", c.speed_min},
              {"speed_max", c.speed_max},
              {"spawn_behind", c.spawn_behind},
              {"spawn_ahead", c.spawn_ahead},
              {"min_spawn_gap", c.min_spawn_gap},
              {"noise_sigma", c.noise_sigma},
              {"recycle", c.recycle},
              {"recycle_behind", c.recycle_behind},
              {"recycle_ahead", c.recycle_ahead},
              {"vehicles", vehicles},
              {"dynamics",
               {{"dt", d.dt},
                {"v_max", d.v_max},
                {"accelerate", d.accelerate},
                {"decelerate", d.decelerate},
                {"reversion", d.reversion},
                {"follow_time_gap", d.follow_time_gap},
                {"follow_min_clearance", d.follow_min_clearance},
                {"follow_comfort_decel", d.follow_comfort_decel},
                {"follow_max_decel", d.follow_max_decel}}}};
}

Json to_json(const sim::DriftInjection& inj) {
  Json j{{"kind", std::string(sim::to_string(inj.kind))},
         {"start_step", inj.start_step},
         {"end_step", inj.end_step}};
  switch (inj.kind) {
    case sim::DriftKind::kNewObstacle:
      j["lane"] = inj.lane;
      j["ahead_m"] = inj.ahead_m;
      j["extent_m"] = inj.extent_m;
      break;
    case sim::DriftKind::kTrafficPatternShift:
      j["speed_offset"] = inj.speed_offset;
      break;
    case sim::DriftKind::kSensorNoise:
      j["sigma"] = inj.sigma;
      break;
  }
  return j;
}

Json to_json(const orch::OffloadConfig& c) {
  const auto& p = c.policy;
  Json policy{{"time_headway", p.safety.time_headway},
              {"min_gap", p.safety.min_gap},
              {"edge_kappa", p.safety.edge_kappa},
              {"cloud_kappa", p.safety.cloud_kappa},
              {"collision_weight", p.cost.collision},
              {"speed_weight", p.cost.speed},
              {"lane_change_weight", p.cost.lane_change},
              {"headway_weight", p.cost.headway},
              {"horizon", p.cost.horizon},
              {"speed_reference", p.cost.speed_reference
                                      ? Json(*p.cost.speed_reference)
                                      : Json(nullptr)},
              {"perception_range", p.cost.perception_range}};
  Json j{{"tau", c.tau},
         {"mode", std::string(orch::to_string(c.mode))},
         {"detector",
          {{"method", std::string(drift::to_string(c.detector.method))},
           {"alpha", c.detector.alpha},
           {"window", c.detector.window},
           {"n_ref", c.detector.n_ref},
           {"n_perm", c.detector.n_perm}}},
         {"latency",
          {{"edge_ms", c.latency.edge_ms},
           {"cloud_ms", c.latency.cloud_ms},
           {"rtt_ms", c.latency.rtt_ms},
           {"uplink_bytes_per_sample", c.latency.uplink_bytes_per_sample}}},
         {"policy", policy}};
  if (c.remote) j["remote"] = {{"base_url", c.remote->endpoint.base_url}};
  return j;
}

Json to_json(const policy::Decision& d) {
  return Json{{"action", std::string(sim::to_string(d.action))},
              {"rationale", d.rationale},
              {"confidence", d.confidence},
              {"source", std::string(policy::to_string(d.source))}};
}

Json to_json(const drift::DriftReport& r) {
  return Json{{"is_drift", r.is_drift},
              {"p_values", r.p_values},
              {"statistic", r.statistics},
              {"threshold_used", r.threshold_used}};
}

Json to_json(const orch::StepRecord& r) {
  return Json{
      {"step", r.step},
      {"feature", r.feature},
      {"edge_decision", to_json(r.edge_decision)},
      {"drift_report", r.drift_report ? to_json(*r.drift_report) : Json(nullptr)},
      {"offloaded", r.offloaded},
      {"offload_reason", std::string(orch::to_string(r.offload_reason))},
      {"cloud_decision",
       r.cloud_decision ? to_json(*r.cloud_decision) : Json(nullptr)},
      {"executed_action", std::string(sim::to_string(r.executed_action))},
      {"latency_ms", r.latency_ms},
      {"bytes_up", r.bytes_up},
      {"collision", r.collision},
      {"fallback", r.fallback ? Json(*r.fallback) : Json(nullptr)}};
}

Json to_json(const orch::Metrics& m) {
  return Json{{"offload_rate", m.offload_rate},
              {"mean_latency_ms", m.mean_latency_ms},
              {"p95_latency_ms", m.p95_latency_ms},
              {"total_bytes_up", m.total_bytes_up},
              {"collision_count", m.collision_count},
              {"agreement_rate", m.agreement_rate},
              {"in_window_offload_fraction", m.in_window_offload_fraction}};
}

Json config_snapshot(const orch::EpisodeTrace& trace) {
  Json injections = Json::array();
  for (const auto& inj : trace.injections) injections.push_back(to_json(inj));
  return Json{{"scenario", to_json(trace.scenario)},
              {"injections", injections},
              {"offload", to_json(trace.config)}};
}

void write_trace(std::ostream& out, const orch::EpisodeTrace& trace) {
  const Json header{
      {"schema_version", kSchemaVersion},
      {"scenario", trace.scenario.name},
      {"mode", std::string(orch::to_string(trace.config.mode))},
      {"seed", trace.seed},
      {"steps", trace.records.size()},
      {"config", config_snapshot(trace)},
      {"summary", to_json(trace.summary)}};
  out << header.dump() << '\n';
  for (const auto& r : trace.records) out << to_json(r).dump() << '\n';
}

std::string trace_to_string(const orch::EpisodeTrace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

policy::Decision parse_decision_json(const Json& j, const std::string& path) {
  Fields f(j, path);
  policy::Decision d;
  std::string action;
  f.req("action", action);
  const auto a = sim::action_from_string(action);
  if (!a) throw ConfigError(f.path("action") + ": unknown action " + action);
  d.action = *a;
  const Json& rationale = f.need("rationale");
  if (!rationale.is_array()) {
    throw ConfigError(f.path("rationale") + ": expected an array");
  }
  for (const auto& line : rationale) {
    d.rationale.push_back(
        Fields::convert<std::string>(line, f.path("rationale")));
  }
  f.req("confidence", d.confidence);
  std::string source;
  f.req("source", source);
  const auto s = policy::source_from_string(source);
  if (!s) throw ConfigError(f.path("source") + ": unknown source " + source);
  d.source = *s;
  f.finish();
  return d;
}

std::vector<double> parse_doubles(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(Fields::convert<double>(v, path));
  return out;
}

}  // namespace

orch::StepRecord parse_step_record(const Json& j) {
  Fields f(j, "record");
  orch::StepRecord r;
  f.req("step", r.step);
  const auto feature = parse_doubles(f.need("feature"), f.path("feature"));
  if (feature.size() != codec::kFeatureDim) {
    throw ConfigError(f.path("feature") + ": expected 15 values");
  }
  std::copy(feature.begin(), feature.end(), r.feature.begin());
  r.edge_decision =
      parse_decision_json(f.need("edge_decision"), f.path("edge_decision"));
  if (const Json& dr = f.need("drift_report"); !dr.is_null()) {
    Fields df(dr, f.path("drift_report"));
    drift::DriftReport rep;
    df.req("is_drift", rep.is_drift);
    rep.p_values = parse_doubles(df.need("p_values"), df.path("p_values"));
    rep.statistics = parse_doubles(df.need("statistic"), df.path("statistic"));
    df.req("threshold_used", rep.threshold_used);
    df.finish();
    r.drift_report = std::move(rep);
  }
  f.req("offloaded", r.offloaded);
  std::string reason;
  f.req("offload_reason", reason);
  const auto parsed_reason = orch::offload_reason_from_string(reason);
  if (!parsed_reason) {
    throw ConfigError(f.path("offload_reason") + ": unknown reason " + reason);
  }
  r.offload_reason = *parsed_reason;
  if (const Json& cd = f.need("cloud_decision"); !cd.is_null()) {
    r.cloud_decision = parse_decision_json(cd, f.path("cloud_decision"));
  }
  std::string executed;
  f.req("executed_action", executed);
  const auto a = sim::action_from_string(executed);
  if (!a) {
    throw ConfigError(f.path("executed_action") + ": unknown action " +
                      executed);
  }
  r.executed_action = *a;
  f.req("latency_ms", r.latency_ms);
  f.req("bytes_up", r.bytes_up);
  f.req("collision", r.collision);
  if (const Json& fb = f.need("fallback"); !fb.is_null()) {
    r.fallback = Fields::convert<std::string>(fb, f.path("fallback"));
  }
  f.finish();
  return r;
}

orch::Metrics parse_metrics(const Json& j) {
  Fields f(j, "summary");
  orch::Metrics m;
  f.req("offload_rate", m.offload_rate);
  f.req("mean_latency_ms", m.mean_latency_ms);
  f.req("p95_latency_ms", m.p95_latency_ms);
  f.req("total_bytes_up", m.total_bytes_up);
  f.req("collision_count", m.collision_count);
  f.req("agreement_rate", m.agreement_rate);
  f.req("in_window_offload_fraction", m.in_window_offload_fraction);
  f.finish();
  return m;
}

LoadedTrace read_trace(std::istream& in, const std::string& name) {
  LoadedTrace t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (!have_header) {
        Fields h(j, "header");
        std::string version;
        h.req("schema_version", version);
        if (version != kSchemaVersion) {
          throw ConfigError("header.schema_version: unsupported version " +
                            version);
        }
        h.req("scenario", t.scenario);
        std::string mode;
        h.req("mode", mode);
        const auto m = orch::mode_from_string(mode);
        if (!m) throw ConfigError("header.mode: unknown mode " + mode);
        t.mode = *m;
        h.req("seed", t.seed);
        int steps = 0;
        h.req("steps", steps);
        Fields cfg(h.need("config"), "header.config");
        cfg.find("scenario");
        const auto injections =
            parse_injections(cfg.need("injections"), "header.config.injections");
        const auto offload =
            parse_offload(cfg.need("offload"), "header.config.offload");
        cfg.finish();
        t.drift_windows =
            orch::drift_windows(injections, offload.detector.window);
        t.summary = parse_metrics(h.need("summary"));
        h.finish();
        have_header = true;
      } else {
        t.records.push_back(parse_step_record(j));
      }
    } catch (const Json::exception& e) {
      throw TraceError(name, line_no, e.what());
    } catch (const ConfigError& e) {
      throw TraceError(name, line_no, e.what());
    }
  }
  if (!have_header) throw TraceError(name, line_no, "missing header line");
  return t;
}

LoadedTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError(path, 0, "cannot open trace file");
  return read_trace(in, path);
}

}  // namespace ecdrive::io
