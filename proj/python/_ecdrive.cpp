#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ecdrive/codec.hpp"
#include "ecdrive/drift.hpp"
#include "ecdrive/serialize.hpp"

namespace py = pybind11;
using namespace ecdrive;

namespace {

io::Json parse_json(const std::string& text) {
  try {
    return io::Json::parse(text);
  } catch (const io::Json::parse_error& e) {
    throw py::value_error(std::string("invalid JSON: ") + e.what());
  }
}

sim::Scene scene_from(const std::string& scenario_json, std::uint64_t seed) {
  return sim::spawn_scenario(io::parse_scenario_config(parse_json(scenario_json)),
                             seed);
}

std::string run_episode(const std::string& config_json, const std::string& mode,
                        std::uint64_t seed) {
  const auto config = io::parse_experiment(parse_json(config_json));
  auto offload = config.offload;
  const auto m = orch::mode_from_string(mode);
  if (!m) throw py::value_error("unknown mode: " + mode);
  offload.mode = *m;
  py::gil_scoped_release release;
  return io::trace_to_string(orch::run_episode(
      config.scenario, config.injections, offload, seed, config.steps));
}

py::dict metrics_dict(const orch::Metrics& m) {
  py::dict d;
  d["offload_rate"] = m.offload_rate;
  d["mean_latency_ms"] = m.mean_latency_ms;
  d["p95_latency_ms"] = m.p95_latency_ms;
  d["total_bytes_up"] = m.total_bytes_up;
  d["collision_count"] = m.collision_count;
  d["agreement_rate"] = m.agreement_rate;
  d["in_window_offload_fraction"] = m.in_window_offload_fraction;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ecdrive, m) {
  m.doc() = "Bindings for the ecdrive simulation and drift-detection core";

  py::register_exception<orch::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<io::TraceError>(m, "TraceError", PyExc_ValueError);
  py::register_exception<codec::NoDecisionFound>(m, "NoDecisionFound",
                                                 PyExc_ValueError);
  py::register_exception<sim::ScenarioError>(m, "ScenarioError", PyExc_ValueError);

  m.def("validate_config",
        [](const std::string& text) { io::parse_experiment(parse_json(text)); },
        py::arg("config_json"));

  m.def("run_episode", &run_episode, py::arg("config_json"), py::arg("mode"),
        py::arg("seed"),
        "Runs one episode and returns its JSON-Lines trace.");

  m.def("recompute_summary",
        [](const std::string& trace_text) {
          std::istringstream in(trace_text);
          const auto t = io::read_trace(in, "<string>");
          if (t.records.empty()) throw py::value_error("trace has no records");
          return py::make_tuple(
              metrics_dict(t.summary),
              metrics_dict(orch::aggregate_metrics(t.records, t.drift_windows)));
        },
        py::arg("trace_text"),
        "Returns (stored summary, summary recomputed from the records).");

  m.def("describe",
        [](const std::string& scenario_json, std::uint64_t seed) {
          return codec::describe(scene_from(scenario_json, seed)).text;
        },
        py::arg("scenario_json"), py::arg("seed") = 0);

  m.def("featurize",
        [](const std::string& scenario_json, std::uint64_t seed) {
          const auto x = codec::featurize(scene_from(scenario_json, seed));
          return std::vector<double>(x.begin(), x.end());
        },
        py::arg("scenario_json"), py::arg("seed") = 0);

  m.def("parse_decision",
        [](const std::string& text) {
          return std::string(sim::to_string(codec::parse_decision(text)));
        },
        py::arg("text"));

  m.def("ks_two_sample",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          const auto r = drift::ks_two_sample(a, b);
          return py::make_tuple(r.statistic, r.p_value);
        },
        py::arg("a"), py::arg("b"), "Returns (statistic, p_value).");

  m.def("mmd_permutation",
        [](const drift::Matrix& x, const drift::Matrix& y, double bandwidth,
           int n_perm, std::uint64_t seed) {
          const auto r = drift::mmd_permutation(x, y, bandwidth, n_perm, seed);
          return py::make_tuple(r.mmd2, r.p_value);
        },
        py::arg("x"), py::arg("y"), py::arg("bandwidth"), py::arg("n_perm") = 100,
        py::arg("seed") = 0, "Returns (mmd2, p_value).");
}
