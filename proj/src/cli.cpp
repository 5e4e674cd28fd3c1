#include "ecdrive/cli.hpp"

#include <glob.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "ecdrive/serialize.hpp"

namespace ecdrive::cli {

namespace fs = std::filesystem;

const char* const kCsvHeader =
    "row,scenario,mode,seed,offload_rate,mean_latency_ms,p95_latency_ms,"
    "total_bytes_up,collision_count,agreement_rate,in_window_offload_fraction";

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_columns(const orch::Metrics& m) {
  return num(m.offload_rate) + "," + num(m.mean_latency_ms) + "," +
         num(m.p95_latency_ms) + "," + std::to_string(m.total_bytes_up) + "," +
         std::to_string(m.collision_count) + "," + num(m.agreement_rate) + "," +
         num(m.in_window_offload_fraction);
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  return out;
}

}  // namespace

int cmd_validate(const std::string& config_path, std::ostream& out,
                 std::ostream& err) {
  try {
    io::load_experiment(config_path);
  } catch (const orch::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  out << "ok\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, std::ostream& out,
            std::ostream& err) {
  io::ExperimentConfig config;
  try {
    config = io::load_experiment(config_path);
  } catch (const orch::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    err << "output_dir: cannot create " << dir.string()
        << (ec ? ": " + ec.message() : std::string()) << '\n';
    return kExitIo;
  }

  for (const auto seed : config.seeds) {
    for (const auto mode : config.modes) {
      orch::OffloadConfig offload = config.offload;
      offload.mode = mode;
      orch::EpisodeTrace trace;
      try {
        trace = orch::run_episode(config.scenario, config.injections, offload,
                                  seed, config.steps);
      } catch (const sim::ScenarioError& e) {
        err << "scenario error: " << e.what() << '\n';
        return kExitConfig;
      } catch (const orch::ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
      }

      const fs::path file =
          dir / (config.scenario.name + "_" +
                 std::string(orch::to_string(mode)) + "_" +
                 std::to_string(seed) + ".jsonl");
      std::ofstream f(file, std::ios::binary | std::ios::trunc);
      if (f) io::write_trace(f, trace);
      f.close();
      if (!f) {
        err << file.string() << ": cannot write trace\n";
        return kExitIo;
      }

      const auto& m = trace.summary;
      char line[256];
      std::snprintf(line, sizeof(line),
                    "%s %s seed=%llu offload_rate=%.3f mean_latency_ms=%.1f "
                    "bytes_up=%lld collisions=%lld",
                    config.scenario.name.c_str(),
                    std::string(orch::to_string(mode)).c_str(),
                    static_cast<unsigned long long>(seed), m.offload_rate,
                    m.mean_latency_ms,
                    static_cast<long long>(m.total_bytes_up),
                    static_cast<long long>(m.collision_count));
      out << line << " -> " << file.string() << '\n';
    }
  }
  return kExitOk;
}

int cmd_summarize(const std::string& trace_glob, const std::string& out_csv,
                  std::ostream& out, std::ostream& err) {
  const auto files = expand_glob(trace_glob);
  if (files.empty()) {
    err << "no trace files match " << trace_glob << '\n';
    return kExitConfig;
  }

  std::vector<std::string> rows;
  std::map<orch::Mode, std::vector<orch::Metrics>> by_mode;
  for (const auto& file : files) {
    io::LoadedTrace t;
    try {
      t = io::load_trace(file);
    } catch (const io::TraceError& e) {
      err << "malformed trace: " << e.what() << '\n';
      return kExitIntegrity;
    }
    if (t.records.empty()) {
      err << "malformed trace: " << file << ": no step records\n";
      return kExitIntegrity;
    }
    const auto recomputed = orch::aggregate_metrics(t.records, t.drift_windows);
    if (!(recomputed == t.summary)) {
      err << "integrity error: " << file
          << ": embedded summary differs from recomputed metrics\n";
      return kExitIntegrity;
    }
    rows.push_back("episode," + t.scenario + "," +
                   std::string(orch::to_string(t.mode)) + "," +
                   std::to_string(t.seed) + "," + metrics_columns(t.summary));
    by_mode[t.mode].push_back(t.summary);
  }

  for (const auto& [mode, list] : by_mode) {
    const double n = static_cast<double>(list.size());
    double rate = 0, mean = 0, p95 = 0, bytes = 0, coll = 0, agree = 0,
           in_window = 0;
    for (const auto& m : list) {
      rate += m.offload_rate;
      mean += m.mean_latency_ms;
      p95 += m.p95_latency_ms;
      bytes += static_cast<double>(m.total_bytes_up);
      coll += static_cast<double>(m.collision_count);
      agree += m.agreement_rate;
      in_window += m.in_window_offload_fraction;
    }
    rows.push_back("aggregate,*," + std::string(orch::to_string(mode)) + ",," +
                   num(rate / n) + "," + num(mean / n) + "," + num(p95 / n) +
                   "," + num(bytes / n) + "," + num(coll / n) + "," +
                   num(agree / n) + "," + num(in_window / n));
  }

  std::ofstream csv(out_csv, std::ios::binary | std::ios::trunc);
  if (csv) {
    csv << kCsvHeader << '\n';
    for (const auto& r : rows) csv << r << '\n';
  }
  csv.close();
  if (!csv) {
    err << out_csv << ": cannot write CSV\n";
    return kExitIo;
  }
  out << "summarized " << files.size() << " traces into " << out_csv << '\n';
  return kExitOk;
}

}  // namespace ecdrive::cli
