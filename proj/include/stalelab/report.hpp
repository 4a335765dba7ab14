#pragma once

// CSV / JSON artifacts and the parallel sweep runner.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "stalelab/config.hpp"
#include "stalelab/harness.hpp"

namespace stalelab {

// 17 significant digits round-trip every double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string trace_csv(const RunRecord& rec) {
  std::ostringstream out;
  out << "step,loss,grad_norm,effective_delay,misalignment_norm\n";
  for (const StepLog& s : rec.trace) {
    out << s.step << ',' << format_double(s.loss) << ',' << format_double(s.grad_norm) << ',' << s.effective_delay
        << ',' << (s.misalignment ? format_double(*s.misalignment) : "") << '\n';
  }
  return out.str();
}

inline Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json summary_json(const RunRecord& rec) {
  Json j;
  j["fingerprint"] = rec.fingerprint;
  j["iterations_to_threshold"] = rec.iterations_to_threshold ? Json(*rec.iterations_to_threshold) : Json(nullptr);
  j["final_loss"] = finite_or_null(rec.final_loss);
  j["diverged"] = rec.diverged;
  j["reached_origin"] = rec.reached_origin;
  j["wall_steps"] = rec.wall_steps;
  j["rank_warnings"] = rec.rank_warnings;
  Json trace = Json::array();
  for (double m : rec.misalignment_trace()) trace.push_back(finite_or_null(m));
  j["misalignment_norm_trace"] = std::move(trace);
  return j;
}

// Write to a sibling temp file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Sweeps: "grid" maps dotted keys to value lists; cells are the cartesian
// product in sorted-key order, last key fastest.

struct SweepCell {
  std::size_t index = 0;
  std::vector<Json> values;  // one per grid key
  RunConfig config;
  RunRecord record;
};

struct SweepPlan {
  std::vector<std::string> keys;
  std::vector<SweepCell> cells;
  unsigned threads = 1;
};

inline Json::json_pointer dotted_pointer(const std::string& key) {
  std::string p = "/";
  for (char c : key) p += c == '.' ? '/' : c;
  return Json::json_pointer(p);
}

// Parses every cell up front so configuration errors surface before any run.
inline SweepPlan plan_sweep(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected an object");
  if (!doc.contains("grid") || !doc.at("grid").is_object() || doc.at("grid").empty())
    throw ConfigError("grid", "sweep needs a non-empty object of key -> value list");
  SweepPlan plan;
  std::vector<std::vector<Json>> axes;
  for (const auto& [k, v] : doc.at("grid").items()) {
    if (!v.is_array() || v.empty()) throw ConfigError("grid." + k, "expected a non-empty array");
    plan.keys.push_back(k);
    axes.push_back(v.get<std::vector<Json>>());
  }
  ConfigReader root(doc, "");
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  plan.threads = static_cast<unsigned>(root.get<long>("threads", static_cast<long>(hw)));
  if (plan.threads == 0) throw ConfigError("threads", "must be >= 1");

  Json base = doc;
  base.erase("grid");
  base.erase("threads");
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    SweepCell cell;
    cell.index = idx;
    Json cfg = base;
    std::size_t rem = idx;
    cell.values.resize(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      cell.values[k] = axes[k][rem % axes[k].size()];
      rem /= axes[k].size();
    }
    for (std::size_t k = 0; k < axes.size(); ++k) {
      try {
        cfg[dotted_pointer(plan.keys[k])] = cell.values[k];
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("grid." + plan.keys[k], e.what());
      }
    }
    cell.config = parse_run_config(cfg);
    plan.cells.push_back(std::move(cell));
  }
  return plan;
}

// Cells run concurrently; each owns its state. Results land by index, so the
// merged output does not depend on scheduling.
inline void execute_sweep(SweepPlan& plan, const std::optional<std::filesystem::path>& cell_dir = std::nullopt) {
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(plan.cells.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.cells.size(); i = next++) {
      SweepCell& cell = plan.cells[i];
      try {
        cell.record = run_experiment(cell.config);
        if (cell_dir) {
          write_file_atomic(*cell_dir / ("cell_" + std::to_string(i) + ".csv"), trace_csv(cell.record));
          write_file_atomic(*cell_dir / ("cell_" + std::to_string(i) + ".json"), summary_json(cell.record).dump(2) + "\n");
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n = std::min<unsigned>(plan.threads, static_cast<unsigned>(std::max<std::size_t>(plan.cells.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error("sweep cell " + std::to_string(i) + ": " + errors[i]);
}

inline std::string csv_value(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

inline std::string sweep_csv(const SweepPlan& plan) {
  std::ostringstream out;
  out << "cell,fingerprint";
  for (const auto& k : plan.keys) out << ',' << k;
  out << ",iterations_to_threshold,final_loss,diverged,wall_steps\n";
  for (const SweepCell& c : plan.cells) {
    out << c.index << ',' << c.config.fingerprint;
    for (const Json& v : c.values) out << ',' << csv_value(v);
    const RunRecord& r = c.record;
    out << ',' << (r.iterations_to_threshold ? std::to_string(*r.iterations_to_threshold) : "") << ','
        << format_double(r.final_loss) << ',' << (r.diverged ? 1 : 0) << ',' << r.wall_steps << '\n';
  }
  return out.str();
}

}  // namespace stalelab
