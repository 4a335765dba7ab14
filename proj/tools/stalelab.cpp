// Command-line front end.
//
//   stalelab run <config.json> [--out DIR] [--name STEM]
//   stalelab sweep <config.json> [--out FILE] [--cells DIR]
//   stalelab spiral <config.json> [--out FILE]
//   stalelab stages <table.json>
//   stalelab verify [--stage-table]
//
// Exit codes: 0 ok, 1 verification failure, 2 configuration error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stalelab/config.hpp"
#include "stalelab/harness.hpp"
#include "stalelab/pipemodel.hpp"
#include "stalelab/report.hpp"
#include "stalelab/verify.hpp"

namespace fs = std::filesystem;
using namespace stalelab;

namespace {

int cmd_run(const std::string& path, const std::string& out_dir, std::string stem) {
  const RunConfig cfg = parse_run_config(load_json_file(path));
  const RunRecord rec = run_experiment(cfg);
  if (stem.empty()) stem = fs::path(path).stem().string();
  fs::create_directories(out_dir);
  write_file_atomic(fs::path(out_dir) / (stem + ".csv"), trace_csv(rec));
  write_file_atomic(fs::path(out_dir) / (stem + ".json"), summary_json(rec).dump(2) + "\n");
  std::cout << summary_json(rec).dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& out, const std::string& cells) {
  SweepPlan plan = plan_sweep(load_json_file(path));
  std::optional<fs::path> cell_dir;
  if (!cells.empty()) {
    fs::create_directories(cells);
    cell_dir = cells;
  }
  execute_sweep(plan, cell_dir);
  const std::string csv = sweep_csv(plan);
  if (out.empty()) std::cout << csv;
  else write_file_atomic(out, csv);
  return 0;
}

int cmd_spiral(const std::string& path, const std::string& out) {
  const Json doc = load_json_file(path);
  const RunConfig cfg = parse_run_config(doc);
  SpiralSweepOptions opt;
  opt.probe_seed = cfg.seed;
  if (doc.contains("spiral_sweep")) {
    ConfigReader r(doc.at("spiral_sweep"), "spiral_sweep");
    r.reject_unknown({"n_probes", "inject_tau", "traverse_deg", "aligned_max_deg", "misaligned_min_deg", "probe_seed"});
    opt.n_probes = r.get<long>("n_probes", opt.n_probes);
    opt.inject_tau = r.get<long>("inject_tau", opt.inject_tau);
    opt.traverse_deg = r.get<double>("traverse_deg", opt.traverse_deg);
    opt.aligned_max_deg = r.get<double>("aligned_max_deg", opt.aligned_max_deg);
    opt.misaligned_min_deg = r.get<double>("misaligned_min_deg", opt.misaligned_min_deg);
    opt.probe_seed = r.get<std::uint64_t>("probe_seed", opt.probe_seed);
  }
  const SpiralSweepResult res = spiral_slowdown_sweep(cfg, opt);
  std::ostringstream csv;
  csv << "base_step,radius,angle_deg,hessian_axis_deg,region,t_no_delay,t_delay,ratio\n";
  for (const SpiralProbe& p : res.probes) {
    csv << p.base_step << ',' << format_double(p.radius) << ',' << format_double(p.angle_deg) << ','
        << format_double(p.hessian_axis_deg) << ',' << to_string(p.region) << ',' << p.t_no_delay << ','
        << p.t_delay << ',' << format_double(p.ratio) << '\n';
  }
  if (out.empty()) std::cout << csv.str();
  else write_file_atomic(out, csv.str());
  std::cerr << "probes " << res.probes.size() << ", skipped " << res.skipped << ", aligned mean "
            << (res.aligned_mean ? format_double(*res.aligned_mean) : "n/a") << ", misaligned mean "
            << (res.misaligned_mean ? format_double(*res.misaligned_mean) : "n/a") << "\n";
  return 0;
}

int cmd_stages(const std::string& path) {
  const StageTableInput in = parse_stage_table(load_json_file(path));
  std::cout << emit_stage_table(in.models, in.devices);
  return 0;
}

int cmd_verify(bool with_table) {
  std::vector<CheckResult> results = run_oracle_suite();
  if (with_table) results.push_back(check_stage_table());
  bool ok = true;
  for (const CheckResult& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed-gradient optimization laboratory"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::string out;
  std::string name;
  std::string cells;
  bool with_table = false;

  auto* run = app.add_subcommand("run", "Run one experiment; writes <stem>.csv and <stem>.json");
  run->add_option("config", config, "JSON run config")->required();
  run->add_option("--out", out_dir, "Output directory")->default_val(".");
  run->add_option("--name", name, "Output file stem (default: config file stem)");

  auto* sweep = app.add_subcommand("sweep", "Run the grid in a config's \"grid\" section");
  sweep->add_option("config", config, "JSON sweep config")->required();
  sweep->add_option("--out", out, "Combined CSV path (default: stdout)");
  sweep->add_option("--cells", cells, "Directory for per-cell traces and summaries");

  auto* spiral = app.add_subcommand("spiral", "Spiral slowdown probes");
  spiral->add_option("config", config, "JSON run config with a spiral landscape")->required();
  spiral->add_option("--out", out, "Probe CSV path (default: stdout)");

  auto* stages = app.add_subcommand("stages", "Pipeline stage-count table");
  stages->add_option("config", config, "JSON model/device table")->required();

  auto* verify = app.add_subcommand("verify", "Run the oracle suite");
  verify->add_flag("--stage-table", with_table, "Also compare the built-in stage table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config, out_dir, name);
    if (*sweep) return cmd_sweep(config, out, cells);
    if (*spiral) return cmd_spiral(config, out);
    if (*stages) return cmd_stages(config);
    if (*verify) return cmd_verify(with_table);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
