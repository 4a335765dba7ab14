// Acceptance suite. One PASS/FAIL line per criterion; `--criterion N` runs one.
// Tolerances and budgets are pinned here, not read from anywhere.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stalelab/config.hpp"
#include "stalelab/harness.hpp"
#include "stalelab/pipemodel.hpp"
#include "stalelab/verify.hpp"

using namespace stalelab;

namespace {

constexpr double kOrderingTol = 1e-9;
constexpr double kEquivarianceTol = 1e-10;
constexpr double kSlowdownFactor = 1.5;
constexpr double kAlignedLo = 0.9;
constexpr double kAlignedHi = 1.5;

struct Outcome {
  bool passed = false;
  std::string detail;
  double budget_s = 0.0;  // 0 = no runtime bound
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_path(const std::string& name) { return std::string(STALELAB_DATA_DIR) + "/" + name; }

Outcome stage_table() {
  const StageTableInput in = parse_stage_table(load_json_file(data_path("stage_table_fixture.json")));
  const std::string got = emit_stage_table(in.models, in.devices);
  const std::string want = read_file(data_path("stage_table_golden.csv"));
  const CheckResult cells = check_stage_table();
  return {got == want, cells.detail, 1.0};
}

Outcome ordering() {
  const OrderingStats k = kronecker_ordering_trials(200, 8, kOrderingTol);
  const OrderingStats r = rank_one_ordering_trials(200, 9, kOrderingTol);
  const bool ok = k.violations == 0 && r.violations == 0 && k.worst_diag_gap < kOrderingTol &&
                  r.worst_diag_gap < kOrderingTol;
  std::ostringstream d;
  d << "kronecker " << k.trials << " trials / " << k.violations << " violations, diagonal gap " << k.worst_diag_gap
    << "; rank-one " << r.trials << " trials / " << r.violations << " violations, gap " << r.worst_diag_gap;
  return {ok, d.str(), 10.0};
}

Outcome equivariance() {
  const double dev = rotation_equivariance_deviation(1000, 10);
  const CheckResult id = check_identity_basis_reduction();
  std::ostringstream d;
  d << "max per-step deviation " << dev << " (< " << kEquivarianceTol << "); identity basis: " << id.detail;
  return {dev < kEquivarianceTol && id.passed, d.str(), 0.0};
}

RunConfig toy_quadratic(double deg, long tau, OptimizerKind kind) {
  RunConfig c;
  c.landscape = std::make_shared<const Landscape>(
      QuadraticProblem{make_quadratic_2d(10.0, 1.0, deg), Matrix{{-10.0}, {12.0}}});
  c.optimizer.kind = kind;
  c.optimizer.hyper.eta = 1.0;
  c.optimizer.hyper.beta1 = 0.0;
  c.optimizer.hyper.beta2 = 0.1;
  c.optimizer.hyper.weight_decay = 0.0;
  c.optimizer.hyper.grad_clip.reset();
  c.optimizer.estimation.update_frequency = 1;
  c.staleness.tau = tau;
  c.max_steps = 1000;
  c.loss_threshold = 15.0;
  return c;
}

Outcome quadratic_phenomenology() {
  auto run = [](double deg, long tau, OptimizerKind k) { return run_experiment(toy_quadratic(deg, tau, k)); };
  const RunRecord mis0 = run(45, 0, OptimizerKind::Adam);
  const RunRecord mis2 = run(45, 2, OptimizerKind::Adam);
  const RunRecord al0 = run(0, 0, OptimizerKind::Adam);
  const RunRecord al2 = run(0, 2, OptimizerKind::Adam);
  const RunRecord rot2 = run(45, 2, OptimizerKind::RotatedAdam);
  for (const RunRecord* r : {&mis0, &mis2, &al0, &al2, &rot2})
    if (!r->iterations_to_threshold) return {false, "a run did not reach the threshold", 5.0};
  const long a0 = *mis0.iterations_to_threshold, a2 = *mis2.iterations_to_threshold;
  const long r2 = *rot2.iterations_to_threshold;
  const double s_mis = slowdown_ratio(mis2, mis0);
  const double s_al = slowdown_ratio(al2, al0);
  const bool a = a2 > a0;
  const bool b = s_mis >= kSlowdownFactor * s_al;
  const bool c = r2 < a2;
  std::ostringstream d;
  d << "(a) misaligned adam tau=2 " << a2 << " vs tau=0 " << a0 << (a ? " ok" : " FAIL") << "; (b) slowdown misaligned "
    << s_mis << " vs aligned " << s_al << (b ? " ok" : " FAIL") << "; (c) rotated " << r2 << " vs adam " << a2
    << (c ? " ok" : " FAIL");
  return {a && b && c, d.str(), 5.0};
}

Outcome spiral() {
  RunConfig c = parse_run_config(load_json_file(data_path("spiral_acceptance.json")));
  SpiralSweepOptions opt;
  opt.n_probes = 210;  // a few probes land too close to the end and are skipped
  opt.inject_tau = 1;
  opt.traverse_deg = 3.0;
  opt.probe_seed = c.seed;
  const SpiralSweepResult r = spiral_slowdown_sweep(c, opt);
  std::ostringstream d;
  d << r.probes.size() << " probes (" << r.skipped << " skipped); aligned mean "
    << (r.aligned_mean ? std::to_string(*r.aligned_mean) : "n/a") << ", misaligned mean "
    << (r.misaligned_mean ? std::to_string(*r.misaligned_mean) : "n/a");
  bool ok = r.aligned_mean && r.misaligned_mean && static_cast<long>(r.probes.size()) >= 200;
  if (ok) ok = *r.misaligned_mean > *r.aligned_mean && *r.aligned_mean >= kAlignedLo && *r.aligned_mean <= kAlignedHi;
  if (!ok) d << "; the injected delay shortens the traversal here, see README";
  return {ok, d.str(), 120.0};
}

Outcome estimation_ordering() {
  struct Variant {
    const char* name;
    OptimizerKind kind;
    Source source;
    Geometry geometry;
  };
  const Variant variants[] = {{"adam", OptimizerKind::Adam, Source::Second, Geometry::Bilateral},
                              {"2nd/bi", OptimizerKind::RotatedAdam, Source::Second, Geometry::Bilateral},
                              {"2nd/uni", OptimizerKind::RotatedAdam, Source::Second, Geometry::Unilateral},
                              {"1st/bi", OptimizerKind::RotatedAdam, Source::First, Geometry::Bilateral},
                              {"1st/uni", OptimizerKind::RotatedAdam, Source::First, Geometry::Unilateral}};
  constexpr int kSeeds = 4;
  double mean[5] = {};
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    MlpSpec s;
    s.layer_dims = {8, 16, 16, 4};
    s.n_samples = 256;
    s.batch_size = 32;
    s.dataset_seed = seed;
    const auto land = std::make_shared<const Landscape>(MlpProblem{s, make_mlp_dataset(s)});
    for (int v = 0; v < 5; ++v) {
      RunConfig c;
      c.landscape = land;
      c.seed = seed;
      c.max_steps = 1500;
      c.loss_threshold = 0.05;
      c.log_every = 100;
      c.optimizer.kind = variants[v].kind;
      c.optimizer.hyper.eta = 1e-3;
      c.optimizer.estimation.source = variants[v].source;
      c.optimizer.estimation.geometry = variants[v].geometry;
      c.optimizer.estimation.update_frequency = 10;
      c.staleness.tau = 8;
      const RunRecord r = run_experiment(c);
      // A run that never gets there counts as the full budget.
      mean[v] += static_cast<double>(r.iterations_to_threshold.value_or(c.max_steps)) / kSeeds;
    }
  }
  const bool order = mean[1] <= mean[2] && mean[2] <= mean[4];
  bool beat_adam = true;
  for (int v = 1; v < 5; ++v) beat_adam = beat_adam && mean[v] <= mean[0];
  std::ostringstream d;
  d << "mean iterations to 0.05 over seeds 1-4:";
  for (int v = 0; v < 5; ++v) d << ' ' << variants[v].name << '=' << mean[v];
  return {order && beat_adam, d.str(), 0.0};
}

Outcome oracle_suite() {
  bool ok = true;
  std::string failed;
  int n = 0;
  for (const CheckResult& r : run_oracle_suite()) {
    ++n;
    if (!r.passed) {
      ok = false;
      failed += " " + r.name + " (" + r.detail + ")";
    }
  }
  return {ok, std::to_string(n) + " oracle checks" + (ok ? " pass" : "; failing:" + failed), 60.0};
}

Outcome scope_statement() {
  return {true,
          "large-model results (iteration and GPU-hour savings, scaling behaviour) are out of scope and not "
          "reproduced; criteria 4-6 are the small-scale surrogates",
          0.0};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"stage table golden file", stage_table},
      {"norm ordering under exact eigenbases", ordering},
      {"rotation equivariance and identity reduction", equivariance},
      {"quadratic delay phenomenology", quadratic_phenomenology},
      {"spiral slowdown by region", spiral},
      {"estimation fidelity ordering on the MLP", estimation_ordering},
      {"oracle suite", oracle_suite},
      {"scope of large-model results", scope_statement},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), 0.0};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = o.budget_s == 0.0 || secs < o.budget_s;
    const bool pass = o.passed && in_time;
    all = all && pass;
    std::printf("%s criterion %zu (%s): %s [%.2fs%s]\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs, in_time ? "" : ", over budget");
  }
  return all ? 0 : 1;
}
