#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "stalelab/config.hpp"
#include "stalelab/harness.hpp"
#include "stalelab/report.hpp"
#include "stalelab/verify.hpp"

using namespace stalelab;

namespace {

RunConfig quadratic_run(double deg, long tau, OptimizerKind kind = OptimizerKind::Adam) {
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
  c.max_steps = 200;
  c.loss_threshold = 15.0;
  return c;
}

long iters(const RunConfig& c) {
  const RunRecord r = run_experiment(c);
  EXPECT_TRUE(r.iterations_to_threshold.has_value());
  return r.iterations_to_threshold.value_or(-1);
}

const char* kMinimal = R"({
  "seed": 3, "max_steps": 20, "loss_threshold": 1.0,
  "landscape": {"kind": "quadratic", "eigenvalues": [4, 1], "rotation_deg": 30, "start": [2, -1]},
  "optimizer": {"name": "rotated_adam", "eta": 0.1},
  "estimation": {"source": "first", "geometry": "unilateral", "update_frequency": 2},
  "staleness": {"tau": 1}
})";

}  // namespace

TEST(Misalignment, QuadraticTrace) {
  const QuadraticSpec aligned = make_quadratic_2d(10, 1, 0);
  EXPECT_DOUBLE_EQ(misalignment_trace(aligned, nullptr), 11.0);
  const QuadraticSpec rotated = make_quadratic_2d(10, 1, 45);
  EXPECT_NEAR(misalignment_trace(rotated, nullptr), 5.5 * 2 + 4.5 * 2, 1e-9);
  BasisState b = init_basis(2, 1, EstimationConfig{});
  b.u = jacobi_eigen(rotated.hessian).vectors;
  EXPECT_NEAR(misalignment_trace(rotated, &b), 11.0, 1e-9);
}

TEST(Misalignment, UnsupportedLandscape) {
  const Landscape spiral(SpiralProblem{});
  EXPECT_THROW(misalignment_trace(spiral, nullptr), UnsupportedMetricError);
}

TEST(Run, AlignedAdamIgnoresDelayMisalignedSlowsDown) {
  EXPECT_EQ(iters(quadratic_run(0, 0)), iters(quadratic_run(0, 2)));
  const long fresh = iters(quadratic_run(45, 0));
  const long stale = iters(quadratic_run(45, 2));
  EXPECT_GT(stale, fresh);
}

TEST(Run, MonotoneInDelayOnMisalignedQuadratic) {
  long prev = 0;
  for (long tau : {0, 1, 2, 4}) {
    const long k = iters(quadratic_run(45, tau));
    EXPECT_GE(k, prev) << "tau " << tau;
    prev = k;
  }
}

TEST(Run, RotatedAdamRecoversFromMisalignment) {
  const long adam = iters(quadratic_run(45, 2));
  const long rotated = iters(quadratic_run(45, 2, OptimizerKind::RotatedAdam));
  EXPECT_LT(rotated, adam);
}

TEST(Run, ThresholdAtStartIsZeroIterations) {
  RunConfig c = quadratic_run(0, 0);
  c.loss_threshold = 1e9;
  const RunRecord r = run_experiment(c);
  EXPECT_EQ(r.iterations_to_threshold, 0);
  EXPECT_EQ(r.wall_steps, 0);
}

TEST(Run, DivergenceIsFlagged) {
  RunConfig c = quadratic_run(0, 0, OptimizerKind::AdaSgd);
  c.landscape = std::make_shared<const Landscape>(
      QuadraticProblem{make_quadratic({1e6, 1.0}, Matrix::identity(2), 2, 1), Matrix{{1.0}, {0.0}}});
  c.optimizer.hyper.eta = 1e4;
  c.loss_threshold.reset();
  c.max_steps = 10000;
  const RunRecord r = run_experiment(c);
  EXPECT_TRUE(r.diverged);
  EXPECT_LT(r.wall_steps, 10000);
}

TEST(Run, TraceRespectsLogEvery) {
  RunConfig c = quadratic_run(30, 1);
  c.loss_threshold.reset();
  c.max_steps = 10;
  c.log_every = 3;
  const RunRecord r = run_experiment(c);
  ASSERT_EQ(r.trace.size(), 4u);
  EXPECT_EQ(r.trace[1].step, 3);
  EXPECT_TRUE(r.trace[0].misalignment.has_value());
  EXPECT_EQ(r.trace[2].effective_delay, 1);
  EXPECT_EQ(r.trace[0].effective_delay, 0);
}

TEST(Run, InvalidConfigRejected) {
  RunConfig c = quadratic_run(0, 0);
  c.log_every = 0;
  EXPECT_THROW(run_experiment(c), Error);
  c = quadratic_run(0, 0);
  c.landscape.reset();
  EXPECT_THROW(run_experiment(c), Error);
}

TEST(SlowdownRatio, EqualIsOneAndMissingThrows) {
  RunRecord a, b;
  a.iterations_to_threshold = 7;
  b.iterations_to_threshold = 7;
  EXPECT_EQ(slowdown_ratio(a, b), 1.0);
  b.iterations_to_threshold = 2;
  EXPECT_DOUBLE_EQ(slowdown_ratio(a, b), 3.5);
  b.iterations_to_threshold.reset();
  EXPECT_THROW(slowdown_ratio(a, b), ThresholdNotReachedError);
}

TEST(Simulation, ForkIsIndependent) {
  const RunConfig c = quadratic_run(30, 1);
  Simulation a(c.landscape, c.optimizer, c.staleness, 0, 4);
  for (int i = 0; i < 5; ++i) a.step();
  Simulation b = a;
  b.set_uniform_delay(3);
  b.step();
  a.step();
  EXPECT_FALSE(a.params()[0] == b.params()[0]);
  EXPECT_THROW(b.set_uniform_delay(4), Error);
}

TEST(Determinism, ByteIdenticalArtifacts) { EXPECT_TRUE(check_determinism().passed); }

TEST(Determinism, IdentityBasisReduction) { EXPECT_TRUE(check_identity_basis_reduction().passed); }

TEST(Config, ParsesAndFingerprints) {
  const Json doc = parse_json_text(kMinimal, "inline");
  const RunConfig c = parse_run_config(doc);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.optimizer.kind, OptimizerKind::RotatedAdam);
  EXPECT_EQ(c.optimizer.estimation.source, Source::First);
  EXPECT_EQ(c.optimizer.estimation.geometry, Geometry::Unilateral);
  EXPECT_EQ(c.staleness.tau, 1);
  EXPECT_EQ(c.fingerprint.size(), 16u);

  Json with_grid = doc;
  with_grid["grid"] = {{"seed", {1, 2}}};
  with_grid["threads"] = 2;
  EXPECT_EQ(parse_run_config(with_grid).fingerprint, c.fingerprint);
  Json other = doc;
  other["seed"] = 4;
  EXPECT_NE(parse_run_config(other).fingerprint, c.fingerprint);
}

TEST(Config, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, ErrorsNameTheKeyPath) {
  Json doc = parse_json_text(kMinimal, "inline");
  doc["optimizer"]["eta"] = "fast";
  try {
    parse_run_config(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("optimizer.eta"), std::string::npos) << e.what();
  }
  Json typo = parse_json_text(kMinimal, "inline");
  typo["staleness"]["tua"] = 2;
  EXPECT_THROW(parse_run_config(typo), ConfigError);
  Json bad_name = parse_json_text(kMinimal, "inline");
  bad_name["optimizer"]["name"] = "sgd";
  EXPECT_THROW(parse_run_config(bad_name), ConfigError);
  EXPECT_THROW(parse_json_text("{", "inline"), ConfigError);
}

TEST(Report, TraceCsvAndSummary) {
  RunConfig c = parse_run_config(parse_json_text(kMinimal, "inline"));
  const RunRecord r = run_experiment(c);
  const std::string csv = trace_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,loss,grad_norm,effective_delay,misalignment_norm");
  const Json s = summary_json(r);
  EXPECT_EQ(s["fingerprint"], c.fingerprint);
  EXPECT_TRUE(s.contains("misalignment_norm_trace"));
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Sweep, CellOrderAndThreadIndependence) {
  Json doc = parse_json_text(kMinimal, "inline");
  doc["grid"] = {{"staleness.tau", {0, 1, 2}}, {"landscape.rotation_deg", {0, 45}}};
  doc["threads"] = 1;
  SweepPlan one = plan_sweep(doc);
  ASSERT_EQ(one.cells.size(), 6u);
  // Keys sorted; the last one varies fastest.
  EXPECT_EQ(one.keys[0], "landscape.rotation_deg");
  EXPECT_EQ(one.cells[1].values[1], Json(1));
  EXPECT_EQ(one.cells[3].values[0], Json(45));
  execute_sweep(one);
  doc["threads"] = 3;
  SweepPlan three = plan_sweep(doc);
  execute_sweep(three);
  EXPECT_EQ(sweep_csv(one), sweep_csv(three));
}

TEST(Sweep, BadCellFailsBeforeRunning) {
  Json doc = parse_json_text(kMinimal, "inline");
  doc["grid"] = {{"staleness.tau", {0, -1}}};
  EXPECT_THROW(plan_sweep(doc), Error);
}

TEST(Sweep, CellFilesWrittenAtomically) {
  Json doc = parse_json_text(kMinimal, "inline");
  doc["grid"] = {{"seed", {1, 2}}};
  doc["threads"] = 2;
  const auto dir = std::filesystem::temp_directory_path() / "stalelab_sweep_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  SweepPlan plan = plan_sweep(doc);
  execute_sweep(plan, dir);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    ++files;
    EXPECT_EQ(e.path().string().find(".tmp"), std::string::npos);
  }
  EXPECT_EQ(files, 4u);
  std::filesystem::remove_all(dir);
}

TEST(Spiral, HessianAxisOnTheQuadraticMatchesRotation) {
  const Landscape land(QuadraticProblem{make_quadratic_2d(10.0, 1.0, 20.0), Matrix{{1.0}, {1.0}}});
  EXPECT_NEAR(dominant_axis_angle_deg(fd_hessian_2d(land, Matrix{{0.3}, {0.2}})), 20.0, 1e-4);
  const Landscape land2(QuadraticProblem{make_quadratic_2d(10.0, 1.0, 80.0), Matrix{{1.0}, {1.0}}});
  EXPECT_NEAR(dominant_axis_angle_deg(fd_hessian_2d(land2, Matrix{{0.3}, {0.2}})), 10.0, 1e-4);
}

TEST(Spiral, SweepProducesLabelledProbes) {
  RunConfig c;
  c.landscape = std::make_shared<const Landscape>(SpiralProblem{SpiralSpec{}, 4.0, 45.0});
  c.optimizer.hyper.eta = 0.1;
  c.optimizer.hyper.beta1 = 0.0;
  c.optimizer.hyper.beta2 = 0.9;
  c.optimizer.hyper.weight_decay = 0.0;
  c.max_steps = 2000;
  SpiralSweepOptions opt;
  opt.n_probes = 20;
  const SpiralSweepResult r = spiral_slowdown_sweep(c, opt);
  EXPECT_EQ(static_cast<long>(r.probes.size()) + r.skipped, 20);
  for (std::size_t i = 1; i < r.probes.size(); ++i) EXPECT_GE(r.probes[i].base_step, r.probes[i - 1].base_step);
  for (const SpiralProbe& p : r.probes) {
    EXPECT_GE(p.hessian_axis_deg, 0.0);
    EXPECT_LE(p.hessian_axis_deg, 45.0);
    EXPECT_GT(p.ratio, 0.0);
  }
}

TEST(Spiral, NullInjectionGivesUnitRatios) {
  RunConfig c;
  c.landscape = std::make_shared<const Landscape>(SpiralProblem{SpiralSpec{}, 4.0, 45.0});
  c.optimizer.hyper.eta = 0.1;
  c.optimizer.hyper.beta1 = 0.0;
  c.optimizer.hyper.beta2 = 0.9;
  c.max_steps = 1000;
  SpiralSweepOptions opt;
  opt.n_probes = 15;
  opt.inject_tau = 0;
  for (const SpiralProbe& p : spiral_slowdown_sweep(c, opt).probes) EXPECT_EQ(p.ratio, 1.0);
}

TEST(Misalignment, RotatedAdamReducesTraceOnKroneckerQuadratic) {
  // After warm-up the trace may tick up slightly as the statistic follows a
  // shrinking gradient, but never by more than 1e-3 per refresh.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CounterRng rng(seed);
    const Matrix a = oracle::random_spd(rng, 3);
    const Matrix b = oracle::random_spd(rng, 4);
    RunConfig c;
    c.landscape = std::make_shared<const Landscape>(
        QuadraticProblem{build_kronecker_quadratic(a, b), oracle::random_matrix(rng, 4, 3)});
    c.optimizer.kind = OptimizerKind::RotatedAdam;
    c.optimizer.hyper.eta = 1e-2;
    c.max_steps = 2000;
    const std::vector<double> t = run_experiment(c).misalignment_trace();
    ASSERT_EQ(t.size(), 2000u);
    EXPECT_LT(t.back(), t.front());
    for (std::size_t i = 200; i < t.size(); ++i) EXPECT_LE(t[i], t[i - 1] * (1.0 + 1e-3)) << "seed " << seed;
  }
}
