#pragma once

// Experiment loop and the metrics computed from it: iterations to a loss
// threshold, the slowdown ratio T_delay / T_no-delay, the Hessian (1,1)-norm
// in the optimizer's coordinates, and the spiral angular-traversal probes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "stalelab/eigenbasis.hpp"
#include "stalelab/error.hpp"
#include "stalelab/landscapes.hpp"
#include "stalelab/linalg.hpp"
#include "stalelab/optim.hpp"
#include "stalelab/rng.hpp"
#include "stalelab/staleness.hpp"

namespace stalelab {

inline constexpr double kDivergenceLoss = 1e12;

struct RunConfig {
  std::shared_ptr<const Landscape> landscape;
  OptimizerConfig optimizer;
  StalenessConfig staleness;
  std::uint64_t seed = 0;
  long max_steps = 1000;
  std::optional<double> loss_threshold;
  long log_every = 1;
  std::string fingerprint;  // hash of the canonical config text, empty for programmatic configs
};

struct StepLog {
  long step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  long effective_delay = 0;
  std::optional<double> misalignment;
};

struct RunRecord {
  std::vector<StepLog> trace;
  std::optional<long> iterations_to_threshold;
  double final_loss = 0.0;
  bool diverged = false;
  bool reached_origin = false;  // spiral only; counted as converged
  long wall_steps = 0;
  long rank_warnings = 0;
  std::string fingerprint;

  std::vector<double> misalignment_trace() const {
    std::vector<double> out;
    for (const StepLog& s : trace)
      if (s.misalignment) out.push_back(*s.misalignment);
    return out;
  }
};

// (1,1)-norm of the quadratic's Hessian in the rotated coordinates
// vec(U^T W V) = (V kron U)^T vec(W). A null basis means the identity.
inline double misalignment_trace(const QuadraticSpec& spec, const BasisState* basis) {
  if (basis == nullptr) return one_one_norm(spec.hessian);
  if (basis->u.rows() != spec.param_rows || basis->v.rows() != spec.param_cols) {
    throw DimensionError("misalignment_trace: basis does not match parameter shape " +
                         Matrix::shape_string(spec.param_rows, spec.param_cols));
  }
  const Matrix q = kronecker(basis->v, basis->u);
  return one_one_norm(matmul(matmul(q.transpose(), spec.hessian), q));
}

inline double misalignment_trace(const Landscape& landscape, const BasisState* basis) {
  const QuadraticSpec* q = landscape.quadratic();
  if (q == nullptr) throw UnsupportedMetricError("misalignment needs a closed-form Hessian; " + landscape.kind() + " has none");
  return misalignment_trace(*q, basis);
}

// One run's mutable state. Copyable, so a run can be forked mid-flight.
class Simulation {
 public:
  // stash_capacity reserves history beyond the configured delays, which
  // lets a fork switch on a larger delay later.
  Simulation(std::shared_ptr<const Landscape> landscape, const OptimizerConfig& optimizer,
             const StalenessConfig& staleness, std::uint64_t seed, std::size_t stash_capacity = 0)
      : landscape_(std::move(landscape)),
        staleness_(staleness),
        seed_(seed),
        params_(landscape_->initial_params(seed)),
        delays_(resolve_delays(staleness, params_.size())),
        optimizer_(optimizer, params_, delays_),
        stash_(std::max<std::size_t>(stash_capacity, static_cast<std::size_t>(max_delay()) + 1), params_) {
    validate(staleness_);
  }

  const std::vector<Matrix>& params() const noexcept { return params_; }
  const Optimizer& optimizer() const noexcept { return optimizer_; }
  const StashBuffer& stash() const noexcept { return stash_; }
  const std::vector<long>& delays() const noexcept { return delays_; }
  long steps_taken() const noexcept { return t_; }

  void set_uniform_delay(long tau) {
    if (tau < 0 || static_cast<std::size_t>(tau) + 1 > stash_.capacity())
      throw Error("delay " + std::to_string(tau) + " exceeds the stash capacity");
    delays_.assign(params_.size(), tau);
  }

  double loss() const { return landscape_->loss(params_); }

  struct StepInfo {
    double grad_norm = 0.0;
    long effective_delay = 0;
  };

  StepInfo step() {
    DelayedGradient dg = delayed_gradient(*landscape_, stash_, delays_, staleness_, &optimizer_, seed_, t_);
    StepInfo info;
    info.effective_delay = dg.effective_delay;
    info.grad_norm = optimizer_.step(params_, std::move(dg.eval.grads), dg.params);
    stash_.advance(params_);
    ++t_;
    return info;
  }

 private:
  long max_delay() const { return delays_.empty() ? 0 : *std::max_element(delays_.begin(), delays_.end()); }

  std::shared_ptr<const Landscape> landscape_;
  StalenessConfig staleness_;
  std::uint64_t seed_;
  std::vector<Matrix> params_;
  std::vector<long> delays_;
  Optimizer optimizer_;
  StashBuffer stash_;
  long t_ = 0;
};

inline void validate(const RunConfig& cfg) {
  if (!cfg.landscape) throw Error("run config has no landscape");
  if (cfg.max_steps < 0) throw Error("max_steps must be non-negative");
  if (cfg.log_every < 1) throw Error("log_every must be >= 1");
  validate(cfg.staleness);
}

// Threshold is checked on the loss at the current parameters before each
// update, so iterations_to_threshold = k means k updates were applied.
inline RunRecord run_experiment(const RunConfig& cfg) {
  validate(cfg);
  RunRecord rec;
  rec.fingerprint = cfg.fingerprint;
  Simulation sim(cfg.landscape, cfg.optimizer, cfg.staleness, cfg.seed);
  const bool has_hessian = cfg.landscape->quadratic() != nullptr;

  for (long t = 0;; ++t) {
    double loss = 0.0;
    try {
      loss = sim.loss();
    } catch (const DegenerateChartError&) {
      rec.reached_origin = true;
      rec.final_loss = 0.0;
      if (cfg.loss_threshold) rec.iterations_to_threshold = t;
      break;
    }
    rec.final_loss = loss;
    if (!std::isfinite(loss) || loss > kDivergenceLoss) {
      rec.diverged = true;
      break;
    }
    if (cfg.loss_threshold && loss < *cfg.loss_threshold) {
      rec.iterations_to_threshold = t;
      break;
    }
    if (t == cfg.max_steps) break;

    Simulation::StepInfo info;
    try {
      info = sim.step();
    } catch (const NonFiniteError&) {
      rec.diverged = true;
      break;
    } catch (const DegenerateChartError&) {
      rec.reached_origin = true;
      if (cfg.loss_threshold) rec.iterations_to_threshold = t;
      break;
    }
    if (t % cfg.log_every == 0) {
      StepLog log{t, loss, info.grad_norm, info.effective_delay, std::nullopt};
      if (has_hessian) log.misalignment = misalignment_trace(*cfg.landscape, sim.optimizer().basis(0));
      rec.trace.push_back(log);
    }
  }
  rec.wall_steps = sim.steps_taken();
  rec.rank_warnings = sim.optimizer().rank_warnings();
  return rec;
}

inline double slowdown_ratio(const RunRecord& with_delay, const RunRecord& without) {
  if (!with_delay.iterations_to_threshold) throw ThresholdNotReachedError("delayed run did not reach the threshold");
  if (!without.iterations_to_threshold) throw ThresholdNotReachedError("undelayed run did not reach the threshold");
  const long a = *with_delay.iterations_to_threshold;
  const long b = *without.iterations_to_threshold;
  if (a == b) return 1.0;
  if (b == 0) throw ThresholdNotReachedError("undelayed run started below the threshold");
  return static_cast<double>(a) / static_cast<double>(b);
}

// ---------------------------------------------------------------------------
// Spiral probes: fork a base run at random iterations and count the updates
// needed to sweep a fixed polar angle with and without an injected delay.

enum class Region { Aligned, Misaligned, Unlabeled };

inline std::string to_string(Region r) {
  switch (r) {
    case Region::Aligned: return "aligned";
    case Region::Misaligned: return "misaligned";
    case Region::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

struct SpiralSweepOptions {
  long n_probes = 200;
  long inject_tau = 1;
  double traverse_deg = 3.0;
  double aligned_max_deg = 15.0;    // dominant Hessian axis within this of a coordinate axis
  double misaligned_min_deg = 30.0;  // ... or at least this far from both
  std::uint64_t probe_seed = 0;
};

struct SpiralProbe {
  long base_step = 0;
  double radius = 0.0;
  double angle_deg = 0.0;
  double hessian_axis_deg = 0.0;  // angle of the dominant eigenvector to the nearest axis, in [0, 45]
  Region region = Region::Unlabeled;
  long t_no_delay = 0;
  long t_delay = 0;
  double ratio = 0.0;
};

struct SpiralSweepResult {
  std::vector<SpiralProbe> probes;
  long skipped = 0;
  std::optional<double> aligned_mean;
  std::optional<double> misaligned_mean;
};

// Central-difference Hessian of a 2-D landscape from its analytic gradient.
inline Matrix fd_hessian_2d(const Landscape& landscape, const Matrix& xy, double h = 1e-5) {
  Matrix hess(2, 2);
  for (std::size_t j = 0; j < 2; ++j) {
    Matrix plus = xy;
    Matrix minus = xy;
    plus.data()[j] += h;
    minus.data()[j] -= h;
    const Matrix gp = landscape.evaluate(std::vector<Matrix>{plus}, 0, 0).grads.front();
    const Matrix gm = landscape.evaluate(std::vector<Matrix>{minus}, 0, 0).grads.front();
    for (std::size_t i = 0; i < 2; ++i) hess(i, j) = (gp.data()[i] - gm.data()[i]) / (2.0 * h);
  }
  return symmetrize(hess);
}

inline double dominant_axis_angle_deg(const Matrix& hess) {
  const EigenResult e = jacobi_eigen(hess);
  std::size_t top = std::abs(e.values[0]) >= std::abs(e.values[1]) ? 0 : 1;
  const double deg = std::atan2(std::abs(e.vectors(1, top)), std::abs(e.vectors(0, top))) * 180.0 / std::numbers::pi;
  return std::min(deg, 90.0 - deg);
}

namespace detail {

inline double polar_angle(const Matrix& xy) { return std::atan2(xy.data()[1], xy.data()[0]); }

// Updates until the unwrapped polar angle has moved by `radians`, or nullopt.
inline std::optional<long> traverse(Simulation sim, double radians, long budget) {
  double last = polar_angle(sim.params().front());
  double swept = 0.0;
  for (long k = 1; k <= budget; ++k) {
    try {
      sim.step();
    } catch (const Error&) {
      return std::nullopt;
    }
    const Matrix& w = sim.params().front();
    if (std::hypot(w.data()[0], w.data()[1]) <= kSpiralOriginCutoff) return std::nullopt;
    const double now = polar_angle(w);
    swept += std::remainder(now - last, 2.0 * std::numbers::pi);
    last = now;
    if (std::abs(swept) >= radians) return k;
  }
  return std::nullopt;
}

inline std::optional<double> mean_ratio(const std::vector<SpiralProbe>& probes, Region region) {
  double sum = 0.0;
  long n = 0;
  for (const SpiralProbe& p : probes) {
    if (p.region != region) continue;
    sum += p.ratio;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace detail

// cfg describes the undelayed base run (its staleness is ignored); probes
// are drawn from cfg.max_steps base iterations.
inline SpiralSweepResult spiral_slowdown_sweep(const RunConfig& cfg, const SpiralSweepOptions& opt) {
  validate(cfg);
  if (!std::holds_alternative<SpiralProblem>(cfg.landscape->problem()))
    throw Error("spiral_slowdown_sweep needs a spiral landscape");
  if (opt.n_probes < 0 || opt.inject_tau < 0) throw Error("n_probes and inject_tau must be non-negative");

  CounterRng rng = CounterRng(opt.probe_seed).split(0x9B0BE);
  std::vector<long> at;
  for (long i = 0; i < opt.n_probes; ++i)
    at.push_back(static_cast<long>(rng.below(static_cast<std::uint64_t>(std::max<long>(cfg.max_steps, 1)))));
  std::sort(at.begin(), at.end());

  StalenessConfig base_staleness;
  base_staleness.mode = cfg.staleness.mode;
  base_staleness.prediction_horizon_scale = cfg.staleness.prediction_horizon_scale;
  Simulation base(cfg.landscape, cfg.optimizer, base_staleness, cfg.seed,
                  static_cast<std::size_t>(opt.inject_tau) + 1);

  SpiralSweepResult out;
  const double radians = opt.traverse_deg * std::numbers::pi / 180.0;
  bool base_alive = true;
  for (long probe_step : at) {
    while (base_alive && base.steps_taken() < probe_step) {
      try {
        base.step();
      } catch (const Error&) {
        base_alive = false;
      }
    }
    if (!base_alive) {
      ++out.skipped;
      continue;
    }
    const long budget = cfg.max_steps - probe_step;
    Simulation delayed = base;
    delayed.set_uniform_delay(opt.inject_tau);
    const auto t0 = detail::traverse(base, radians, budget);
    const auto t1 = detail::traverse(delayed, radians, budget);
    if (!t0 || !t1) {
      ++out.skipped;
      continue;
    }
    SpiralProbe p;
    p.base_step = probe_step;
    const Matrix& w = base.params().front();
    p.radius = std::hypot(w.data()[0], w.data()[1]);
    p.angle_deg = detail::polar_angle(w) * 180.0 / std::numbers::pi;
    p.hessian_axis_deg = dominant_axis_angle_deg(fd_hessian_2d(*cfg.landscape, w));
    if (p.hessian_axis_deg < opt.aligned_max_deg) p.region = Region::Aligned;
    else if (p.hessian_axis_deg > opt.misaligned_min_deg) p.region = Region::Misaligned;
    p.t_no_delay = *t0;
    p.t_delay = *t1;
    p.ratio = static_cast<double>(*t1) / static_cast<double>(*t0);
    out.probes.push_back(p);
  }
  out.aligned_mean = detail::mean_ratio(out.probes, Region::Aligned);
  out.misaligned_mean = detail::mean_ratio(out.probes, Region::Misaligned);
  return out;
}

}  // namespace stalelab
