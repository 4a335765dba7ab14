#pragma once

// Adam-family optimizers fed by possibly stale gradients.
//
// None of the updates apply bias correction unless AdamHyper::bias_correction
// is set, and weight decay is decoupled: w <- w - eta * update - eta * wd * w.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stalelab/eigenbasis.hpp"
#include "stalelab/error.hpp"
#include "stalelab/linalg.hpp"

namespace stalelab {

struct AdamHyper {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::optional<double> grad_clip = 1.0;
  bool bias_correction = false;
};

inline void validate(const AdamHyper& h) {
  if (!(h.eta > 0.0)) throw Error("eta must be positive");
  if (!(h.beta1 >= 0.0 && h.beta1 < 1.0)) throw Error("beta1 must lie in [0, 1)");
  if (!(h.beta2 > 0.0 && h.beta2 < 1.0)) throw Error("beta2 must lie in (0, 1)");
  if (!(h.epsilon > 0.0)) throw Error("epsilon must be positive");
  if (!(h.weight_decay >= 0.0)) throw Error("weight_decay must be non-negative");
  if (h.grad_clip && !(*h.grad_clip > 0.0)) throw Error("grad_clip must be positive when set");
}

struct MomentState {
  Matrix m;  // first moment, original coordinates
  Matrix v;  // second moment (rotated coordinates for rotated Adam)

  static MomentState zeros_like(const Matrix& w) { return {Matrix::zeros(w.rows(), w.cols()), Matrix::zeros(w.rows(), w.cols())}; }
};

namespace detail {

inline void check_step_inputs(const Matrix& w, const Matrix& g, const MomentState& s, long step) {
  if (!w.same_shape(g) || !w.same_shape(s.m) || !w.same_shape(s.v)) {
    throw DimensionError("optimizer step: parameter " + w.shape() + " vs gradient " + g.shape());
  }
  if (!g.all_finite()) throw NonFiniteError("non-finite gradient", step);
}

inline void ema(Matrix& acc, const Matrix& x, double beta) {
  auto a = acc.data();
  auto b = x.data();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = beta * a[k] + (1.0 - beta) * b[k];
}

inline void ema_square(Matrix& acc, const Matrix& x, double beta) {
  auto a = acc.data();
  auto b = x.data();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = beta * a[k] + (1.0 - beta) * b[k] * b[k];
}

inline double correction(double beta, long step, bool enabled) {
  return enabled ? 1.0 - std::pow(beta, static_cast<double>(step)) : 1.0;
}

// numerator / sqrt(second + eps), elementwise, with optional bias correction.
inline Matrix scaled_direction(const Matrix& numerator, const Matrix& second, const AdamHyper& h, long step) {
  const double c1 = correction(h.beta1, step, h.bias_correction);
  const double c2 = correction(h.beta2, step, h.bias_correction);
  Matrix d = numerator;
  auto dd = d.data();
  auto sd = second.data();
  for (std::size_t k = 0; k < dd.size(); ++k) dd[k] = (dd[k] / c1) / std::sqrt(sd[k] / c2 + h.epsilon);
  return d;
}

inline void apply_update(Matrix& w, const Matrix& direction, double eta, double weight_decay) {
  auto wd = w.data();
  auto dd = direction.data();
  for (std::size_t k = 0; k < wd.size(); ++k) wd[k] = wd[k] - eta * dd[k] - eta * weight_decay * wd[k];
}

}  // namespace detail

// One Adam step. `step` is 1-based.
inline void adam_step(Matrix& w, const Matrix& g, MomentState& s, const AdamHyper& h, long step) {
  detail::check_step_inputs(w, g, s, step);
  detail::ema(s.m, g, h.beta1);
  detail::ema_square(s.v, g, h.beta2);
  detail::apply_update(w, detail::scaled_direction(s.m, s.v, h, step), h.eta, h.weight_decay);
}

// Adam with the look-ahead numerator b1 * M' + (1 - b1) * g.
inline void nesterov_adam_step(Matrix& w, const Matrix& g, MomentState& s, const AdamHyper& h, long step) {
  detail::check_step_inputs(w, g, s, step);
  detail::ema(s.m, g, h.beta1);
  detail::ema_square(s.v, g, h.beta2);
  Matrix lookahead = s.m;
  auto ld = lookahead.data();
  auto gd = g.data();
  for (std::size_t k = 0; k < ld.size(); ++k) ld[k] = h.beta1 * ld[k] + (1.0 - h.beta1) * gd[k];
  detail::apply_update(w, detail::scaled_direction(lookahead, s.v, h, step), h.eta, h.weight_decay);
}

struct RotatedState {
  MomentState moments;  // m in original space, v in rotated space
  BasisState basis;
};

inline RotatedState make_rotated_state(const Matrix& w, const EstimationConfig& est) {
  return {MomentState::zeros_like(w), init_basis(w.rows(), w.cols(), est)};
}

// Adam with basis rotation. Momentum accumulates in the original space and is
// rotated on use; the basis refreshes before the update whenever
// step % update_frequency == 0.
inline void rotated_adam_step(Matrix& w, const Matrix& g, RotatedState& s, const AdamHyper& h,
                              const EstimationConfig& est, long step) {
  detail::check_step_inputs(w, g, s.moments, step);
  detail::ema(s.moments.m, g, h.beta1);
  s.basis = accumulate_statistics(std::move(s.basis), g, est);
  if (est.update_frequency != kNeverRefresh && step % est.update_frequency == 0) {
    s.basis = refresh_basis(std::move(s.basis), s.moments.m, est);
  }
  const Matrix g_rot = rotate_into(s.basis, g);
  const Matrix m_rot = rotate_into(s.basis, s.moments.m);
  detail::ema_square(s.moments.v, g_rot, h.beta2);
  const Matrix direction = rotate_back(s.basis, detail::scaled_direction(m_rot, s.moments.v, h, step));
  detail::apply_update(w, direction, h.eta, h.weight_decay);
}

struct AdaSgdState {
  std::vector<Matrix> m;
  double mean_square = 0.0;  // EMA of the mean of g*g over every parameter
};

// One learning-rate scale shared by all parameters: eta / sqrt(EMA(mean(g^2)) + eps).
inline void adasgd_step(std::span<Matrix> ws, std::span<const Matrix> gs, AdaSgdState& s, const AdamHyper& h,
                        long step) {
  if (ws.size() != gs.size() || ws.size() != s.m.size()) throw DimensionError("adasgd_step: parameter count mismatch");
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (!ws[i].same_shape(gs[i]) || !ws[i].same_shape(s.m[i])) {
      throw DimensionError("adasgd_step: parameter " + ws[i].shape() + " vs gradient " + gs[i].shape());
    }
    if (!gs[i].all_finite()) throw NonFiniteError("non-finite gradient", step);
    for (double x : gs[i].data()) sum_sq += x * x;
    count += gs[i].size();
  }
  s.mean_square = h.beta2 * s.mean_square + (1.0 - h.beta2) * (sum_sq / static_cast<double>(count));
  const double c1 = detail::correction(h.beta1, step, h.bias_correction);
  const double c2 = detail::correction(h.beta2, step, h.bias_correction);
  const double denom = std::sqrt(s.mean_square / c2 + h.epsilon);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    detail::ema(s.m[i], gs[i], h.beta1);
    Matrix direction = s.m[i];
    for (double& x : direction.data()) x = (x / c1) / denom;
    detail::apply_update(ws[i], direction, h.eta, h.weight_decay);
  }
}

// eta / (1 + delay)^exponent
inline double pipedream_lr_scale(long stage_delay, double base_eta, double exponent = 1.0) {
  if (stage_delay < 0) throw Error("stage delay must be non-negative");
  return base_eta / std::pow(1.0 + static_cast<double>(stage_delay), exponent);
}

// g + lambda * g * g * (w_now - w_stale), elementwise.
inline Matrix delay_compensated_gradient(const Matrix& g_stale, const Matrix& w_now, const Matrix& w_stale,
                                         double lambda) {
  if (!g_stale.same_shape(w_now) || !g_stale.same_shape(w_stale)) {
    throw DimensionError("delay_compensated_gradient: " + g_stale.shape() + " vs " + w_now.shape() + " vs " +
                         w_stale.shape());
  }
  Matrix out = g_stale;
  auto o = out.data();
  auto a = w_now.data();
  auto b = w_stale.data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] += lambda * o[k] * o[k] * (a[k] - b[k]);
  return out;
}

// Scales every gradient by min(1, clip / global_norm). Returns the norm before clipping.
inline double clip_global_norm(std::span<Matrix> grads, std::optional<double> clip) {
  double sq = 0.0;
  for (const Matrix& g : grads)
    for (double x : g.data()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (clip && norm > *clip) {
    const double scale = *clip / norm;
    for (Matrix& g : grads) g *= scale;
  }
  return norm;
}

// ---------------------------------------------------------------------------

enum class OptimizerKind { Adam, RotatedAdam, AdaSgd, Nesterov, PipeDreamLr, DelayCompensation };

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::RotatedAdam: return "rotated_adam";
    case OptimizerKind::AdaSgd: return "adasgd";
    case OptimizerKind::Nesterov: return "nesterov";
    case OptimizerKind::PipeDreamLr: return "pipedream_lr";
    case OptimizerKind::DelayCompensation: return "delay_compensation";
  }
  return "unknown";
}

inline std::optional<OptimizerKind> optimizer_kind_from_string(const std::string& s) {
  for (auto k : {OptimizerKind::Adam, OptimizerKind::RotatedAdam, OptimizerKind::AdaSgd, OptimizerKind::Nesterov,
                 OptimizerKind::PipeDreamLr, OptimizerKind::DelayCompensation})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  AdamHyper hyper;
  EstimationConfig estimation;
  std::vector<std::size_t> rotation_exclude;  // parameter indices kept unrotated
  double lr_delay_exponent = 1.0;             // PipeDream-LR
  double dc_lambda = 0.04;                    // Delay Compensation
};

// Owns per-parameter optimizer state for one run.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::span<const Matrix> params, std::vector<long> group_delays = {})
      : config_(std::move(config)), group_delays_(std::move(group_delays)) {
    validate(config_.hyper);
    if (config_.kind == OptimizerKind::RotatedAdam) validate(config_.estimation);
    if (!(config_.dc_lambda >= 0.0 && config_.dc_lambda <= 1.0)) throw Error("dc_lambda must lie in [0, 1]");
    if (group_delays_.empty()) group_delays_.assign(params.size(), 0);
    if (group_delays_.size() != params.size()) throw DimensionError("one delay per parameter matrix is required");
    for (const Matrix& w : params) {
      moments_.push_back(MomentState::zeros_like(w));
      if (config_.kind == OptimizerKind::RotatedAdam) bases_.push_back(init_basis(w.rows(), w.cols(), config_.estimation));
      adasgd_.m.push_back(Matrix::zeros(w.rows(), w.cols()));
    }
  }

  const OptimizerConfig& config() const noexcept { return config_; }
  long step_count() const noexcept { return step_; }

  // Learning rate applied to parameter i.
  double eta(std::size_t i) const {
    if (config_.kind == OptimizerKind::PipeDreamLr)
      return pipedream_lr_scale(group_delays_[i], config_.hyper.eta, config_.lr_delay_exponent);
    return config_.hyper.eta;
  }

  bool rotates(std::size_t i) const {
    if (config_.kind != OptimizerKind::RotatedAdam) return false;
    for (std::size_t e : config_.rotation_exclude)
      if (e == i) return false;
    return true;
  }

  const BasisState* basis(std::size_t i) const { return rotates(i) ? &bases_[i] : nullptr; }

  // Pins the rotation of parameter i; pair with update_frequency = kNeverRefresh
  // to keep it fixed for the whole run.
  void set_basis(std::size_t i, Matrix u, Matrix v) {
    if (!rotates(i)) throw Error("parameter " + std::to_string(i) + " is not rotated");
    BasisState& b = bases_[i];
    if (!u.same_shape(b.u) || !v.same_shape(b.v)) throw DimensionError("set_basis: basis shape mismatch");
    b.u = std::move(u);
    b.v = std::move(v);
    b.rotate_left = b.rotate_right = true;
  }
  const MomentState& moments(std::size_t i) const { return moments_[i]; }

  // Applies one update. `stale_params` is only read by Delay Compensation.
  // Returns the gradient norm before clipping.
  double step(std::span<Matrix> params, std::vector<Matrix> grads, std::span<const Matrix> stale_params = {}) {
    if (params.size() != moments_.size() || grads.size() != params.size()) {
      throw DimensionError("optimizer step: expected " + std::to_string(moments_.size()) + " parameter matrices");
    }
    ++step_;
    for (const Matrix& g : grads)
      if (!g.all_finite()) throw NonFiniteError("non-finite gradient", step_);

    if (config_.kind == OptimizerKind::DelayCompensation && !stale_params.empty()) {
      for (std::size_t i = 0; i < grads.size(); ++i)
        grads[i] = delay_compensated_gradient(grads[i], params[i], stale_params[i], config_.dc_lambda);
    }
    const double norm = clip_global_norm(grads, config_.hyper.grad_clip);

    if (config_.kind == OptimizerKind::AdaSgd) {
      adasgd_step(params, grads, adasgd_, config_.hyper, step_);
      return norm;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      AdamHyper h = config_.hyper;
      h.eta = eta(i);
      switch (config_.kind) {
        case OptimizerKind::Nesterov: nesterov_adam_step(params[i], grads[i], moments_[i], h, step_); break;
        case OptimizerKind::RotatedAdam:
          if (rotates(i)) {
            RotatedState s{std::move(moments_[i]), std::move(bases_[i])};
            rotated_adam_step(params[i], grads[i], s, h, config_.estimation, step_);
            moments_[i] = std::move(s.moments);
            bases_[i] = std::move(s.basis);
          } else {
            adam_step(params[i], grads[i], moments_[i], h, step_);
          }
          break;
        default: adam_step(params[i], grads[i], moments_[i], h, step_); break;
      }
    }
    return norm;
  }

  // Direction the next update would take with no new gradient; used by the
  // weight predictor.
  Matrix update_direction(std::size_t i) const {
    const AdamHyper& h = config_.hyper;
    const long t = std::max<long>(step_, 1);
    if (config_.kind == OptimizerKind::AdaSgd) {
      Matrix d = adasgd_.m[i];
      const double denom = std::sqrt(adasgd_.mean_square + h.epsilon);
      for (double& x : d.data()) x /= denom;
      return d;
    }
    if (rotates(i)) {
      const BasisState& b = bases_[i];
      return rotate_back(b, detail::scaled_direction(rotate_into(b, moments_[i].m), moments_[i].v, h, t));
    }
    return detail::scaled_direction(moments_[i].m, moments_[i].v, h, t);
  }

  long rank_warnings() const {
    long n = 0;
    for (const auto& b : bases_) n += b.rank_warnings;
    return n;
  }

 private:
  OptimizerConfig config_;
  std::vector<long> group_delays_;
  std::vector<MomentState> moments_;
  std::vector<BasisState> bases_;
  AdaSgdState adasgd_;
  long step_ = 0;
};

}  // namespace stalelab
