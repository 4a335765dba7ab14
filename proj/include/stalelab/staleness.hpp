#pragma once

// Delay engine. Gradients are computed on parameters from tau steps ago
// (weight stashing) or on an extrapolation of them (weight prediction).
// During warm-up the oldest available snapshot is served, so the effective
// delay ramps 0, 1, ..., tau.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stalelab/error.hpp"
#include "stalelab/landscapes.hpp"
#include "stalelab/linalg.hpp"
#include "stalelab/optim.hpp"

namespace stalelab {

enum class StaleMode { Stashing, Prediction };

inline std::string to_string(StaleMode m) { return m == StaleMode::Stashing ? "stashing" : "prediction"; }

struct StalenessConfig {
  long tau = 0;
  std::optional<long> stages;  // per-stage delays over parameter groups instead of uniform tau
  StaleMode mode = StaleMode::Stashing;
  double prediction_horizon_scale = 1.0;
};

inline void validate(const StalenessConfig& c) {
  if (c.tau < 0) throw Error("tau must be non-negative");
  if (c.stages && *c.stages < 1) throw Error("stages must be >= 1");
  if (!(c.prediction_horizon_scale >= 0.0)) throw Error("prediction_horizon_scale must be non-negative");
}

// 1F1B: stage s (1-based) waits for the P - s stages behind it.
inline std::vector<long> stage_delay_profile(long stages) {
  if (stages < 1) throw Error("stage count must be >= 1");
  std::vector<long> out;
  for (long s = stages - 1; s >= 0; --s) out.push_back(s);
  return out;
}

// Layer i (0-based) of n_layers sits on stage ceil((i+1) P / L).
inline long stage_of_layer(std::size_t i, std::size_t n_layers, long stages) {
  const long num = static_cast<long>(i + 1) * stages;
  const long den = static_cast<long>(n_layers);
  return (num + den - 1) / den;
}

// Delay applied to each parameter matrix.
inline std::vector<long> resolve_delays(const StalenessConfig& c, std::size_t n_params) {
  if (!c.stages) return std::vector<long>(n_params, c.tau);
  std::vector<long> out;
  for (std::size_t i = 0; i < n_params; ++i) out.push_back(*c.stages - stage_of_layer(i, n_params, *c.stages));
  return out;
}

// Ring of the last capacity parameter snapshots; age 0 is the newest.
class StashBuffer {
 public:
  StashBuffer(std::size_t capacity, std::vector<Matrix> initial) : capacity_(capacity) {
    if (capacity_ == 0) throw Error("stash capacity must be >= 1");
    ring_.reserve(capacity_);
    ring_.push_back(std::move(initial));
  }

  static StashBuffer for_delay(long max_delay, std::vector<Matrix> initial) {
    return StashBuffer(static_cast<std::size_t>(max_delay) + 1, std::move(initial));
  }

  void advance(std::vector<Matrix> w) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(w));
      head_ = ring_.size() - 1;
    } else {
      head_ = (head_ + 1) % capacity_;
      ring_[head_] = std::move(w);
    }
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return ring_.size(); }

  std::size_t stored_matrices() const {
    std::size_t n = 0;
    for (const auto& s : ring_) n += s.size();
    return n;
  }

  // Oldest age actually available; warm-up clamps requests to this.
  long max_age() const noexcept { return static_cast<long>(ring_.size()) - 1; }

  long effective_age(long requested) const { return std::min(std::max(requested, 0L), max_age()); }

  const std::vector<Matrix>& snapshot(long age) const {
    const long a = effective_age(age);
    return ring_[(head_ + capacity_ - static_cast<std::size_t>(a)) % capacity_];
  }

  const std::vector<Matrix>& current() const { return ring_[head_]; }

 private:
  std::size_t capacity_;
  std::vector<std::vector<Matrix>> ring_;
  std::size_t head_ = 0;
};

// Parameters the delayed gradient is evaluated at, one matrix per group.
// Prediction extrapolates w_{t-d} by d steps of the optimizer's current
// update direction.
inline std::vector<Matrix> delayed_params(const StashBuffer& stash, const std::vector<long>& delays,
                                          const StalenessConfig& config, const Optimizer* optimizer) {
  const std::size_t n = stash.current().size();
  if (delays.size() != n) throw DimensionError("one delay per parameter matrix is required");
  std::vector<Matrix> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long age = stash.effective_age(delays[i]);
    Matrix w = stash.snapshot(age)[i];
    if (config.mode == StaleMode::Prediction && age > 0 && optimizer != nullptr && optimizer->step_count() > 0) {
      const double horizon = config.prediction_horizon_scale * static_cast<double>(age) * optimizer->eta(i);
      w -= horizon * optimizer->update_direction(i);
    }
    out.push_back(std::move(w));
  }
  return out;
}

struct DelayedGradient {
  Evaluation eval;              // loss and gradients at the stale point
  std::vector<Matrix> params;   // the point itself
  long effective_delay = 0;     // largest delay actually served
};

inline DelayedGradient delayed_gradient(const Landscape& landscape, const StashBuffer& stash,
                                        const std::vector<long>& delays, const StalenessConfig& config,
                                        const Optimizer* optimizer, std::uint64_t seed, long step) {
  DelayedGradient out;
  out.params = delayed_params(stash, delays, config, optimizer);
  out.eval = landscape.evaluate(out.params, seed, step);
  for (long d : delays) out.effective_delay = std::max(out.effective_delay, stash.effective_age(d));
  return out;
}

}  // namespace stalelab
