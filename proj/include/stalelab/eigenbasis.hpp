#pragma once

// Eigenbasis estimation for basis-rotated Adam.
//
// Two design axes: the statistic source (First: live momentum outer products,
// Second: EMAs of G G^T and G^T G) and the rotation geometry (Unilateral:
// rotate only the smaller side of the gradient, Bilateral: rotate both).
// Bases are refreshed with one step of power iteration followed by QR.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "stalelab/error.hpp"
#include "stalelab/linalg.hpp"

namespace stalelab {

enum class Source { First, Second };
enum class Geometry { Unilateral, Bilateral };

// PowerQr is what the optimizer uses. ExactEigen replaces the power step with a
// full Jacobi eigendecomposition and exists only as a test oracle.
enum class RefreshMethod { PowerQr, ExactEigen };

inline constexpr long kNeverRefresh = std::numeric_limits<long>::max();

struct EstimationConfig {
  Source source = Source::Second;
  Geometry geometry = Geometry::Bilateral;
  double beta2 = 0.999;
  long update_frequency = 10;
  RefreshMethod method = RefreshMethod::PowerQr;
};

inline std::string to_string(Source s) { return s == Source::First ? "first" : "second"; }
inline std::string to_string(Geometry g) { return g == Geometry::Unilateral ? "unilateral" : "bilateral"; }

inline void validate(const EstimationConfig& c) {
  if (!(c.beta2 > 0.0 && c.beta2 < 1.0)) throw Error("estimation beta2 must lie in (0, 1)");
  if (c.update_frequency < 1) throw Error("estimation update_frequency must be >= 1");
}

struct BasisState {
  Matrix u;                // m x m
  Matrix v;                // n x n
  std::optional<Matrix> l;  // EMA of G G^T (Second source, left side rotated)
  std::optional<Matrix> r;  // EMA of G^T G (Second source, right side rotated)
  bool rotate_left = false;
  bool rotate_right = false;
  long refreshes = 0;
  long degenerate_skips = 0;  // all-zero statistic at a scheduled refresh
  long rank_warnings = 0;     // power step hit a rank-deficient column
};

// Unilateral rotation goes to the smaller side; ties go to the rows.
inline BasisState init_basis(std::size_t m, std::size_t n, const EstimationConfig& config) {
  if (m == 0 || n == 0) throw DimensionError("init_basis: dimensions must be positive");
  BasisState s{Matrix::identity(m), Matrix::identity(n), std::nullopt, std::nullopt};
  if (config.geometry == Geometry::Bilateral) {
    s.rotate_left = true;
    s.rotate_right = true;
  } else if (m <= n) {
    s.rotate_left = true;
  } else {
    s.rotate_right = true;
  }
  if (config.source == Source::Second) {
    if (s.rotate_left) s.l = Matrix::zeros(m, m);
    if (s.rotate_right) s.r = Matrix::zeros(n, n);
  }
  return s;
}

namespace detail {

inline void ema_outer(Matrix& acc, const Matrix& product, double beta2) {
  auto a = acc.data();
  auto p = product.data();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = beta2 * a[k] + (1.0 - beta2) * p[k];
  acc = symmetrize(acc);
}

inline void check_gradient_shape(const BasisState& s, const Matrix& g, const char* where) {
  if (g.rows() != s.u.rows() || g.cols() != s.v.rows()) {
    throw DimensionError(std::string(where) + ": gradient " + g.shape() + " does not match basis " +
                         Matrix::shape_string(s.u.rows(), s.v.rows()));
  }
}

// One power step on a statistic, or nullopt when the refresh must be skipped.
// The statistic is scaled to unit max-entry and shifted by a tiny multiple of
// the identity; neither changes its eigenvectors, but the shift keeps the
// product full rank when the statistic itself is low rank (e.g. M^T M on the
// larger side of a rectangular matrix).
inline std::optional<Matrix> refresh_side(const Matrix& stat, const Matrix& basis, RefreshMethod method,
                                          long& degenerate_skips, long& rank_warnings) {
  double scale = 0.0;
  for (double x : stat.data()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) {
    ++degenerate_skips;
    return std::nullopt;
  }
  if (method == RefreshMethod::ExactEigen) return jacobi_eigen(symmetrize(stat)).vectors;

  constexpr double kShift = 1e-9;
  Matrix normalized = (1.0 / scale) * stat;
  for (std::size_t i = 0; i < normalized.rows(); ++i) normalized(i, i) += kShift;
  try {
    return power_qr_step(normalized, basis);
  } catch (const RankDeficientError&) {
    ++rank_warnings;
    return std::nullopt;
  }
}

}  // namespace detail

// L <- b2 L + (1 - b2) G G^T and, when the right side rotates, R likewise with
// G^T G. No-op for the First source.
inline BasisState accumulate_statistics(BasisState state, const Matrix& g, const EstimationConfig& config) {
  if (config.source != Source::Second) return state;
  detail::check_gradient_shape(state, g, "accumulate_statistics");
  if (state.l) detail::ema_outer(*state.l, matmul(g, g.transpose()), config.beta2);
  if (state.r) detail::ema_outer(*state.r, matmul(g.transpose(), g), config.beta2);
  return state;
}

inline BasisState refresh_basis(BasisState state, const Matrix& momentum, const EstimationConfig& config) {
  detail::check_gradient_shape(state, momentum, "refresh_basis");
  ++state.refreshes;
  if (state.rotate_left) {
    const Matrix stat =
        config.source == Source::Second ? *state.l : matmul(momentum, momentum.transpose());
    if (auto u = detail::refresh_side(stat, state.u, config.method, state.degenerate_skips, state.rank_warnings))
      state.u = std::move(*u);
  }
  if (state.rotate_right) {
    const Matrix stat =
        config.source == Source::Second ? *state.r : matmul(momentum.transpose(), momentum);
    if (auto v = detail::refresh_side(stat, state.v, config.method, state.degenerate_skips, state.rank_warnings))
      state.v = std::move(*v);
  }
  return state;
}

// U^T X V, skipping sides that are not rotated.
inline Matrix rotate_into(const BasisState& s, const Matrix& x) {
  Matrix y = s.rotate_left ? matmul(s.u.transpose(), x) : x;
  return s.rotate_right ? matmul(y, s.v) : y;
}

// U X V^T
inline Matrix rotate_back(const BasisState& s, const Matrix& x) {
  Matrix y = s.rotate_left ? matmul(s.u, x) : x;
  return s.rotate_right ? matmul(y, s.v.transpose()) : y;
}

}  // namespace stalelab
