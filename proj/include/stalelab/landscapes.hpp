#pragma once

// Differentiable test objectives: rotated quadratics, the spiral valley and a
// small tanh MLP with matrix-shaped weights. Each returns the loss together
// with its analytic gradient.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stalelab/error.hpp"
#include "stalelab/linalg.hpp"
#include "stalelab/rng.hpp"

namespace stalelab {

struct Evaluation {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

// ---------------------------------------------------------------------------
// Quadratic 1/2 vec(W)^T H vec(W).

struct QuadraticSpec {
  std::vector<double> eigenvalues;  // descending
  Matrix rotation;                  // columns: eigenvectors of H
  Matrix hessian;
  std::size_t param_rows;
  std::size_t param_cols;

  std::size_t dim() const noexcept { return hessian.rows(); }
};

inline QuadraticSpec make_quadratic(std::vector<double> eigenvalues, const Matrix& rotation, std::size_t param_rows,
                                    std::size_t param_cols) {
  const std::size_t n = eigenvalues.size();
  if (rotation.rows() != n || rotation.cols() != n) {
    throw DimensionError("quadratic rotation " + rotation.shape() + " does not match " + std::to_string(n) +
                         " eigenvalues");
  }
  if (param_rows * param_cols != n) throw DimensionError("quadratic parameter shape does not match Hessian dimension");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eigenvalues[i] > 0.0)) throw Error("quadratic eigenvalues must be positive");
    if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) throw Error("quadratic eigenvalues must be descending");
  }
  if (orthonormality_error(rotation) > 1e-10) throw Error("quadratic rotation must be orthogonal");

  Matrix scaled = rotation;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= eigenvalues[j];
  Matrix h = symmetrize(matmul(scaled, rotation.transpose()));
  return QuadraticSpec{std::move(eigenvalues), rotation, std::move(h), param_rows, param_cols};
}

// Two-dimensional quadratic whose eigenbasis is the standard basis rotated by
// rotation_deg. Zero degrees gives a diagonal (basis-aligned) Hessian.
inline QuadraticSpec make_quadratic_2d(double lambda_major, double lambda_minor, double rotation_deg) {
  return make_quadratic({lambda_major, lambda_minor}, rotation_2d(rotation_deg), 2, 1);
}

// H = A kron B for a parameter matrix W of shape b.rows() x a.rows().
inline QuadraticSpec build_kronecker_quadratic(const Matrix& a, const Matrix& b) {
  for (const Matrix* f : {&a, &b}) {
    if (!f->is_square()) throw DimensionError("Kronecker factor must be square, got " + f->shape());
    if (max_asymmetry(*f) > kSymmetryTolerance) throw NotSymmetricError("Kronecker factor is not symmetric");
  }
  Matrix h = kronecker(symmetrize(a), symmetrize(b));
  EigenResult e = jacobi_eigen(h);
  for (double& l : e.values) {
    if (l < -1e-10 * std::max(1.0, e.values.front())) throw Error("Kronecker factors must be positive semi-definite");
    if (l < 0.0) l = 0.0;
  }
  return QuadraticSpec{std::move(e.values), std::move(e.vectors), std::move(h), b.rows(), a.rows()};
}

inline Evaluation quadratic_eval(const QuadraticSpec& spec, const Matrix& w) {
  if (w.size() != spec.dim()) {
    throw DimensionError("quadratic_eval: parameter " + w.shape() + " does not match Hessian dimension " +
                         std::to_string(spec.dim()));
  }
  const Matrix x = vec(w);
  const Matrix hx = matmul(spec.hessian, x);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) loss += x.data()[i] * hx.data()[i];
  Evaluation out;
  out.loss = 0.5 * loss;
  out.grads.push_back(unvec(hx, w.rows(), w.cols()));
  return out;
}

// ---------------------------------------------------------------------------
// Spiral valley f(r, theta) = r^2 + (A sin(F r - theta) + c)^2.

struct SpiralSpec {
  double amplitude = 20.0;
  double frequency = 4.0;
  double offset = 1.0;
};

inline constexpr double kSpiralOriginCutoff = 1e-9;

inline void validate(const SpiralSpec& s) {
  if (!(s.amplitude > 0.0) || !(s.frequency > 0.0)) throw Error("spiral amplitude and frequency must be positive");
}

inline Evaluation spiral_eval(const SpiralSpec& spec, const Matrix& xy) {
  if (xy.size() != 2) throw DimensionError("spiral_eval expects a 2-vector, got " + xy.shape());
  const double x = xy.data()[0];
  const double y = xy.data()[1];
  const double r = std::hypot(x, y);
  if (!(r > kSpiralOriginCutoff)) throw DegenerateChartError("spiral polar chart is undefined within 1e-9 of the origin");
  const double theta = std::atan2(y, x);
  const double phase = spec.frequency * r - theta;
  const double wave = spec.amplitude * std::sin(phase) + spec.offset;
  const double dwave = 2.0 * wave * spec.amplitude * std::cos(phase);

  const double df_dr = 2.0 * r + dwave * spec.frequency;
  const double df_dtheta = -dwave;

  Evaluation out;
  out.loss = r * r + wave * wave;
  Matrix g(xy.rows(), xy.cols());
  g.data()[0] = df_dr * x / r - df_dtheta * y / (r * r);
  g.data()[1] = df_dr * y / r + df_dtheta * x / (r * r);
  out.grads.push_back(std::move(g));
  return out;
}

inline Matrix spiral_point(double radius, double angle_deg) {
  const double t = angle_deg * std::numbers::pi / 180.0;
  return Matrix{{radius * std::cos(t)}, {radius * std::sin(t)}};
}

// ---------------------------------------------------------------------------
// tanh MLP without biases. Weight i has shape layer_dims[i+1] x layer_dims[i];
// samples are columns. Loss is the per-sample squared error averaged over the
// batch.

struct MlpSpec {
  std::vector<std::size_t> layer_dims;
  std::size_t n_samples = 256;
  std::size_t batch_size = 0;  // 0 means full batch
  std::uint64_t dataset_seed = 0;
  double teacher_scale = 1.0;
  double init_scale = 1.0;
};

struct MlpData {
  Matrix inputs;   // d_in x n_samples
  Matrix targets;  // d_out x n_samples
};

inline void validate(const MlpSpec& spec) {
  if (spec.layer_dims.size() < 2) throw Error("mlp needs at least an input and an output dimension");
  for (std::size_t d : spec.layer_dims)
    if (d == 0) throw Error("mlp layer dimensions must be positive");
  if (spec.n_samples == 0) throw Error("mlp needs at least one sample");
  if (spec.batch_size > spec.n_samples) throw Error("mlp batch_size exceeds n_samples");
}

inline std::vector<Matrix> mlp_random_weights(const MlpSpec& spec, CounterRng rng, double scale) {
  std::vector<Matrix> w;
  for (std::size_t i = 0; i + 1 < spec.layer_dims.size(); ++i) {
    Matrix m(spec.layer_dims[i + 1], spec.layer_dims[i]);
    const double s = scale / std::sqrt(static_cast<double>(spec.layer_dims[i]));
    for (double& x : m.data()) x = s * rng.normal();
    w.push_back(std::move(m));
  }
  return w;
}

namespace detail {

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overload(Fs...) -> Overload<Fs...>;

struct MlpForward {
  std::vector<Matrix> activations;  // activations[0] = inputs, back() = output
};

inline void check_mlp_shapes(const MlpSpec& spec, std::span<const Matrix> weights) {
  if (weights.size() + 1 != spec.layer_dims.size()) {
    throw DimensionError("mlp expects " + std::to_string(spec.layer_dims.size() - 1) + " weight matrices, got " +
                         std::to_string(weights.size()));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].rows() != spec.layer_dims[i + 1] || weights[i].cols() != spec.layer_dims[i]) {
      throw DimensionError("mlp weight " + std::to_string(i) + " has shape " + weights[i].shape() + ", expected " +
                           Matrix::shape_string(spec.layer_dims[i + 1], spec.layer_dims[i]));
    }
  }
}

inline MlpForward mlp_forward(std::span<const Matrix> weights, const Matrix& inputs) {
  MlpForward f;
  f.activations.push_back(inputs);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Matrix z = matmul(weights[i], f.activations.back());
    if (i + 1 < weights.size())
      for (double& x : z.data()) x = std::tanh(x);
    f.activations.push_back(std::move(z));
  }
  return f;
}

}  // namespace detail

inline MlpData make_mlp_dataset(const MlpSpec& spec) {
  validate(spec);
  CounterRng root(spec.dataset_seed);
  CounterRng input_rng = root.split(1);
  Matrix x(spec.layer_dims.front(), spec.n_samples);
  for (double& v : x.data()) v = input_rng.normal();
  const std::vector<Matrix> teacher = mlp_random_weights(spec, root.split(2), spec.teacher_scale);
  Matrix y = detail::mlp_forward(teacher, x).activations.back();
  return MlpData{std::move(x), std::move(y)};
}

inline Evaluation mlp_eval(const MlpSpec& spec, std::span<const Matrix> weights, const Matrix& inputs,
                           const Matrix& targets) {
  detail::check_mlp_shapes(spec, weights);
  if (inputs.rows() != spec.layer_dims.front() || targets.rows() != spec.layer_dims.back() ||
      inputs.cols() != targets.cols()) {
    throw DimensionError("mlp batch shapes " + inputs.shape() + " / " + targets.shape() + " do not match layer dims");
  }
  const auto fwd = detail::mlp_forward(weights, inputs);
  const double n = static_cast<double>(inputs.cols());

  Matrix delta = fwd.activations.back() - targets;
  Evaluation out;
  for (double d : delta.data()) out.loss += d * d;
  out.loss /= n;
  delta *= 2.0 / n;

  out.grads.assign(weights.size(), Matrix(1, 1));
  for (std::size_t i = weights.size(); i-- > 0;) {
    out.grads[i] = matmul(delta, fwd.activations[i].transpose());
    if (i == 0) break;
    Matrix back = matmul(weights[i].transpose(), delta);
    const auto act = fwd.activations[i].data();
    auto bd = back.data();
    for (std::size_t k = 0; k < bd.size(); ++k) bd[k] *= 1.0 - act[k] * act[k];
    delta = std::move(back);
  }
  return out;
}

// Columns of the dataset used at a given step. Full batch when batch_size is 0;
// otherwise a with-replacement sample drawn from the (seed, step) stream.
inline std::pair<Matrix, Matrix> mlp_batch(const MlpSpec& spec, const MlpData& data, std::uint64_t seed, long step) {
  if (spec.batch_size == 0 || spec.batch_size == spec.n_samples) return {data.inputs, data.targets};
  CounterRng rng = CounterRng(seed).split(0xBA7C4).split(static_cast<std::uint64_t>(step));
  Matrix x(data.inputs.rows(), spec.batch_size);
  Matrix y(data.targets.rows(), spec.batch_size);
  for (std::size_t c = 0; c < spec.batch_size; ++c) {
    const std::size_t src = rng.below(spec.n_samples);
    for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) = data.inputs(r, src);
    for (std::size_t r = 0; r < y.rows(); ++r) y(r, c) = data.targets(r, src);
  }
  return {std::move(x), std::move(y)};
}

// ---------------------------------------------------------------------------
// Uniform facade used by the experiment harness.

struct QuadraticProblem {
  QuadraticSpec spec;
  Matrix start;
};

struct SpiralProblem {
  SpiralSpec spec;
  double start_radius = 35.0;
  double start_angle_deg = 0.0;
};

struct MlpProblem {
  MlpSpec spec;
  MlpData data;
};

class Landscape {
 public:
  using Variant = std::variant<QuadraticProblem, SpiralProblem, MlpProblem>;

  explicit Landscape(Variant v) : problem_(std::move(v)) {}

  const Variant& problem() const noexcept { return problem_; }

  std::string kind() const {
    return std::visit(detail::Overload{[](const QuadraticProblem&) { return std::string("quadratic"); },
                               [](const SpiralProblem&) { return std::string("spiral"); },
                               [](const MlpProblem&) { return std::string("mlp"); }},
                      problem_);
  }

  std::vector<Matrix> initial_params(std::uint64_t seed) const {
    return std::visit(
        detail::Overload{[](const QuadraticProblem& p) { return std::vector<Matrix>{p.start}; },
                 [](const SpiralProblem& p) {
                   return std::vector<Matrix>{spiral_point(p.start_radius, p.start_angle_deg)};
                 },
                 [seed](const MlpProblem& p) {
                   return mlp_random_weights(p.spec, CounterRng(seed).split(0x1417), p.spec.init_scale);
                 }},
        problem_);
  }

  // Loss and gradient on the mini-batch of the given step.
  Evaluation evaluate(std::span<const Matrix> params, std::uint64_t seed, long step) const {
    return std::visit(detail::Overload{[&](const QuadraticProblem& p) { return quadratic_eval(p.spec, single(params)); },
                               [&](const SpiralProblem& p) { return spiral_eval(p.spec, single(params)); },
                               [&](const MlpProblem& p) {
                                 auto [x, y] = mlp_batch(p.spec, p.data, seed, step);
                                 return mlp_eval(p.spec, params, x, y);
                               }},
                      problem_);
  }

  // Full objective (whole dataset for the MLP).
  double loss(std::span<const Matrix> params) const {
    return std::visit(detail::Overload{[&](const QuadraticProblem& p) { return quadratic_eval(p.spec, single(params)).loss; },
                               [&](const SpiralProblem& p) { return spiral_eval(p.spec, single(params)).loss; },
                               [&](const MlpProblem& p) {
                                 return mlp_eval(p.spec, params, p.data.inputs, p.data.targets).loss;
                               }},
                      problem_);
  }

  const QuadraticSpec* quadratic() const {
    const auto* q = std::get_if<QuadraticProblem>(&problem_);
    return q ? &q->spec : nullptr;
  }

 private:
  static const Matrix& single(std::span<const Matrix> params) {
    if (params.size() != 1) throw DimensionError("landscape expects a single parameter matrix");
    return params.front();
  }

  Variant problem_;
};

}  // namespace stalelab
