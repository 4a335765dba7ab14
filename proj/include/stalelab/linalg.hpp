#pragma once

// Dense row-major matrices and the small set of kernels the optimizers and
// oracles need. Everything is float64 with a fixed accumulation order, so
// results are bit-reproducible across runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stalelab/error.hpp"

namespace stalelab {

class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    check_shape(rows, cols);
    data_.assign(rows * cols, 0.0);
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape(rows, cols);
    if (data_.size() != rows * cols) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(rows, cols));
    }
    check_finite();
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    check_shape(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    check_finite();
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    m.check_finite();
    return m;
  }

  static Matrix column(std::span<const double> v) {
    return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  Matrix& operator+=(const Matrix& o) {
    require_same(o, "+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

  Matrix& operator-=(const Matrix& o) {
    require_same(o, "-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  static std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

 private:
  static void check_shape(std::size_t r, std::size_t c) {
    if (r == 0 || c == 0) throw DimensionError("matrix shape must be positive, got " + shape_string(r, c));
  }

  void check_finite() const {
    if (!all_finite()) throw Error("matrix entries must be finite");
  }

  void require_same(const Matrix& o, const char* op) const {
    if (!same_shape(o)) throw DimensionError(std::string("shape mismatch in ") + op + ": " + shape() + " vs " + o.shape());
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Matrix c(a.rows(), b.cols());
  // i-k-j order still accumulates every c(i,j) over k in increasing order.
  const std::size_t n = a.cols();
  const std::size_t p = b.cols();
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* cd = c.data().data();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* __restrict crow = cd + i * p;
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = ad[i * n + k];
      const double* __restrict brow = bd + k * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("hadamard: " + a.shape() + " vs " + b.shape());
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t k = 0; k < cd.size(); ++k) cd[k] *= bd[k];
  return c;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

// Sum of absolute values of all entries.
inline double one_one_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += std::abs(x);
  return s;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: " + a.shape() + " vs " + b.shape());
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

inline double max_asymmetry(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("expected a square matrix, got " + a.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - a(j, i)));
  return m;
}

inline Matrix symmetrize(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("symmetrize: expected a square matrix, got " + a.shape());
  Matrix s = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  return s;
}

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return k;
}

// Column-major vectorization, so that vec(A X B) = (B^T kron A) vec(X).
inline Matrix vec(const Matrix& a) {
  Matrix v(a.size(), 1);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) v(j * a.rows() + i, 0) = a(i, j);
  return v;
}

inline Matrix unvec(const Matrix& v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: " + v.shape() + " into " + Matrix::shape_string(rows, cols));
  Matrix a(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) a(i, j) = v.data()[j * rows + i];
  return a;
}

inline Matrix rotation_2d(double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  return Matrix{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}};
}

struct QrResult {
  Matrix q;  // rows x cols, orthonormal columns
  Matrix r;  // cols x cols, upper triangular with non-negative diagonal
};

inline constexpr double kRankTolerance = 1e-12;

// Householder QR of a tall matrix. Throws RankDeficientError when a column's
// residual norm drops below kRankTolerance.
inline QrResult qr_decompose(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m < n) throw DimensionError("qr_decompose requires rows >= cols, got " + a.shape());

  Matrix work = a;
  std::vector<std::vector<double>> reflectors;
  reflectors.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += work(i, k) * work(i, k);
    norm = std::sqrt(norm);
    if (norm < kRankTolerance) throw RankDeficientError(k, norm);

    const double alpha = work(k, k) >= 0.0 ? -norm : norm;
    std::vector<double> v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = work(i, k);
    v[0] -= alpha;
    double vnorm = 0.0;
    for (double x : v) vnorm += x * x;
    vnorm = std::sqrt(vnorm);
    for (double& x : v) x /= vnorm;

    for (std::size_t j = k; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < m; ++i) dot += v[i - k] * work(i, j);
      for (std::size_t i = k; i < m; ++i) work(i, j) -= 2.0 * v[i - k] * dot;
    }
    reflectors.push_back(std::move(v));
  }

  Matrix q(m, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t kk = n; kk-- > 0;) {
    const auto& v = reflectors[kk];
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = kk; i < m; ++i) dot += v[i - kk] * q(i, j);
      for (std::size_t i = kk; i < m; ++i) q(i, j) -= 2.0 * v[i - kk] * dot;
    }
  }

  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) r(i, j) = work(i, j);

  for (std::size_t k = 0; k < n; ++k) {
    if (r(k, k) < 0.0) {
      for (std::size_t j = k; j < n; ++j) r(k, j) = -r(k, j);
      for (std::size_t i = 0; i < m; ++i) q(i, k) = -q(i, k);
    }
  }
  return {std::move(q), std::move(r)};
}

// One step of subspace (power) iteration: orthonormalize a*q.
inline Matrix power_qr_step(const Matrix& a, const Matrix& q) {
  if (!a.is_square()) throw DimensionError("power_qr_step: operator must be square, got " + a.shape());
  if (q.rows() != a.rows() || q.cols() > q.rows()) {
    throw DimensionError("power_qr_step: basis " + q.shape() + " incompatible with operator " + a.shape());
  }
  return qr_decompose(matmul(a, q)).q;
}

struct EigenResult {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns are eigenvectors
};

inline constexpr double kSymmetryTolerance = 1e-9;

// Cyclic Jacobi eigensolver for symmetric matrices. Eigenvalues come back in
// descending order; each eigenvector has its largest-magnitude entry positive.
inline EigenResult jacobi_eigen(const Matrix& input) {
  if (!input.is_square()) throw DimensionError("jacobi_eigen: expected a square matrix, got " + input.shape());
  const double asym = max_asymmetry(input);
  if (asym > kSymmetryTolerance) {
    throw NotSymmetricError("jacobi_eigen: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }

  const std::size_t n = input.rows();
  Matrix a = symmetrize(input);
  Matrix v = Matrix::identity(n);
  const double tol = 1e-12 * std::max(1.0, frobenius_norm(a));

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = off_norm() < tol;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() < tol;
  }
  if (!converged) throw Error("jacobi_eigen: no convergence within 100 sweeps");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenResult out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(arg, src))) arg = k;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v(k, src);
  }
  return out;
}

// V diag(values) V^T
inline Matrix reconstruct(const EigenResult& e) {
  Matrix scaled = e.vectors;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= e.values[j];
  return matmul(scaled, e.vectors.transpose());
}

// ||Q^T Q - I||_F
inline double orthonormality_error(const Matrix& q) {
  Matrix g = matmul(q.transpose(), q);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

}  // namespace stalelab
