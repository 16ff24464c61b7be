#pragma once

// Small dense complex linear algebra for per-bin spatial processing:
// Cholesky, Hermitian Jacobi eigensolver and the whitened generalized
// eigenvalue decomposition of a Hermitian / positive-definite pair.
//
// Matrix sizes are the microphone count (typically 2..16), so everything
// is unblocked O(M^3) code with no external kernels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gpc/error.hpp"

namespace gpc {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using RVector = std::vector<double>;

inline double abs2(cplx z) { return z.real() * z.real() + z.imag() * z.imag(); }

inline double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (cplx z : v) s += abs2(z);
  return std::sqrt(s);
}

/// a^H b
inline cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: vector sizes differ");
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// Dense row-major complex matrix.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  cplx operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  CVector column(std::size_t c) const {
    CVector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  ComplexMatrix adjoint() const {
    ComplexMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = std::conj((*this)(r, c));
    return t;
  }

  double frobenius() const {
    double s = 0.0;
    for (cplx z : data_) s += abs2(z);
    return std::sqrt(s);
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](cplx z) {
      return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
  }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product: inner dimensions differ");
    ComplexMatrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cplx aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend CVector operator*(const ComplexMatrix& a, std::span<const cplx> x) {
    if (a.cols_ != x.size()) throw DimensionMismatch("matrix-vector product: sizes differ");
    CVector out(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      cplx s{};
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      out[i] = s;
    }
    return out;
  }

  friend ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionMismatch("matrix difference: shapes differ");
    ComplexMatrix out = a;
    for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] -= b.data_[i];
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

/// Hermitian matrix holding only the lower triangle, so A == A^H by
/// construction. Diagonal entries are stored as reals.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(std::size_t dim) : dim_(dim), lower_(dim * (dim + 1) / 2) {}

  static HermitianMatrix identity(std::size_t n) {
    HermitianMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
  }

  /// Takes the lower triangle of `a`, averaged with the conjugate of the
  /// upper triangle so that nearly-Hermitian round-off is symmetrized.
  static HermitianMatrix from_dense(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("hermitian: matrix is not square");
    HermitianMatrix h(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j <= i; ++j) h.set(i, j, 0.5 * (a(i, j) + std::conj(a(j, i))));
    return h;
  }

  std::size_t dim() const { return dim_; }

  cplx operator()(std::size_t i, std::size_t j) const {
    return i >= j ? lower_[index(i, j)] : std::conj(lower_[index(j, i)]);
  }

  void set(std::size_t i, std::size_t j, cplx v) {
    if (i == j)
      lower_[index(i, i)] = v.real();
    else if (i > j)
      lower_[index(i, j)] = v;
    else
      lower_[index(j, i)] = std::conj(v);
  }

  /// this <- forget * this + weight * y y^H
  void rank_one_update(double forget, double weight, std::span<const cplx> y) {
    if (y.size() != dim_) throw DimensionMismatch("rank-one update: vector size differs from matrix dimension");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j < i; ++j, ++idx) lower_[idx] = forget * lower_[idx] + weight * y[i] * std::conj(y[j]);
      lower_[idx] = forget * lower_[idx].real() + weight * abs2(y[i]);
      ++idx;
    }
  }

  HermitianMatrix& operator*=(double s) {
    for (cplx& z : lower_) z *= s;
    return *this;
  }
  friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }

  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) {
    if (a.dim_ != b.dim_) throw DimensionMismatch("hermitian sum: dimensions differ");
    for (std::size_t i = 0; i < a.lower_.size(); ++i) a.lower_[i] += b.lower_[i];
    return a;
  }

  ComplexMatrix to_dense() const {
    ComplexMatrix a(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) a(i, j) = (*this)(i, j);
    return a;
  }

  double frobenius() const { return to_dense().frobenius(); }

  friend CVector operator*(const HermitianMatrix& a, std::span<const cplx> x) {
    if (a.dim_ != x.size()) throw DimensionMismatch("hermitian matrix-vector product: sizes differ");
    CVector out(a.dim_);
    for (std::size_t i = 0; i < a.dim_; ++i) {
      cplx s{};
      for (std::size_t j = 0; j < a.dim_; ++j) s += a(i, j) * x[j];
      out[i] = s;
    }
    return out;
  }

 private:
  static std::size_t index(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

  std::size_t dim_ = 0;
  std::vector<cplx> lower_;
};

/// Eigen- or generalized eigendecomposition. Eigenvalues descending;
/// column m of `eigenvectors` belongs to eigenvalues[m].
struct GevdResult {
  RVector eigenvalues;
  ComplexMatrix eigenvectors;
};

/// Lower-triangular L with a = L L^H and real positive diagonal.
inline ComplexMatrix cholesky(const HermitianMatrix& a) {
  const std::size_t n = a.dim();
  ComplexMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= abs2(l(j, k));
    if (!(d > 0.0))
      throw NotPositiveDefinite("cholesky: non-positive pivot at column " + std::to_string(j) +
                                "; apply diagonal loading to the matrix");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solves L X = B for lower-triangular L by forward substitution.
inline ComplexMatrix solve_lower(const ComplexMatrix& l, const ComplexMatrix& b) {
  const std::size_t n = l.rows();
  if (l.cols() != n || b.rows() != n) throw DimensionMismatch("solve_lower: incompatible shapes");
  ComplexMatrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      if (l(i, i) == cplx{}) throw SingularMatrix("solve_lower: zero pivot at row " + std::to_string(i));
      cplx s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  return x;
}

/// Solves L^H X = B for lower-triangular L by back substitution.
inline ComplexMatrix solve_lower_adjoint(const ComplexMatrix& l, const ComplexMatrix& b) {
  const std::size_t n = l.rows();
  if (l.cols() != n || b.rows() != n) throw DimensionMismatch("solve_lower_adjoint: incompatible shapes");
  ComplexMatrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t ii = n; ii-- > 0;) {
      if (l(ii, ii) == cplx{}) throw SingularMatrix("solve_lower_adjoint: zero pivot at row " + std::to_string(ii));
      cplx s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x(k, c);
      x(ii, c) = s / std::conj(l(ii, ii));
    }
  return x;
}

/// x = gamma^{-1} h for positive-definite gamma.
inline CVector hermitian_inverse_apply(const HermitianMatrix& gamma, std::span<const cplx> h) {
  if (gamma.dim() != h.size()) throw DimensionMismatch("hermitian_inverse_apply: sizes differ");
  ComplexMatrix l;
  try {
    l = cholesky(gamma);
  } catch (const NotPositiveDefinite& e) {
    throw SingularMatrix(std::string("hermitian_inverse_apply: ") + e.what());
  }
  ComplexMatrix rhs(h.size(), 1);
  for (std::size_t i = 0; i < h.size(); ++i) rhs(i, 0) = h[i];
  return solve_lower_adjoint(l, solve_lower(l, rhs)).column(0);
}

namespace detail {

// Sorts eigenpairs descending (stable on ties) and fixes each column's
// phase so its largest-modulus entry is real positive.
inline GevdResult sort_and_normalize(RVector values, const ComplexMatrix& vectors) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  GevdResult out{RVector(n), ComplexMatrix(vectors.rows(), n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.eigenvalues[c] = values[src];
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < vectors.rows(); ++r)
      if (abs2(vectors(r, src)) > best) {
        best = abs2(vectors(r, src));
        arg = r;
      }
    const cplx pivot = vectors(arg, src);
    const cplx phase = best > 0.0 ? std::conj(pivot) / std::abs(pivot) : cplx{1.0};
    for (std::size_t r = 0; r < vectors.rows(); ++r) out.eigenvectors(r, c) = vectors(r, src) * phase;
    out.eigenvectors(arg, c) = std::abs(pivot);
  }
  return out;
}

}  // namespace detail

struct JacobiOptions {
  double tolerance = 1e-14;  // off-diagonal mass relative to ||A||_F
  int max_sweeps = 100;
};

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
/// Returns descending eigenvalues and a unitary eigenvector matrix.
inline GevdResult eigh(const HermitianMatrix& a, JacobiOptions opts = {}) {
  const std::size_t n = a.dim();
  ComplexMatrix w = a.to_dense();
  if (!w.all_finite()) throw InvalidConfig("eigh: matrix has non-finite entries");
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale = w.frobenius();

  auto off_mass = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += abs2(w(i, j));
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_mass() > opts.tolerance * scale) {
    if (sweep++ >= opts.max_sweeps)
      throw NoConvergence("eigh: Jacobi iteration exceeded " + std::to_string(opts.max_sweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = w(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const cplx phase = apq / mag;  // e^{i phi}
        const double app = w(p, p).real();
        const double aqq = w(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on the (p, q) plane.
        const cplx jqp = -s * std::conj(phase);
        const cplx jqq = c * std::conj(phase);
        for (std::size_t k = 0; k < n; ++k) {
          const cplx wkp = w(k, p), wkq = w(k, q);
          w(k, p) = wkp * c + wkq * jqp;
          w(k, q) = wkp * s + wkq * jqq;
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * c + vkq * jqp;
          v(k, q) = vkp * s + vkq * jqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx wpk = w(p, k), wqk = w(q, k);
          w(p, k) = c * wpk + std::conj(jqp) * wqk;
          w(q, k) = s * wpk + std::conj(jqq) * wqk;
        }
        w(p, q) = 0.0;
        w(q, p) = 0.0;
        w(p, p) = w(p, p).real();
        w(q, q) = w(q, q).real();
      }
  }

  RVector values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = w(i, i).real();
  return detail::sort_and_normalize(std::move(values), v);
}

/// Generalized eigendecomposition psi P = gamma P Diag(lambda) with
/// P^H gamma P = I, computed by Cholesky whitening of gamma.
inline GevdResult gevd(const HermitianMatrix& psi, const HermitianMatrix& gamma, JacobiOptions opts = {}) {
  if (psi.dim() != gamma.dim()) throw DimensionMismatch("gevd: psi and gamma dimensions differ");
  const ComplexMatrix l = cholesky(gamma);
  // W = L^{-1} psi L^{-H} = L^{-1} (L^{-1} psi)^H
  const ComplexMatrix x = solve_lower(l, psi.to_dense());
  const HermitianMatrix whitened = HermitianMatrix::from_dense(solve_lower(l, x.adjoint()));
  GevdResult eig = eigh(whitened, opts);
  eig.eigenvectors = solve_lower_adjoint(l, eig.eigenvectors);
  return eig;
}

}  // namespace gpc
