#include "wlasso/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wlasso {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw DimensionMismatch(msg);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require(data_.size() == rows_ * cols_, "entry count does not match rows*cols");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double DenseMatrix::trace() const {
  double t = 0.0;
  std::size_t n = std::min(rows_, cols_);
  for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
  return t;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data() + i * c.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), "matvec: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * a.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += ai[j] * x[j];
    y[i] = acc;
  }
  return y;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
  return c;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "subtract: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  return c;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) c.data()[i] = s * a.data()[i];
  return c;
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double infinity_norm(const DenseMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
    m = std::max(m, s);
  }
  return m;
}

SymmetricToeplitz::SymmetricToeplitz(std::vector<double> first_row)
    : first_row_(std::move(first_row)) {
  if (first_row_.empty()) throw DimensionMismatch("Toeplitz: empty first row");
  if (!(first_row_[0] > 0.0)) throw NotPositiveDefinite("Toeplitz: r0 must be positive");
}

DenseMatrix SymmetricToeplitz::materialize() const {
  std::size_t q = dim();
  DenseMatrix m(q, q);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) m(i, j) = at(i, j);
  return m;
}

std::vector<double> KroneckerOperator::apply(std::span<const double> v) const {
  require(v.size() == in_dim(), "kron apply: vector length != cols(left)*cols(right)");
  // v = vec(M) with M of shape cols(right) x cols(left); result = vec(right * M * left')
  DenseMatrix m = unvec_colmajor(v, right.cols(), left.cols());
  DenseMatrix ml = matmul(m, transpose(left));
  DenseMatrix out = matmul(right, ml);
  return vec_colmajor(out);
}

std::vector<double> KroneckerOperator::apply_transpose(std::span<const double> w) const {
  require(w.size() == out_dim(), "kron apply_transpose: vector length != rows(left)*rows(right)");
  // (left' (x) right') w = vec(right' W left) with W of shape rows(right) x rows(left)
  DenseMatrix wm = unvec_colmajor(w, right.rows(), left.rows());
  DenseMatrix out = matmul(transpose(right), matmul(wm, left));
  return vec_colmajor(out);
}

DenseMatrix KroneckerOperator::materialize() const {
  DenseMatrix k(out_dim(), in_dim());
  for (std::size_t il = 0; il < left.rows(); ++il)
    for (std::size_t jl = 0; jl < left.cols(); ++jl) {
      double lij = left(il, jl);
      for (std::size_t ir = 0; ir < right.rows(); ++ir)
        for (std::size_t jr = 0; jr < right.cols(); ++jr)
          k(il * right.rows() + ir, jl * right.cols() + jr) = lij * right(ir, jr);
    }
  return k;
}

DenseMatrix cholesky_lower(const DenseMatrix& s) {
  require(s.rows() == s.cols(), "cholesky: matrix not square");
  std::size_t n = s.rows();
  double tol = 1e-12 * s.trace() / static_cast<double>(n);
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol))
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(d) + " at column " +
                                std::to_string(j) + " below tolerance");
    double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = s(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / ljj;
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const DenseMatrix& l, std::span<const double> b) {
  std::size_t n = l.rows();
  require(b.size() == n, "cholesky_solve: rhs length mismatch");
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= l(k, ii) * y[k];
    y[ii] /= l(ii, ii);
  }
  return y;
}

DenseMatrix cholesky_solve_matrix(const DenseMatrix& l, const DenseMatrix& b) {
  require(b.rows() == l.rows(), "cholesky_solve_matrix: shape mismatch");
  DenseMatrix x(b.rows(), b.cols());
  std::vector<double> col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    std::vector<double> sol = cholesky_solve(l, col);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
  }
  return x;
}

DenseMatrix spd_inverse(const DenseMatrix& s) {
  DenseMatrix l = cholesky_lower(s);
  DenseMatrix inv = cholesky_solve_matrix(l, DenseMatrix::identity(s.rows()));
  // enforce exact symmetry of the result
  for (std::size_t i = 0; i < inv.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

DenseMatrix projection_complement(const DenseMatrix& x) {
  std::size_t n = x.rows(), p = x.cols();
  if (p > n) throw RankDeficient("projection: more columns than rows");
  DenseMatrix g = matmul(transpose(x), x);
  DenseMatrix l;
  try {
    l = cholesky_lower(g);
  } catch (const NotPositiveDefinite&) {
    throw RankDeficient("projection: X'X singular within tolerance");
  }
  DenseMatrix w = cholesky_solve_matrix(l, transpose(x));  // (X'X)^{-1} X'
  DenseMatrix pi = subtract(DenseMatrix::identity(n), matmul(x, w));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      double v = 0.5 * (pi(i, j) + pi(j, i));
      pi(i, j) = v;
      pi(j, i) = v;
    }
  return pi;
}

std::vector<double> solve_linear(DenseMatrix a, std::vector<double> b) {
  require(a.rows() == a.cols() && a.rows() == b.size(), "solve_linear: shape mismatch");
  std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
    if (a(piv, col) == 0.0) throw SingularSystem("solve_linear: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      std::swap(b[col], b[piv]);
    }
    for (std::size_t i = col + 1; i < n; ++i) {
      double f = a(i, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
      b[i] -= f * b[col];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n; ++j) b[ii] -= a(ii, j) * b[j];
    b[ii] /= a(ii, ii);
  }
  return b;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& s) {
  require(s.rows() == s.cols(), "eigenvalues: matrix not square");
  std::size_t n = s.rows();
  DenseMatrix a = s;
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(a(i, j)));
    double scale = std::max(max_abs(a), 1e-300);
    if (off <= 1e-15 * scale) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * scale) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

std::vector<double> vec_colmajor(const DenseMatrix& m) {
  std::vector<double> v(m.rows() * m.cols());
  for (std::size_t k = 0; k < m.cols(); ++k)
    for (std::size_t r = 0; r < m.rows(); ++r) v[k * m.rows() + r] = m(r, k);
  return v;
}

DenseMatrix unvec_colmajor(std::span<const double> v, std::size_t rows, std::size_t cols) {
  require(v.size() == rows * cols, "unvec: length mismatch");
  DenseMatrix m(rows, cols);
  for (std::size_t k = 0; k < cols; ++k)
    for (std::size_t r = 0; r < rows; ++r) m(r, k) = v[k * rows + r];
  return m;
}

}  // namespace wlasso
