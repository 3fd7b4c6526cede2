#include "mopt/cholesky.hpp"

#include <cmath>
#include <string>

#include "mopt/kernels.hpp"

namespace mopt {

FactorizationError::FactorizationError(std::size_t pivot_index,
                                       double pivot_value)
    : std::runtime_error("cholesky: non-positive pivot " +
                         std::to_string(pivot_value) + " at index " +
                         std::to_string(pivot_index)),
      pivot(pivot_index) {}

Matrix cholesky_spd(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("cholesky: matrix not square");
  const std::size_t n = m.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double* li = l.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const double s = kernels::dot(li, l.row(j), j);
      if (j == i) {
        const double pivot = m(i, i) - s;
        if (!(pivot > 0.0) || !std::isfinite(pivot))
          throw FactorizationError(i, pivot);
        li[i] = std::sqrt(pivot);
      } else {
        li[j] = (m(i, j) - s) / l(j, j);
      }
    }
  }
  return l;
}

namespace {

void check_dims(const Matrix& l, std::size_t rhs_len) {
  if (l.rows() != l.cols() || l.rows() != rhs_len)
    throw std::invalid_argument("triangular solve: dimension mismatch");
}

}  // namespace

Vec solve_triangular(const Matrix& l, const Vec& b, bool transpose) {
  check_dims(l, b.size());
  const std::size_t n = l.rows();
  Vec x = b;
  if (!transpose) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = kernels::dot(l.row(i), x.data(), i);
      x[i] = (x[i] - s) / l(i, i);
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      x[ii] /= l(ii, ii);
      // subtract the solved component from all earlier rows: x_j -= L(ii,j) x_ii
      const double xi = x[ii];
      const double* row = l.row(ii);
      for (std::size_t j = 0; j < ii; ++j) x[j] -= row[j] * xi;
    }
  }
  return x;
}

void solve_triangular_multi(const Matrix& l, Matrix& rhs, bool transpose) {
  check_dims(l, rhs.rows());
  const std::size_t n = l.rows();
  const std::size_t k = rhs.cols();
  // factors of banded matrices (the GP precision is block-tridiagonal) keep
  // exact zeros outside the band; skipping them turns the n^2 solve into a
  // band solve
  if (!transpose) {
    for (std::size_t i = 0; i < n; ++i) {
      double* xi = rhs.row(i);
      const double* li = l.row(i);
      for (std::size_t j = 0; j < i; ++j) {
        const double a = li[j];
        if (a == 0.0) continue;
        const double* xj = rhs.row(j);
        for (std::size_t c = 0; c < k; ++c) xi[c] -= a * xj[c];
      }
      const double inv = 1.0 / li[i];
      for (std::size_t c = 0; c < k; ++c) xi[c] *= inv;
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      double* xi = rhs.row(ii);
      const double inv = 1.0 / l(ii, ii);
      for (std::size_t c = 0; c < k; ++c) xi[c] *= inv;
      const double* row = l.row(ii);
      for (std::size_t j = 0; j < ii; ++j) {
        const double a = row[j];
        if (a == 0.0) continue;
        double* xj = rhs.row(j);
        for (std::size_t c = 0; c < k; ++c) xj[c] -= a * xi[c];
      }
    }
  }
}

Vec solve_cholesky(const Matrix& l, const Vec& b) {
  return solve_triangular(l, solve_triangular(l, b, false), true);
}

Matrix cholesky_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix inv = Matrix::identity(n);
  solve_triangular_multi(l, inv, false);
  solve_triangular_multi(l, inv, true);
  return inv;
}

Vec lower_transpose_matvec(const Matrix& l, const Vec& x) {
  check_dims(l, x.size());
  const std::size_t n = l.rows();
  Vec y(n, 0.0);
  // y = L^T x: row i of L scatters x_i into y_0..y_i
  for (std::size_t i = 0; i < n; ++i)
    kernels::axpy(x[i], l.row(i), y.data(), i + 1);
  return y;
}

}  // namespace mopt
