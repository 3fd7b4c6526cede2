#pragma once

#include <cstddef>
#include <stdexcept>

#include "mopt/matrix.hpp"

namespace mopt {

struct FactorizationError : std::runtime_error {
  FactorizationError(std::size_t pivot_index, double pivot_value);
  std::size_t pivot;
};

// Lower-triangular Cholesky factor of a symmetric positive definite matrix:
// L L^T = M. Throws FactorizationError with the failing pivot otherwise.
Matrix cholesky_spd(const Matrix& m);

// Solve L x = b (or L^T x = b when transpose) for lower-triangular L.
Vec solve_triangular(const Matrix& l, const Vec& b, bool transpose);

// In-place multi-RHS version; rhs is n x k with one RHS per column.
void solve_triangular_multi(const Matrix& l, Matrix& rhs, bool transpose);

// Solve (L L^T) x = b given the factor.
Vec solve_cholesky(const Matrix& l, const Vec& b);

// Inverse of L L^T via n triangular solve pairs.
Matrix cholesky_inverse(const Matrix& l);

// y = L^T x (upper-triangular product with the stored lower factor).
Vec lower_transpose_matvec(const Matrix& l, const Vec& x);

}  // namespace mopt
