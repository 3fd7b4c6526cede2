#include <cmath>
#include <cstddef>

#include "mopt/kernels.hpp"

// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against; keep them simple and obviously correct.
namespace mopt::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      axpy(ai[l], b + l * n, ci, n);
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  // a is k x m; c(i,j) = sum_l a(l,i) b(l,j)
  for (std::size_t l = 0; l < k; ++l) {
    const double* al = a + l * m;
    const double* bl = b + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      axpy(al[i], bl, c + i * n, n);
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  // b is n x k; c(i,j) = dot(a row i, b row j)
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      ci[j] += dot(ai, b + j * k, k);
    }
  }
}

void vec_exp(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void vec_softplus_sigmoid(const double* a, double* sp, double* sg,
                          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i];
    const double e = std::exp(-std::fabs(x));
    const double inv = 1.0 / (1.0 + e);
    sg[i] = x >= 0.0 ? inv : e * inv;
    sp[i] = (x > 0.0 ? x : 0.0) + std::log(1.0 + e);
  }
}

void box_muller(const double* u1, const double* u2, double* out,
                std::size_t pairs) {
  for (std::size_t i = 0; i < pairs; ++i) {
    const double r = std::sqrt(-2.0 * std::log(u1[i]));
    const double theta = 6.28318530717958647692 * u2[i];
    out[2 * i] = r * std::cos(theta);
    out[2 * i + 1] = r * std::sin(theta);
  }
}

namespace {
const detail::Ops kOps = {dot,     axpy,    scal,    sum,
                          gemm_nn, gemm_tn, gemm_nt, vec_exp,
                          vec_softplus_sigmoid, box_muller};
}  // namespace

const detail::Ops& ops() { return kOps; }

}  // namespace mopt::kernels::scalar
