#pragma once

#include <cstddef>
#include <string>

// Dense arithmetic kernels used by the linear algebra, MLP and sampling code.
// Every kernel has a portable scalar reference implementation and may have a
// SIMD variant (AVX2/FMA on x86-64). The backend is selected once at runtime;
// variants of one kernel agree to floating-point reordering tolerance and are
// equivalence-tested against each other.
namespace mopt::kernels {

enum class Backend { scalar, avx2 };

// Active backend: best supported by the CPU, overridable with the
// environment variable MOPT_KERNELS=scalar|avx2 (resolved on first call).
Backend active_backend();
std::string backend_name(Backend b);
bool backend_available(Backend b);

// dot(a, b) = sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// x[i] *= alpha
void scal(double alpha, double* x, std::size_t n);

double sum(const double* x, std::size_t n);

// C (m x n) += A (m x k) * B (k x n), all row-major, tightly packed.
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

// C (m x n) += A^T * B with A stored k x m row-major.
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

// C (m x n) += A * B^T with B stored n x k row-major.
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

// out[i] = exp(x[i]); may alias.
void vec_exp(const double* x, double* out, std::size_t n);

// Fused softplus/sigmoid: sp[i] = log(1+exp(a[i])), sg[i] = 1/(1+exp(-a[i])),
// computed through exp(-|a|) so large magnitudes stay finite.
void vec_softplus_sigmoid(const double* a, double* sp, double* sg,
                          std::size_t n);

// Box-Muller pairs: out[2i] = r cos(theta), out[2i+1] = r sin(theta) with
// r = sqrt(-2 ln u1[i]) and theta = 2 pi u2[i]; u1 entries must be in (0, 1].
void box_muller(const double* u1, const double* u2, double* out,
                std::size_t pairs);

namespace detail {

// Per-backend entry points, exposed so the test suite can compare variants.
struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*gemm_nn)(const double*, const double*, double*, std::size_t,
                  std::size_t, std::size_t);
  void (*gemm_tn)(const double*, const double*, double*, std::size_t,
                  std::size_t, std::size_t);
  void (*gemm_nt)(const double*, const double*, double*, std::size_t,
                  std::size_t, std::size_t);
  void (*vec_exp)(const double*, double*, std::size_t);
  void (*vec_softplus_sigmoid)(const double*, double*, double*, std::size_t);
  void (*box_muller)(const double*, const double*, double*, std::size_t);
};

const Ops& ops(Backend b);

}  // namespace detail

}  // namespace mopt::kernels
