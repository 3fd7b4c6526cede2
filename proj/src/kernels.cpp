#include "mopt/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace mopt::kernels {

namespace scalar {
const detail::Ops& ops();
}
namespace avx2 {
const detail::Ops* ops_or_null();
}

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend resolve_backend() {
  if (const char* env = std::getenv("MOPT_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Backend::scalar;
    if (want == "avx2") {
      if (backend_available(Backend::avx2)) return Backend::avx2;
      throw std::runtime_error("MOPT_KERNELS=avx2 but AVX2 is unavailable");
    }
  }
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return avx2::ops_or_null() != nullptr && cpu_has_avx2();
  }
  return false;
}

Backend active_backend() {
  static const Backend backend = resolve_backend();
  return backend;
}

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

namespace detail {
const Ops& ops(Backend b) {
  if (b == Backend::avx2) {
    const Ops* o = avx2::ops_or_null();
    if (o != nullptr && cpu_has_avx2()) return *o;
    throw std::runtime_error("AVX2 kernels unavailable on this CPU/build");
  }
  return scalar::ops();
}
}  // namespace detail

namespace {
inline const detail::Ops& active() { return detail::ops(active_backend()); }
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
void scal(double alpha, double* x, std::size_t n) { active().scal(alpha, x, n); }
double sum(const double* x, std::size_t n) { return active().sum(x, n); }
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  active().gemm_nn(a, b, c, m, k, n);
}
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  active().gemm_tn(a, b, c, m, k, n);
}
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  active().gemm_nt(a, b, c, m, k, n);
}
void vec_exp(const double* x, double* out, std::size_t n) {
  active().vec_exp(x, out, n);
}
void vec_softplus_sigmoid(const double* a, double* sp, double* sg,
                          std::size_t n) {
  active().vec_softplus_sigmoid(a, sp, sg, n);
}
void box_muller(const double* u1, const double* u2, double* out,
                std::size_t pairs) {
  active().box_muller(u1, u2, out, pairs);
}

}  // namespace mopt::kernels
