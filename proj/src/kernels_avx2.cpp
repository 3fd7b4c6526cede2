#include <cstddef>

#include "mopt/kernels.hpp"

// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 and must only be entered after the runtime
// dispatch has confirmed CPU support.

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <vector>

namespace mopt::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double r = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

namespace {

double* scratch(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

// Core 4x8 kernel over a packed k x 8 B panel. Packing keeps the panel on a
// handful of pages; unpacked panels stride one page per row and thrash the
// TLB (measured ~2x slower on 512-wide layers).
inline void gemm_nn_packed(const double* a, const double* b, double* c,
                           std::size_t m, std::size_t k, std::size_t n) {
  double* pack = scratch(k * 8);
  std::size_t j0 = 0;
  for (; j0 + 8 <= n; j0 += 8) {
    for (std::size_t l = 0; l < k; ++l) {
      _mm256_storeu_pd(pack + 8 * l, _mm256_loadu_pd(b + l * n + j0));
      _mm256_storeu_pd(pack + 8 * l + 4, _mm256_loadu_pd(b + l * n + j0 + 4));
    }
    std::size_t i0 = 0;
    for (; i0 + 4 <= m; i0 += 4) {
      __m256d c00 = _mm256_loadu_pd(c + (i0 + 0) * n + j0);
      __m256d c01 = _mm256_loadu_pd(c + (i0 + 0) * n + j0 + 4);
      __m256d c10 = _mm256_loadu_pd(c + (i0 + 1) * n + j0);
      __m256d c11 = _mm256_loadu_pd(c + (i0 + 1) * n + j0 + 4);
      __m256d c20 = _mm256_loadu_pd(c + (i0 + 2) * n + j0);
      __m256d c21 = _mm256_loadu_pd(c + (i0 + 2) * n + j0 + 4);
      __m256d c30 = _mm256_loadu_pd(c + (i0 + 3) * n + j0);
      __m256d c31 = _mm256_loadu_pd(c + (i0 + 3) * n + j0 + 4);
      const double* a0 = a + (i0 + 0) * k;
      const double* a1 = a + (i0 + 1) * k;
      const double* a2 = a + (i0 + 2) * k;
      const double* a3 = a + (i0 + 3) * k;
      const double* bp = pack;
      for (std::size_t l = 0; l < k; ++l, bp += 8) {
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d av;
        av = _mm256_set1_pd(a0[l]);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_set1_pd(a1[l]);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_set1_pd(a2[l]);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_set1_pd(a3[l]);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      _mm256_storeu_pd(c + (i0 + 0) * n + j0, c00);
      _mm256_storeu_pd(c + (i0 + 0) * n + j0 + 4, c01);
      _mm256_storeu_pd(c + (i0 + 1) * n + j0, c10);
      _mm256_storeu_pd(c + (i0 + 1) * n + j0 + 4, c11);
      _mm256_storeu_pd(c + (i0 + 2) * n + j0, c20);
      _mm256_storeu_pd(c + (i0 + 2) * n + j0 + 4, c21);
      _mm256_storeu_pd(c + (i0 + 3) * n + j0, c30);
      _mm256_storeu_pd(c + (i0 + 3) * n + j0 + 4, c31);
    }
    for (; i0 < m; ++i0) {
      __m256d acc0 = _mm256_loadu_pd(c + i0 * n + j0);
      __m256d acc1 = _mm256_loadu_pd(c + i0 * n + j0 + 4);
      const double* ai = a + i0 * k;
      const double* bp = pack;
      for (std::size_t l = 0; l < k; ++l, bp += 8) {
        const __m256d av = _mm256_set1_pd(ai[l]);
        acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), acc0);
        acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), acc1);
      }
      _mm256_storeu_pd(c + i0 * n + j0, acc0);
      _mm256_storeu_pd(c + i0 * n + j0 + 4, acc1);
    }
  }
  if (j0 < n) {
    const std::size_t rem = n - j0;
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * n + j0;
      const double* ai = a + i * k;
      for (std::size_t l = 0; l < k; ++l) {
        const double av = ai[l];
        const double* bl = b + l * n + j0;
        for (std::size_t j = 0; j < rem; ++j) ci[j] += av * bl[j];
      }
    }
  }
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  gemm_nn_packed(a, b, c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  // transpose A (k x m) into row-major m x k scratch, then run the NN path;
  // the O(mk) copy is noise next to the O(mkn) product
  thread_local std::vector<double> at_buf;
  if (at_buf.size() < m * k) at_buf.resize(m * k);
  double* at = at_buf.data();
  for (std::size_t l = 0; l < k; ++l) {
    const double* al = a + l * m;
    for (std::size_t i = 0; i < m; ++i) at[i * k + l] = al[i];
  }
  gemm_nn_packed(at, b, c, m, k, n);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  std::size_t i0 = 0;
  for (; i0 + 2 <= m; i0 += 2) {
    const double* a0 = a + i0 * k;
    const double* a1 = a0 + k;
    double* c0 = c + i0 * n;
    double* c1 = c0 + n;
    std::size_t j0 = 0;
    for (; j0 + 4 <= n; j0 += 4) {
      __m256d acc00 = _mm256_setzero_pd(), acc01 = _mm256_setzero_pd();
      __m256d acc02 = _mm256_setzero_pd(), acc03 = _mm256_setzero_pd();
      __m256d acc10 = _mm256_setzero_pd(), acc11 = _mm256_setzero_pd();
      __m256d acc12 = _mm256_setzero_pd(), acc13 = _mm256_setzero_pd();
      const double* b0 = b + (j0 + 0) * k;
      const double* b1 = b + (j0 + 1) * k;
      const double* b2 = b + (j0 + 2) * k;
      const double* b3 = b + (j0 + 3) * k;
      std::size_t l = 0;
      for (; l + 4 <= k; l += 4) {
        const __m256d va0 = _mm256_loadu_pd(a0 + l);
        const __m256d va1 = _mm256_loadu_pd(a1 + l);
        const __m256d vb0 = _mm256_loadu_pd(b0 + l);
        const __m256d vb1 = _mm256_loadu_pd(b1 + l);
        const __m256d vb2 = _mm256_loadu_pd(b2 + l);
        const __m256d vb3 = _mm256_loadu_pd(b3 + l);
        acc00 = _mm256_fmadd_pd(va0, vb0, acc00);
        acc01 = _mm256_fmadd_pd(va0, vb1, acc01);
        acc02 = _mm256_fmadd_pd(va0, vb2, acc02);
        acc03 = _mm256_fmadd_pd(va0, vb3, acc03);
        acc10 = _mm256_fmadd_pd(va1, vb0, acc10);
        acc11 = _mm256_fmadd_pd(va1, vb1, acc11);
        acc12 = _mm256_fmadd_pd(va1, vb2, acc12);
        acc13 = _mm256_fmadd_pd(va1, vb3, acc13);
      }
      double t[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      for (; l < k; ++l) {
        t[0] += a0[l] * b0[l];
        t[1] += a0[l] * b1[l];
        t[2] += a0[l] * b2[l];
        t[3] += a0[l] * b3[l];
        t[4] += a1[l] * b0[l];
        t[5] += a1[l] * b1[l];
        t[6] += a1[l] * b2[l];
        t[7] += a1[l] * b3[l];
      }
      c0[j0 + 0] += hsum(acc00) + t[0];
      c0[j0 + 1] += hsum(acc01) + t[1];
      c0[j0 + 2] += hsum(acc02) + t[2];
      c0[j0 + 3] += hsum(acc03) + t[3];
      c1[j0 + 0] += hsum(acc10) + t[4];
      c1[j0 + 1] += hsum(acc11) + t[5];
      c1[j0 + 2] += hsum(acc12) + t[6];
      c1[j0 + 3] += hsum(acc13) + t[7];
    }
    for (; j0 < n; ++j0) {
      c0[j0] += dot(a0, b + j0 * k, k);
      c1[j0] += dot(a1, b + j0 * k, k);
    }
  }
  for (; i0 < m; ++i0) {
    const double* ai = a + i0 * k;
    double* ci = c + i0 * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += dot(ai, b + j * k, k);
  }
}

namespace {

// Cephes-style expansions (as used by the usual SIMD math layers).
const __m256d kExpHi = _mm256_set1_pd(708.0);
const __m256d kExpLo = _mm256_set1_pd(-708.0);
const __m256d kLog2E = _mm256_set1_pd(1.4426950408889634073599);
const __m256d kExpC1 = _mm256_set1_pd(0.693145751953125);
const __m256d kExpC2 = _mm256_set1_pd(1.42860682030941723212e-6);
const __m256d kExpP0 = _mm256_set1_pd(1.26177193074810590878e-4);
const __m256d kExpP1 = _mm256_set1_pd(3.02994407707441961300e-2);
const __m256d kExpP2 = _mm256_set1_pd(9.99999999999999999910e-1);
const __m256d kExpQ0 = _mm256_set1_pd(3.00198505138664455042e-6);
const __m256d kExpQ1 = _mm256_set1_pd(2.52448340349684104192e-3);
const __m256d kExpQ2 = _mm256_set1_pd(2.27265548208155028766e-1);
const __m256d kExpQ3 = _mm256_set1_pd(2.00000000000000000005e0);
const __m256d kHalf = _mm256_set1_pd(0.5);
const __m256d kOne = _mm256_set1_pd(1.0);
const __m256d kTwo = _mm256_set1_pd(2.0);

inline __m256d exp_pd(__m256d x) {
  x = _mm256_min_pd(_mm256_max_pd(x, kExpLo), kExpHi);
  const __m256d m = _mm256_floor_pd(_mm256_fmadd_pd(x, kLog2E, kHalf));
  x = _mm256_fnmadd_pd(m, kExpC1, x);
  x = _mm256_fnmadd_pd(m, kExpC2, x);
  const __m256d x2 = _mm256_mul_pd(x, x);
  __m256d px = _mm256_fmadd_pd(kExpP0, x2, kExpP1);
  px = _mm256_fmadd_pd(px, x2, kExpP2);
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_fmadd_pd(kExpQ0, x2, kExpQ1);
  qx = _mm256_fmadd_pd(qx, x2, kExpQ2);
  qx = _mm256_fmadd_pd(qx, x2, kExpQ3);
  const __m256d r =
      _mm256_fmadd_pd(kTwo, _mm256_div_pd(px, _mm256_sub_pd(qx, px)), kOne);
  // scale by 2^m via exponent bits; |m| <= 1022 after clamping
  const __m128i mi = _mm256_cvtpd_epi32(m);
  const __m256i ml = _mm256_cvtepi32_epi64(mi);
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(ml, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(r, _mm256_castsi256_pd(bits));
}

const __m256d kSqrtHalf = _mm256_set1_pd(0.70710678118654752440);
const __m256d kLogP0 = _mm256_set1_pd(1.01875663804580931796e-4);
const __m256d kLogP1 = _mm256_set1_pd(4.97494994976747001425e-1);
const __m256d kLogP2 = _mm256_set1_pd(4.70579119878881725854e0);
const __m256d kLogP3 = _mm256_set1_pd(1.44989225341610930846e1);
const __m256d kLogP4 = _mm256_set1_pd(1.79368678507819816313e1);
const __m256d kLogP5 = _mm256_set1_pd(7.70838733755885391666e0);
const __m256d kLogQ0 = _mm256_set1_pd(1.12873587189167450590e1);
const __m256d kLogQ1 = _mm256_set1_pd(4.52279145837532221105e1);
const __m256d kLogQ2 = _mm256_set1_pd(8.29875266912776603211e1);
const __m256d kLogQ3 = _mm256_set1_pd(7.11544750618563894466e1);
const __m256d kLogQ4 = _mm256_set1_pd(2.31251620126765340583e1);
const __m256d kLn2Hi = _mm256_set1_pd(0.693359375);
const __m256d kLn2Lo = _mm256_set1_pd(-2.121944400546905827679e-4);

// log(y) for y in (0.5, 2.5]; enough for the softplus path where y = 1 + e.
inline __m256d log_near_one_pd(__m256d y) {
  const __m256d half_y = _mm256_mul_pd(y, kHalf);
  const __m256d use_half = _mm256_cmp_pd(y, _mm256_add_pd(kSqrtHalf, kSqrtHalf), _CMP_GT_OQ);
  const __m256d e = _mm256_and_pd(use_half, kOne);
  const __m256d x = _mm256_sub_pd(_mm256_blendv_pd(y, half_y, use_half), kOne);
  const __m256d z = _mm256_mul_pd(x, x);
  __m256d p = _mm256_fmadd_pd(kLogP0, x, kLogP1);
  p = _mm256_fmadd_pd(p, x, kLogP2);
  p = _mm256_fmadd_pd(p, x, kLogP3);
  p = _mm256_fmadd_pd(p, x, kLogP4);
  p = _mm256_fmadd_pd(p, x, kLogP5);
  __m256d q = _mm256_add_pd(x, kLogQ0);
  q = _mm256_fmadd_pd(q, x, kLogQ1);
  q = _mm256_fmadd_pd(q, x, kLogQ2);
  q = _mm256_fmadd_pd(q, x, kLogQ3);
  q = _mm256_fmadd_pd(q, x, kLogQ4);
  __m256d r = _mm256_mul_pd(_mm256_mul_pd(x, z), _mm256_div_pd(p, q));
  r = _mm256_fmadd_pd(e, kLn2Lo, r);
  r = _mm256_fnmadd_pd(kHalf, z, r);
  r = _mm256_add_pd(x, r);
  return _mm256_fmadd_pd(e, kLn2Hi, r);
}

}  // namespace

void vec_exp(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) {
    double tmp[4] = {x[i], 0.0, 0.0, 0.0};
    double res[4];
    _mm256_storeu_pd(res, exp_pd(_mm256_loadu_pd(tmp)));
    out[i] = res[0];
  }
}

void vec_softplus_sigmoid(const double* a, double* sp, double* sg,
                          std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(a + i);
    const __m256d e = exp_pd(_mm256_or_pd(_mm256_andnot_pd(sign_mask, x), sign_mask));
    const __m256d inv = _mm256_div_pd(kOne, _mm256_add_pd(kOne, e));
    const __m256d pos = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GE_OQ);
    _mm256_storeu_pd(sg + i, _mm256_blendv_pd(_mm256_mul_pd(e, inv), inv, pos));
    const __m256d relu = _mm256_max_pd(x, _mm256_setzero_pd());
    _mm256_storeu_pd(
        sp + i, _mm256_add_pd(relu, log_near_one_pd(_mm256_add_pd(kOne, e))));
  }
  for (; i < n; ++i) {
    const double x = a[i];
    const double e = std::exp(-std::fabs(x));
    const double inv = 1.0 / (1.0 + e);
    sg[i] = x >= 0.0 ? inv : e * inv;
    sp[i] = (x > 0.0 ? x : 0.0) + std::log(1.0 + e);
  }
}

namespace {

// full-range log via exponent extraction, same Cephes expansion as above
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i exp_raw =
      _mm256_srli_epi64(_mm256_and_si256(bits, _mm256_set1_epi64x(0x7ff0000000000000LL)), 52);
  __m256d e = _mm256_cvtepi32_pd(_mm256_castsi256_si128(
      _mm256_permutevar8x32_epi32(exp_raw, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0))));
  e = _mm256_sub_pd(e, _mm256_set1_pd(1022.0));
  // mantissa in [0.5, 1)
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL)),
      _mm256_set1_epi64x(0x3fe0000000000000LL)));
  const __m256d below = _mm256_cmp_pd(m, kSqrtHalf, _CMP_LT_OQ);
  m = _mm256_add_pd(m, _mm256_and_pd(below, m));  // m *= 2 where below
  e = _mm256_sub_pd(e, _mm256_and_pd(below, kOne));
  const __m256d xr = _mm256_sub_pd(m, kOne);
  const __m256d z = _mm256_mul_pd(xr, xr);
  __m256d p = _mm256_fmadd_pd(kLogP0, xr, kLogP1);
  p = _mm256_fmadd_pd(p, xr, kLogP2);
  p = _mm256_fmadd_pd(p, xr, kLogP3);
  p = _mm256_fmadd_pd(p, xr, kLogP4);
  p = _mm256_fmadd_pd(p, xr, kLogP5);
  __m256d q = _mm256_add_pd(xr, kLogQ0);
  q = _mm256_fmadd_pd(q, xr, kLogQ1);
  q = _mm256_fmadd_pd(q, xr, kLogQ2);
  q = _mm256_fmadd_pd(q, xr, kLogQ3);
  q = _mm256_fmadd_pd(q, xr, kLogQ4);
  __m256d r = _mm256_mul_pd(_mm256_mul_pd(xr, z), _mm256_div_pd(p, q));
  r = _mm256_fmadd_pd(e, kLn2Lo, r);
  r = _mm256_fnmadd_pd(kHalf, z, r);
  r = _mm256_add_pd(xr, r);
  return _mm256_fmadd_pd(e, kLn2Hi, r);
}

const __m256d kSinP0 = _mm256_set1_pd(1.58962301576546568060e-10);
const __m256d kSinP1 = _mm256_set1_pd(-2.50507477628578072866e-8);
const __m256d kSinP2 = _mm256_set1_pd(2.75573136213857245213e-6);
const __m256d kSinP3 = _mm256_set1_pd(-1.98412698295895385996e-4);
const __m256d kSinP4 = _mm256_set1_pd(8.33333333332211858878e-3);
const __m256d kSinP5 = _mm256_set1_pd(-1.66666666666666307295e-1);
const __m256d kCosP0 = _mm256_set1_pd(-1.13585365213876817300e-11);
const __m256d kCosP1 = _mm256_set1_pd(2.08757008419747316778e-9);
const __m256d kCosP2 = _mm256_set1_pd(-2.75573141792967388112e-7);
const __m256d kCosP3 = _mm256_set1_pd(2.48015872888517179954e-5);
const __m256d kCosP4 = _mm256_set1_pd(-1.38888888888730564116e-3);
const __m256d kCosP5 = _mm256_set1_pd(4.16666666666665929218e-2);
const __m256d kTwoOverPi = _mm256_set1_pd(0.63661977236758134308);
const __m256d kPiHalf1 = _mm256_set1_pd(1.57079632673412561417);
const __m256d kPiHalf2 = _mm256_set1_pd(6.07710050650619224932e-11);
const __m256d kPiHalf3 = _mm256_set1_pd(2.02226624879595063154e-21);

// sin and cos for |theta| < ~16 (enough for angles in [0, 2 pi))
inline void sincos_pd(__m256d theta, __m256d& s, __m256d& c) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(theta, kTwoOverPi),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, kPiHalf1, theta);
  r = _mm256_fnmadd_pd(n, kPiHalf2, r);
  r = _mm256_fnmadd_pd(n, kPiHalf3, r);
  const __m128i ni = _mm256_cvtpd_epi32(n);
  const __m256i q = _mm256_and_si256(_mm256_cvtepi32_epi64(ni), _mm256_set1_epi64x(3));

  const __m256d z = _mm256_mul_pd(r, r);
  __m256d sp = _mm256_fmadd_pd(kSinP0, z, kSinP1);
  sp = _mm256_fmadd_pd(sp, z, kSinP2);
  sp = _mm256_fmadd_pd(sp, z, kSinP3);
  sp = _mm256_fmadd_pd(sp, z, kSinP4);
  sp = _mm256_fmadd_pd(sp, z, kSinP5);
  const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(sp, z), r, r);
  __m256d cp = _mm256_fmadd_pd(kCosP0, z, kCosP1);
  cp = _mm256_fmadd_pd(cp, z, kCosP2);
  cp = _mm256_fmadd_pd(cp, z, kCosP3);
  cp = _mm256_fmadd_pd(cp, z, kCosP4);
  cp = _mm256_fmadd_pd(cp, z, kCosP5);
  const __m256d cos_r =
      _mm256_fmadd_pd(_mm256_mul_pd(cp, z), z,
                      _mm256_fnmadd_pd(kHalf, z, kOne));

  // quadrant fixup: q=0 -> (sin, cos); 1 -> (cos, -sin); 2 -> (-sin, -cos);
  // 3 -> (-cos, sin)
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(
      _mm256_and_si256(q, _mm256_set1_epi64x(1)), _mm256_set1_epi64x(1)));
  const __m256d base_s = _mm256_blendv_pd(sin_r, cos_r, swap);
  const __m256d base_c = _mm256_blendv_pd(cos_r, sin_r, swap);
  const __m256d q1or2 = _mm256_castsi256_pd(_mm256_or_si256(
      _mm256_cmpeq_epi64(q, _mm256_set1_epi64x(1)),
      _mm256_cmpeq_epi64(q, _mm256_set1_epi64x(2))));
  const __m256d q2or3 = _mm256_castsi256_pd(_mm256_or_si256(
      _mm256_cmpeq_epi64(q, _mm256_set1_epi64x(2)),
      _mm256_cmpeq_epi64(q, _mm256_set1_epi64x(3))));
  const __m256d sign = _mm256_set1_pd(-0.0);
  s = _mm256_xor_pd(base_s, _mm256_and_pd(q2or3, sign));
  c = _mm256_xor_pd(base_c, _mm256_and_pd(q1or2, sign));
}

}  // namespace

void box_muller(const double* u1, const double* u2, double* out,
                std::size_t pairs) {
  const __m256d two_pi = _mm256_set1_pd(6.28318530717958647692);
  const __m256d neg_two = _mm256_set1_pd(-2.0);
  std::size_t i = 0;
  for (; i + 4 <= pairs; i += 4) {
    const __m256d r = _mm256_sqrt_pd(
        _mm256_mul_pd(neg_two, log_pd(_mm256_loadu_pd(u1 + i))));
    __m256d s, c;
    sincos_pd(_mm256_mul_pd(two_pi, _mm256_loadu_pd(u2 + i)), s, c);
    const __m256d x = _mm256_mul_pd(r, c);
    const __m256d y = _mm256_mul_pd(r, s);
    // interleave (x0,y0,x1,y1, x2,y2,x3,y3)
    const __m256d lo = _mm256_unpacklo_pd(x, y);
    const __m256d hi = _mm256_unpackhi_pd(x, y);
    _mm256_storeu_pd(out + 2 * i, _mm256_permute2f128_pd(lo, hi, 0x20));
    _mm256_storeu_pd(out + 2 * i + 4, _mm256_permute2f128_pd(lo, hi, 0x31));
  }
  for (; i < pairs; ++i) {
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

const detail::Ops* ops_or_null() { return &kOps; }

}  // namespace mopt::kernels::avx2

#else

namespace mopt::kernels::avx2 {
const detail::Ops* ops_or_null() { return nullptr; }
}  // namespace mopt::kernels::avx2

#endif
