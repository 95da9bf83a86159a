// AVX2+FMA backend. Compiled with -mavx2 -mfma; selected at runtime only when
// the CPU reports both features (see kernels_dispatch.cpp).

#include "qflow/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace qflow::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double a_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double a_dot3(const double* x, const double* y, const double* z, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d p = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc0 = _mm256_fmadd_pd(p, _mm256_loadu_pd(z + i), acc0);
  }
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += x[i] * y[i] * z[i];
  return acc;
}

double a_dot4(const double* w, const double* x, const double* y, const double* z,
              std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d p = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
    __m256d q = _mm256_mul_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(z + i));
    acc0 = _mm256_fmadd_pd(p, q, acc0);
  }
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += w[i] * x[i] * y[i] * z[i];
  return acc;
}

double a_sum(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void a_axpy(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void a_scale(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

// exp() on 4 lanes, Cephes-style: reduce x = k*ln2 + r with a split ln2,
// evaluate the rational approximation of exp(r) on r in [-ln2/2, ln2/2], and
// rebuild 2^k through the exponent bits. Inputs are pre-clamped to +-708 so
// k stays inside the normal exponent range. Accuracy ~1 ulp.
inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);

  x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.0)), _mm256_set1_pd(708.0));
  __m256d k = _mm256_floor_pd(_mm256_fmadd_pd(log2e, x, _mm256_set1_pd(0.5)));
  __m128i k32 = _mm256_cvttpd_epi32(k);
  x = _mm256_fnmadd_pd(k, c1, x);
  x = _mm256_fnmadd_pd(k, c2, x);

  __m256d xx = _mm256_mul_pd(x, x);
  __m256d pe = _mm256_mul_pd(x, _mm256_fmadd_pd(_mm256_fmadd_pd(p0, xx, p1), xx, p2));
  __m256d qe =
      _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_fmadd_pd(q0, xx, q1), xx, q2), xx, q3);
  __m256d e = _mm256_div_pd(pe, _mm256_sub_pd(qe, pe));
  __m256d r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  __m256i k64 = _mm256_cvtepi32_epi64(k32);
  __m256i pw = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(r, _mm256_castsi256_pd(pw));
}

void a_exp_scale(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, exp4(_mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) {
    double t = a * x[i];
    t = std::min(708.0, std::max(-708.0, t));
    double buf[4] = {t, t, t, t};
    _mm256_storeu_pd(buf, exp4(_mm256_loadu_pd(buf)));
    y[i] = buf[0];
  }
}

void a_lincomb3(double a, const double* x, double b, const double* y, double c,
                const double* z, double* out, std::size_t n) {
  __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b), vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    r = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), r);
    r = _mm256_fmadd_pd(vc, _mm256_loadu_pd(z + i), r);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * z[i];
}

double a_max_abs(const double* x, std::size_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    m = _mm256_max_pd(m, _mm256_and_pd(mask, _mm256_loadu_pd(x + i)));
  double buf[4];
  _mm256_storeu_pd(buf, m);
  double acc = std::max(std::max(buf[0], buf[1]), std::max(buf[2], buf[3]));
  for (; i < n; ++i) acc = std::max(acc, std::abs(x[i]));
  return acc;
}

void a_minmax(const double* x, std::size_t n, double* lo, double* hi) {
  if (n == 0) {
    *lo = 0.0;
    *hi = 0.0;
    return;
  }
  double l = x[0], h = x[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vl = _mm256_loadu_pd(x);
    __m256d vh = vl;
    for (i = 4; i + 4 <= n; i += 4) {
      __m256d v = _mm256_loadu_pd(x + i);
      vl = _mm256_min_pd(vl, v);
      vh = _mm256_max_pd(vh, v);
    }
    double bl[4], bh[4];
    _mm256_storeu_pd(bl, vl);
    _mm256_storeu_pd(bh, vh);
    l = std::min(std::min(bl[0], bl[1]), std::min(bl[2], bl[3]));
    h = std::max(std::max(bh[0], bh[1]), std::max(bh[2], bh[3]));
  }
  for (; i < n; ++i) {
    l = std::min(l, x[i]);
    h = std::max(h, x[i]);
  }
  *lo = l;
  *hi = h;
}

} // namespace

const Table* avx2_table_impl() {
  static const Table t = {
      "avx2", a_dot, a_dot3, a_dot4, a_sum, a_axpy, a_scale, a_exp_scale, a_lincomb3,
      a_max_abs, a_minmax,
  };
  return &t;
}

} // namespace qflow::kernels

#endif // __AVX2__ && __FMA__
