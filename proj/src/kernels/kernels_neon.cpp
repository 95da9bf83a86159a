// NEON backend for aarch64. Reductions and element-wise ops use float64x2;
// exp_scale keeps the clamped scalar exp (the transforms, not the
// exponentials, dominate on the hot paths).

#include "qflow/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace qflow::kernels {
namespace {

double n_dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double n_dot3(const double* x, const double* y, const double* z, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t p = vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    acc = vfmaq_f64(acc, p, vld1q_f64(z + i));
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i] * y[i] * z[i];
  return r;
}

double n_dot4(const double* w, const double* x, const double* y, const double* z,
              std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t p = vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i));
    float64x2_t q = vmulq_f64(vld1q_f64(y + i), vld1q_f64(z + i));
    acc = vfmaq_f64(acc, p, q);
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += w[i] * x[i] * y[i] * z[i];
  return r;
}

double n_sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

void n_axpy(double a, const double* x, double* y, std::size_t n) {
  float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void n_scale(double a, const double* x, double* y, std::size_t n) {
  float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void n_exp_scale(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double t = a * x[i];
    t = std::min(708.0, std::max(-708.0, t));
    y[i] = std::exp(t);
  }
}

void n_lincomb3(double a, const double* x, double b, const double* y, double c,
                const double* z, double* out, std::size_t n) {
  float64x2_t va = vdupq_n_f64(a), vb = vdupq_n_f64(b), vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t r = vmulq_f64(va, vld1q_f64(x + i));
    r = vfmaq_f64(r, vb, vld1q_f64(y + i));
    r = vfmaq_f64(r, vc, vld1q_f64(z + i));
    vst1q_f64(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * z[i];
}

double n_max_abs(const double* x, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(x + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::abs(x[i]));
  return r;
}

void n_minmax(const double* x, std::size_t n, double* lo, double* hi) {
  if (n == 0) {
    *lo = 0.0;
    *hi = 0.0;
    return;
  }
  double l = x[0], h = x[0];
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t vl = vld1q_f64(x);
    float64x2_t vh = vl;
    for (i = 2; i + 2 <= n; i += 2) {
      float64x2_t v = vld1q_f64(x + i);
      vl = vminq_f64(vl, v);
      vh = vmaxq_f64(vh, v);
    }
    l = vminvq_f64(vl);
    h = vmaxvq_f64(vh);
  }
  for (; i < n; ++i) {
    l = std::min(l, x[i]);
    h = std::max(h, x[i]);
  }
  *lo = l;
  *hi = h;
}

} // namespace

const Table* neon_table_impl() {
  static const Table t = {
      "neon", n_dot, n_dot3, n_dot4, n_sum, n_axpy, n_scale, n_exp_scale, n_lincomb3,
      n_max_abs, n_minmax,
  };
  return &t;
}

} // namespace qflow::kernels

#endif // aarch64 NEON
