#include "qflow/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace qflow::kernels {
namespace {

double s_dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double s_dot3(const double* x, const double* y, const double* z, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i] * z[i];
  return acc;
}

double s_dot4(const double* w, const double* x, const double* y, const double* z,
              std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * y[i] * z[i];
  return acc;
}

double s_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void s_exp_scale(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double t = a * x[i];
    t = std::min(708.0, std::max(-708.0, t));
    y[i] = std::exp(t);
  }
}

void s_lincomb3(double a, const double* x, double b, const double* y, double c,
                const double* z, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * z[i];
}

double s_max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

void s_minmax(const double* x, std::size_t n, double* lo, double* hi) {
  if (n == 0) {
    *lo = 0.0;
    *hi = 0.0;
    return;
  }
  double l = x[0], h = x[0];
  for (std::size_t i = 1; i < n; ++i) {
    l = std::min(l, x[i]);
    h = std::max(h, x[i]);
  }
  *lo = l;
  *hi = h;
}

const Table scalar_table = {
    "scalar", s_dot, s_dot3, s_dot4, s_sum, s_axpy, s_scale, s_exp_scale, s_lincomb3,
    s_max_abs, s_minmax,
};

} // namespace

const Table& scalar() { return scalar_table; }

} // namespace qflow::kernels
