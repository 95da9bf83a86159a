#pragma once

#include <cstddef>
#include <vector>

namespace qflow::kernels {

// Double-precision batch primitives used by the spectral transforms,
// quadrature reductions and pointwise exponentials. A backend is a table of
// function pointers; the scalar table is the reference implementation and
// accelerated tables (AVX2+FMA on x86-64, NEON on aarch64) must agree with it
// to rounding. SIMD reductions reassociate sums, so cross-backend agreement
// is to ~1e-13 relative on well-scaled data, not bit-exact.
//
// exp_scale(a, x, y): y[i] = exp(a*x[i]) with the argument clamped to
// [-708, 708] on every backend. Callers keep arguments inside that range
// (the conformal-factor overflow guards trip long before it).
struct Table {
  const char* name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*dot3)(const double* x, const double* y, const double* z, std::size_t n);
  double (*dot4)(const double* w, const double* x, const double* y, const double* z,
                 std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*scale)(double a, const double* x, double* y, std::size_t n);
  void (*exp_scale)(double a, const double* x, double* y, std::size_t n);
  void (*lincomb3)(double a, const double* x, double b, const double* y, double c,
                   const double* z, double* out, std::size_t n);
  double (*max_abs)(const double* x, std::size_t n);
  void (*minmax)(const double* x, std::size_t n, double* lo, double* hi);
};

const Table& scalar();

// All backends usable on this machine, scalar first.
const std::vector<const Table*>& available();

// Highest-priority available backend. The QFLOW_KERNELS environment variable
// ("scalar", "avx2", "neon") pins the choice; an unknown name falls back to
// the default. Resolved once per process.
const Table& active();

} // namespace qflow::kernels
