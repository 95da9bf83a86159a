#include <cassert>
#include <cmath>
#include <vector>

#include "qflow/errors.hpp"
#include "qflow/sphere.hpp"

namespace qflow {

double sphere_volume(int n) {
  return 2.0 * std::pow(M_PI, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

namespace {

// Orthonormal-polynomial recurrence for the Gegenbauer weight
// (1-x^2)^{lambda-1/2}, lambda = (n-1)/2:
//   q_{k+1} = (x q_k - sb_k q_{k-1}) / sb_{k+1},  sb_k = sqrt(beta_k),
//   beta_k  = k (k + 2 lambda - 1) / (4 (k + lambda)(k + lambda - 1)).
struct GegenbauerRec {
  double mu0;
  std::vector<double> sb; // sb[0] = 0, sb[k] for k >= 1

  GegenbauerRec(int n_dim, int kmax) {
    const double lam = 0.5 * (n_dim - 1);
    mu0 = std::sqrt(M_PI) * std::tgamma(lam + 0.5) / std::tgamma(lam + 1.0);
    sb.resize(kmax + 1, 0.0);
    for (int k = 1; k <= kmax; ++k) {
      double beta =
          k * (k + 2.0 * lam - 1.0) / (4.0 * (k + lam) * (k + lam - 1.0));
      sb[k] = std::sqrt(beta);
    }
  }

  // q_N(x) and optionally q_N'(x) and sum_{k<N} q_k(x)^2.
  double eval(int N, double x, double* deriv = nullptr, double* sumsq = nullptr) const {
    double qm = 0.0, q = 1.0 / std::sqrt(mu0);
    double dm = 0.0, d = 0.0;
    double ss = q * q;
    for (int k = 0; k < N; ++k) {
      double qn = (x * q - sb[k] * qm) / sb[k + 1];
      double dn = (q + x * d - sb[k] * dm) / sb[k + 1];
      qm = q;
      q = qn;
      dm = d;
      d = dn;
      if (k + 1 < N) ss += q * q;
    }
    if (deriv) *deriv = d;
    if (sumsq) *sumsq = ss;
    return q;
  }
};

} // namespace

void gauss_gegenbauer(int n_dim, int n_nodes, std::vector<double>& x,
                      std::vector<double>& w) {
  assert(n_nodes >= 1);
  GegenbauerRec rec(n_dim, n_nodes);
  x.clear();
  w.clear();
  x.reserve(n_nodes);
  w.reserve(n_nodes);

  // Bracket the roots on a cos-spaced scan (roots are nearly equispaced in
  // theta), then bisect to machine precision and polish with Newton.
  const int scan = 8 * n_nodes;
  double prev_x = std::cos(M_PI * 0.5 / (scan + 1));
  double prev_f = rec.eval(n_nodes, prev_x);
  for (int j = 1; j <= scan; ++j) {
    double t = M_PI * (j + 0.5) / (scan + 1);
    double cur_x = std::cos(t);
    double cur_f = rec.eval(n_nodes, cur_x);
    if ((prev_f < 0.0) != (cur_f < 0.0)) {
      double a = cur_x, fa = cur_f; // a < b
      double b = prev_x;
      for (int it = 0; it < 80 && b - a > 1e-16 * (2.0 + std::abs(a)); ++it) {
        double m = 0.5 * (a + b);
        double fm = rec.eval(n_nodes, m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      double r = 0.5 * (a + b);
      for (int it = 0; it < 3; ++it) {
        double d, f = rec.eval(n_nodes, r, &d);
        double step = f / d;
        if (!std::isfinite(step) || std::abs(step) > (b - a) + 1e-12) break;
        r -= step;
      }
      x.push_back(r);
    }
    prev_x = cur_x;
    prev_f = cur_f;
  }
  if (static_cast<int>(x.size()) != n_nodes)
    fail(Errc::NumericFailure, "gauss_gegenbauer: root bracketing failed");

  // Scan goes from theta ~ 0 (x ~ 1) downward; return abscissae increasing.
  for (std::size_t i = 0, j = x.size() - 1; i < j; ++i, --j) std::swap(x[i], x[j]);

  for (int i = 0; i < n_nodes; ++i) {
    double ss;
    rec.eval(n_nodes, x[i], nullptr, &ss);
    w.push_back(1.0 / ss); // Christoffel weight; weights sum to mu0
  }
}

} // namespace qflow
