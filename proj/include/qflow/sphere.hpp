#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qflow/errors.hpp"

namespace qflow {

// Scalar fields on the round sphere S^n (n even) in two discretizations:
//
//   Full2D        n = 2 only. Grid of (L+1) Gauss-Legendre colatitudes times
//                 2(L+1) equispaced longitudes; basis of real spherical
//                 harmonics Y_lm, |m| <= l <= L.
//   Axisymmetric  any even n. Fields depend on colatitude only; 2(L+1)
//                 Gauss-Gegenbauer latitudes (weight sin^{n-1} theta); basis
//                 of normalized Gegenbauer polynomials in cos(theta).
//
// Normalization convention (used everywhere): basis functions have unit L2
// norm against the probability measure d mu_{S^n} / omega_n, so the degree-0
// basis function is the constant 1 and the degree-0 coefficient of a field
// equals its spherical mean (normalization constant 1).
//
// Quadrature node weights are absolute: sum_i w[i] = omega_n, and
// integrate(g) = sum_i w[i] g[i] approximates the integral over S^n. For an
// axisymmetric context a "node" is a full latitude sphere S^{n-1} and its
// weight includes the fiber volume.

enum class GridMode { Full2D, Axisymmetric };

struct GridField {
  std::vector<double> v;

  GridField() = default;
  explicit GridField(std::size_t n, double fill = 0.0) : v(n, fill) {}
  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

struct SpectralField {
  std::vector<double> c;

  SpectralField() = default;
  explicit SpectralField(std::size_t n, double fill = 0.0) : c(n, fill) {}
  std::size_t size() const { return c.size(); }
  double* data() { return c.data(); }
  const double* data() const { return c.data(); }
  double& operator[](std::size_t i) { return c[i]; }
  double operator[](std::size_t i) const { return c[i]; }
};

class SphereContext {
public:
  // n even and >= 2, L >= 8; Full2D requires n == 2.
  static SphereContext make(int n, GridMode mode, int L);

  int n() const { return n_; }
  int band_limit() const { return L_; }
  GridMode mode() const { return mode_; }
  double omega_n() const { return omega_n_; }
  double factorial_n1() const { return fact_n1_; } // (n-1)!
  std::size_t node_count() const { return w_.size(); }
  std::size_t coeff_count() const { return coeff_count_; }

  const std::vector<double>& weights() const { return w_; }
  const std::vector<double>& colatitudes() const { return theta_; } // per node
  // Ambient coordinate d (0-based, d <= n) of every node. In axisymmetric
  // mode only d == n (the polar axis, cos theta) is meaningful; transverse
  // coordinates average to zero over the latitude fiber and return nullptr.
  const double* coordinate(int d) const;

  // Full2D coefficient layout: index(l, m) = l*l + l + m, m in [-l, l];
  // m > 0 are cos(m phi) components, m < 0 are sin(|m| phi) components.
  // Axisymmetric layout: index l, 0 <= l <= L.
  std::size_t coeff_index(int l, int m) const;
  int coeff_degree(std::size_t idx) const;

  // -Delta eigenvalue l(l+n-1) per coefficient index.
  const std::vector<double>& laplace_eigenvalues() const { return lap_eig_; }

  GridField synthesize(const SpectralField& s) const;
  SpectralField analyze(const GridField& g) const;
  double integrate(const GridField& g) const;        // sum w_i g_i
  double integrate_mean(const GridField& g) const;   // (1/omega_n) sum w_i g_i
  SpectralField laplacian(const SpectralField& s) const;

  // Pointwise evaluation of the basis expansion at an arbitrary unit vector
  // (Full2D) or at cos(theta) (Axisymmetric helper).
  double evaluate(const SpectralField& s, const std::array<double, 3>& x) const;
  double evaluate_axi(const SpectralField& s, double costheta) const;

  // Basis function value, used by tests and the point evaluators.
  double basis_full2d(int l, int m, double costheta, double phi) const;
  double basis_axi(int l, double costheta) const;

  void check_grid(const GridField& g) const;
  void check_spectral(const SpectralField& s) const;

private:
  SphereContext() = default;
  void build_full2d();
  void build_axi();

  int n_ = 0;
  int L_ = 0;
  GridMode mode_ = GridMode::Full2D;
  double omega_n_ = 0.0;
  double omega_sub_ = 0.0; // vol(S^{n-1})
  double fact_n1_ = 1.0;
  std::size_t coeff_count_ = 0;

  int n_theta_ = 0;
  int n_phi_ = 0; // Full2D only

  std::vector<double> theta_;               // per node
  std::vector<double> w_;                   // per node, sums to omega_n
  std::vector<double> gl_x_;                // colatitude quadrature abscissae
  std::vector<double> gl_wnorm_;            // colatitude weights, sum 1
  std::array<std::vector<double>, 3> coord_; // Full2D SoA xyz
  std::vector<double> axis_coord_;           // cos theta per node

  std::vector<double> lap_eig_;

  // Full2D: fully-normalized associated Legendre tables, packed per theta row
  // m-major: for m = 0..L the values for l = m..L. plm_t_ is the transpose
  // (per (m,l) over theta). trig_: per longitude j the row
  // [1, sqrt2 cos phi, sqrt2 sin phi, ..., sqrt2 cos L phi, sqrt2 sin L phi];
  // trig_t_ its transpose.
  std::size_t nlm_ = 0;
  std::vector<double> plm_, plm_t_, trig_, trig_t_;

  // Axisymmetric: basis table per node row and its transpose, plus the
  // orthonormal-recurrence coefficients sqrt(beta_k) for point evaluation.
  std::vector<double> basis_, basis_t_, rec_sb_;
  double basis_scale_ = 1.0; // sqrt(mu_0): maps orthonormal q_l to B_l with B_0 = 1

  std::size_t pack_lm(int m, int l) const {
    return static_cast<std::size_t>(m) * (L_ + 1) -
           static_cast<std::size_t>(m) * (m - 1) / 2 + (l - m);
  }

  friend struct SphereContextTestAccess;
};

// Gauss quadrature for the weight (1-x^2)^{(n-2)/2} on [-1, 1] (Legendre for
// n = 2). Returns abscissae in increasing order and weights summing to
// mu_0 = int (1-x^2)^{(n-2)/2} dx.
void gauss_gegenbauer(int n_dim, int n_nodes, std::vector<double>& x,
                      std::vector<double>& w);

double sphere_volume(int n); // omega_n = 2 pi^{(n+1)/2} / Gamma((n+1)/2)

} // namespace qflow
