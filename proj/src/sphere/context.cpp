#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>

#include "qflow/errors.hpp"
#include "qflow/kernels.hpp"
#include "qflow/sphere.hpp"

namespace qflow {

namespace detail {

std::size_t pack_lm_for(int L, int m, int l) {
  return static_cast<std::size_t>(m) * (L + 1) -
         static_cast<std::size_t>(m) * (m - 1) / 2 + (l - m);
}

// Fully-normalized associated Legendre values: (1/2) int_{-1}^{1} Pbar_l^m
// Pbar_k^m dx = delta_{lk}, Condon-Shortley phase omitted. Fills, for
// m = 0..L and l = m..L, out[pack_lm_for(L,m,l)] at one (cos, sin) of theta.
void plm_column(int L, double ct, double st, double* out) {
  double pmm = 1.0; // Pbar_0^0
  for (int m = 0; m <= L; ++m) {
    if (m > 0) pmm *= st * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    out[pack_lm_for(L, m, m)] = pmm;
    if (m + 1 <= L) {
      double p1 = std::sqrt(2.0 * m + 3.0) * ct * pmm;
      out[pack_lm_for(L, m, m + 1)] = p1;
      double pl2 = pmm, pl1 = p1;
      double a_prev = std::sqrt((4.0 * (m + 1.0) * (m + 1.0) - 1.0) /
                                ((m + 1.0) * (m + 1.0) - m * m));
      for (int l = m + 2; l <= L; ++l) {
        double a = std::sqrt((4.0 * l * l - 1.0) /
                             (static_cast<double>(l) * l - static_cast<double>(m) * m));
        double pl = a * (ct * pl1 - pl2 / a_prev);
        out[pack_lm_for(L, m, l)] = pl;
        pl2 = pl1;
        pl1 = pl;
        a_prev = a;
      }
    }
  }
}

} // namespace detail

SphereContext SphereContext::make(int n, GridMode mode, int L) {
  if (n < 2 || n % 2 != 0)
    fail(Errc::OddDimension, "sphere dimension must be even and >= 2, got " +
                                 std::to_string(n));
  if (mode == GridMode::Full2D && n != 2)
    fail(Errc::InvalidMode, "Full2D mode requires n = 2");
  if (L < 8) fail(Errc::BandLimitTooSmall, "band limit must be >= 8");

  SphereContext ctx;
  ctx.n_ = n;
  ctx.L_ = L;
  ctx.mode_ = mode;
  ctx.omega_n_ = sphere_volume(n);
  ctx.omega_sub_ = sphere_volume(n - 1);
  ctx.fact_n1_ = 1.0;
  for (int k = 2; k <= n - 1; ++k) ctx.fact_n1_ *= k;

  if (mode == GridMode::Full2D)
    ctx.build_full2d();
  else
    ctx.build_axi();
  return ctx;
}

void SphereContext::build_full2d() {
  const int L = L_;
  n_theta_ = L + 1;
  n_phi_ = 2 * (L + 1);
  coeff_count_ = static_cast<std::size_t>(L + 1) * (L + 1);
  nlm_ = static_cast<std::size_t>(L + 1) * (L + 2) / 2;

  std::vector<double> gx, gw;
  gauss_gegenbauer(2, n_theta_, gx, gw);
  gl_x_ = gx;
  double wsum = 0.0;
  for (double v : gw) wsum += v;
  gl_wnorm_.resize(n_theta_);
  for (int i = 0; i < n_theta_; ++i) gl_wnorm_[i] = gw[i] / wsum;

  const std::size_t nn = static_cast<std::size_t>(n_theta_) * n_phi_;
  theta_.resize(nn);
  w_.resize(nn);
  for (auto& c : coord_) c.resize(nn);
  axis_coord_.resize(nn);

  plm_.resize(static_cast<std::size_t>(n_theta_) * nlm_);
  plm_t_.resize(plm_.size());
  trig_.resize(static_cast<std::size_t>(n_phi_) * (2 * L + 1));
  trig_t_.resize(trig_.size());

  for (int i = 0; i < n_theta_; ++i) {
    double ct = gl_x_[i];
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    double th = std::acos(ct);
    detail::plm_column(L, ct, st, plm_.data() + static_cast<std::size_t>(i) * nlm_);
    for (int j = 0; j < n_phi_; ++j) {
      double phi = 2.0 * M_PI * j / n_phi_;
      std::size_t k = static_cast<std::size_t>(i) * n_phi_ + j;
      theta_[k] = th;
      w_[k] = omega_n_ * gl_wnorm_[i] / n_phi_;
      coord_[0][k] = st * std::cos(phi);
      coord_[1][k] = st * std::sin(phi);
      coord_[2][k] = ct;
      axis_coord_[k] = ct;
    }
  }
  for (int i = 0; i < n_theta_; ++i)
    for (std::size_t p = 0; p < nlm_; ++p)
      plm_t_[p * n_theta_ + i] = plm_[static_cast<std::size_t>(i) * nlm_ + p];

  const double sq2 = std::sqrt(2.0);
  for (int j = 0; j < n_phi_; ++j) {
    double phi = 2.0 * M_PI * j / n_phi_;
    double* row = trig_.data() + static_cast<std::size_t>(j) * (2 * L + 1);
    row[0] = 1.0;
    for (int m = 1; m <= L; ++m) {
      row[2 * m - 1] = sq2 * std::cos(m * phi);
      row[2 * m] = sq2 * std::sin(m * phi);
    }
  }
  for (int j = 0; j < n_phi_; ++j)
    for (int c = 0; c < 2 * L + 1; ++c)
      trig_t_[static_cast<std::size_t>(c) * n_phi_ + j] =
          trig_[static_cast<std::size_t>(j) * (2 * L + 1) + c];

  lap_eig_.resize(coeff_count_);
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m)
      lap_eig_[coeff_index(l, m)] = static_cast<double>(l) * (l + n_ - 1);
}

void SphereContext::build_axi() {
  const int L = L_;
  n_theta_ = 2 * (L + 1);
  coeff_count_ = static_cast<std::size_t>(L + 1);

  std::vector<double> gx, gw;
  gauss_gegenbauer(n_, n_theta_, gx, gw);
  gl_x_ = gx;
  double mu0 = 0.0;
  for (double v : gw) mu0 += v;
  gl_wnorm_.resize(n_theta_);
  for (int i = 0; i < n_theta_; ++i) gl_wnorm_[i] = gw[i] / mu0;
  basis_scale_ = std::sqrt(mu0);

  theta_.resize(n_theta_);
  w_.resize(n_theta_);
  axis_coord_.resize(n_theta_);
  for (int i = 0; i < n_theta_; ++i) {
    theta_[i] = std::acos(gl_x_[i]);
    w_[i] = omega_sub_ * gw[i];
    axis_coord_[i] = gl_x_[i];
  }

  rec_sb_.resize(L + 2, 0.0);
  {
    const double lam = 0.5 * (n_ - 1);
    for (int k = 1; k <= L + 1; ++k)
      rec_sb_[k] =
          std::sqrt(k * (k + 2.0 * lam - 1.0) / (4.0 * (k + lam) * (k + lam - 1.0)));
  }

  basis_.resize(static_cast<std::size_t>(n_theta_) * (L + 1));
  basis_t_.resize(basis_.size());
  for (int i = 0; i < n_theta_; ++i) {
    double* row = basis_.data() + static_cast<std::size_t>(i) * (L + 1);
    double x = gl_x_[i];
    double qm = 0.0, q = 1.0 / basis_scale_;
    row[0] = basis_scale_ * q;
    for (int l = 0; l < L; ++l) {
      double qn = (x * q - rec_sb_[l] * qm) / rec_sb_[l + 1];
      qm = q;
      q = qn;
      row[l + 1] = basis_scale_ * q;
    }
  }
  for (int i = 0; i < n_theta_; ++i)
    for (int l = 0; l <= L; ++l)
      basis_t_[static_cast<std::size_t>(l) * n_theta_ + i] =
          basis_[static_cast<std::size_t>(i) * (L + 1) + l];

  lap_eig_.resize(coeff_count_);
  for (int l = 0; l <= L; ++l)
    lap_eig_[l] = static_cast<double>(l) * (l + n_ - 1);
}

const double* SphereContext::coordinate(int d) const {
  assert(d >= 0 && d <= n_);
  if (d == n_) return axis_coord_.data();
  if (mode_ == GridMode::Axisymmetric) return nullptr;
  return coord_[d].data();
}

std::size_t SphereContext::coeff_index(int l, int m) const {
  assert(l >= 0 && l <= L_ && std::abs(m) <= l);
  if (mode_ == GridMode::Axisymmetric) {
    assert(m == 0);
    return static_cast<std::size_t>(l);
  }
  return static_cast<std::size_t>(l) * l + l + m;
}

int SphereContext::coeff_degree(std::size_t idx) const {
  if (mode_ == GridMode::Axisymmetric) return static_cast<int>(idx);
  int l = static_cast<int>(std::sqrt(static_cast<double>(idx)));
  while (static_cast<std::size_t>(l + 1) * (l + 1) <= idx) ++l;
  while (static_cast<std::size_t>(l) * l > idx) --l;
  return l;
}

void SphereContext::check_grid(const GridField& g) const {
  if (g.size() != node_count())
    fail(Errc::DimensionMismatch, "grid field has " + std::to_string(g.size()) +
                                      " values, context has " +
                                      std::to_string(node_count()) + " nodes");
}

void SphereContext::check_spectral(const SpectralField& s) const {
  if (s.size() != coeff_count())
    fail(Errc::DimensionMismatch, "spectral field has " + std::to_string(s.size()) +
                                      " coefficients, context needs " +
                                      std::to_string(coeff_count()));
}

double SphereContext::integrate(const GridField& g) const {
  check_grid(g);
  return kernels::active().dot(w_.data(), g.data(), g.size());
}

double SphereContext::integrate_mean(const GridField& g) const {
  return integrate(g) / omega_n_;
}

SpectralField SphereContext::laplacian(const SpectralField& s) const {
  check_spectral(s);
  SpectralField out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = -lap_eig_[i] * s[i];
  return out;
}

double SphereContext::basis_axi(int l, double x) const {
  assert(mode_ == GridMode::Axisymmetric && l >= 0 && l <= L_);
  double qm = 0.0, q = 1.0 / basis_scale_;
  for (int k = 0; k < l; ++k) {
    double qn = (x * q - rec_sb_[k] * qm) / rec_sb_[k + 1];
    qm = q;
    q = qn;
  }
  return basis_scale_ * q;
}

double SphereContext::basis_full2d(int l, int m, double ct, double phi) const {
  assert(mode_ == GridMode::Full2D && l <= L_ && std::abs(m) <= l);
  int am = std::abs(m);
  double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  double pmm = 1.0;
  for (int k = 1; k <= am; ++k) pmm *= st * std::sqrt((2.0 * k + 1.0) / (2.0 * k));
  double val;
  if (l == am) {
    val = pmm;
  } else {
    double p1 = std::sqrt(2.0 * am + 3.0) * ct * pmm;
    if (l == am + 1) {
      val = p1;
    } else {
      double pl2 = pmm, pl1 = p1;
      double a_prev = std::sqrt((4.0 * (am + 1.0) * (am + 1.0) - 1.0) /
                                ((am + 1.0) * (am + 1.0) - am * am));
      val = 0.0;
      for (int k = am + 2; k <= l; ++k) {
        double a = std::sqrt((4.0 * k * k - 1.0) /
                             (static_cast<double>(k) * k - static_cast<double>(am) * am));
        val = a * (ct * pl1 - pl2 / a_prev);
        pl2 = pl1;
        pl1 = val;
        a_prev = a;
      }
    }
  }
  if (m > 0) return val * std::sqrt(2.0) * std::cos(m * phi);
  if (m < 0) return val * std::sqrt(2.0) * std::sin(am * phi);
  return val;
}

} // namespace qflow
