#include <cmath>
#include <cstddef>
#include <vector>

#include "qflow/kernels.hpp"
#include "qflow/sphere.hpp"

namespace qflow {

namespace detail {
void plm_column(int L, double ct, double st, double* out);
}

// Full2D transforms factor through the longitude components
//   comp 0      : m = 0
//   comp 2m - 1 : sqrt(2) cos(m phi), m >= 1
//   comp 2m     : sqrt(2) sin(m phi), m >= 1
// matching the packed coefficient groups (cos components at index(l, +m),
// sin components at index(l, -m)).

GridField SphereContext::synthesize(const SpectralField& s) const {
  check_spectral(s);
  const auto& K = kernels::active();
  GridField g(node_count());

  if (mode_ == GridMode::Axisymmetric) {
    for (int i = 0; i < n_theta_; ++i)
      g[i] = K.dot(basis_.data() + static_cast<std::size_t>(i) * (L_ + 1), s.data(),
                   L_ + 1);
    return g;
  }

  const int L = L_;
  std::vector<double> packed_cos(nlm_, 0.0), packed_sin(nlm_, 0.0);
  for (int m = 0; m <= L; ++m)
    for (int l = m; l <= L; ++l) {
      packed_cos[pack_lm(m, l)] = s[coeff_index(l, m)];
      if (m > 0) packed_sin[pack_lm(m, l)] = s[coeff_index(l, -m)];
    }

  std::vector<double> svec(2 * L + 1);
  for (int i = 0; i < n_theta_; ++i) {
    const double* prow = plm_.data() + static_cast<std::size_t>(i) * nlm_;
    svec[0] = K.dot(prow, packed_cos.data(), L + 1);
    for (int m = 1; m <= L; ++m) {
      std::size_t off = pack_lm(m, m);
      svec[2 * m - 1] = K.dot(prow + off, packed_cos.data() + off, L + 1 - m);
      svec[2 * m] = K.dot(prow + off, packed_sin.data() + off, L + 1 - m);
    }
    double* grow = g.data() + static_cast<std::size_t>(i) * n_phi_;
    for (int j = 0; j < n_phi_; ++j)
      grow[j] = K.dot(trig_.data() + static_cast<std::size_t>(j) * (2 * L + 1),
                      svec.data(), 2 * L + 1);
  }
  return g;
}

SpectralField SphereContext::analyze(const GridField& g) const {
  check_grid(g);
  const auto& K = kernels::active();
  SpectralField s(coeff_count());

  if (mode_ == GridMode::Axisymmetric) {
    std::vector<double> gw(n_theta_);
    for (int i = 0; i < n_theta_; ++i) gw[i] = gl_wnorm_[i] * g[i];
    for (int l = 0; l <= L_; ++l)
      s[l] = K.dot(basis_t_.data() + static_cast<std::size_t>(l) * n_theta_, gw.data(),
                   n_theta_);
    return s;
  }

  const int L = L_;
  const int ncomp = 2 * L + 1;
  // Longitude projection, component-major, pre-multiplied by the colatitude
  // probability weights.
  std::vector<double> fw(static_cast<std::size_t>(ncomp) * n_theta_);
  for (int i = 0; i < n_theta_; ++i) {
    const double* grow = g.data() + static_cast<std::size_t>(i) * n_phi_;
    double wi = gl_wnorm_[i] / n_phi_;
    for (int c = 0; c < ncomp; ++c)
      fw[static_cast<std::size_t>(c) * n_theta_ + i] =
          wi * K.dot(trig_t_.data() + static_cast<std::size_t>(c) * n_phi_, grow, n_phi_);
  }

  for (int m = 0; m <= L; ++m) {
    const double* fc =
        fw.data() + static_cast<std::size_t>(m == 0 ? 0 : 2 * m - 1) * n_theta_;
    const double* fs = m == 0 ? nullptr
                              : fw.data() + static_cast<std::size_t>(2 * m) * n_theta_;
    for (int l = m; l <= L; ++l) {
      const double* prow = plm_t_.data() + pack_lm(m, l) * n_theta_;
      s[coeff_index(l, m)] = K.dot(prow, fc, n_theta_);
      if (m > 0) s[coeff_index(l, -m)] = K.dot(prow, fs, n_theta_);
    }
  }
  return s;
}

double SphereContext::evaluate_axi(const SpectralField& s, double x) const {
  check_spectral(s);
  double qm = 0.0, q = 1.0 / basis_scale_;
  double acc = s[0] * basis_scale_ * q;
  for (int l = 0; l < L_; ++l) {
    double qn = (x * q - rec_sb_[l] * qm) / rec_sb_[l + 1];
    qm = q;
    q = qn;
    acc += s[l + 1] * basis_scale_ * q;
  }
  return acc;
}

double SphereContext::evaluate(const SpectralField& s,
                               const std::array<double, 3>& x) const {
  if (mode_ == GridMode::Axisymmetric) return evaluate_axi(s, x[2]);
  check_spectral(s);
  const int L = L_;
  double ct = std::min(1.0, std::max(-1.0, x[2]));
  double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  double r = std::hypot(x[0], x[1]);
  double cphi = r > 0.0 ? x[0] / r : 1.0;
  double sphi = r > 0.0 ? x[1] / r : 0.0;

  std::vector<double> col(nlm_);
  detail::plm_column(L, ct, st, col.data());

  const double sq2 = std::sqrt(2.0);
  // cos(m phi), sin(m phi) by the angle-addition recurrence.
  double cm = 1.0, sm = 0.0;
  double acc = 0.0;
  for (int m = 0; m <= L; ++m) {
    double am = 0.0, bm = 0.0;
    std::size_t off = pack_lm(m, m);
    for (int l = m; l <= L; ++l) {
      am += col[off + (l - m)] * s[coeff_index(l, m)];
      if (m > 0) bm += col[off + (l - m)] * s[coeff_index(l, -m)];
    }
    if (m == 0)
      acc += am;
    else
      acc += sq2 * (am * cm + bm * sm);
    double cn = cm * cphi - sm * sphi;
    sm = sm * cphi + cm * sphi;
    cm = cn;
  }
  return acc;
}

} // namespace qflow
