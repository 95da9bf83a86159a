#include <cmath>
#include <string>

#include "qflow/conformal.hpp"
#include "qflow/errors.hpp"
#include "qflow/kernels.hpp"

namespace qflow {

PaneitzMultiplier make_multiplier(const SphereContext& ctx) {
  PaneitzMultiplier m;
  m.n = ctx.n();
  m.L = ctx.band_limit();
  m.mu.resize(m.L + 1);
  for (int l = 0; l <= m.L; ++l) {
    double lam = static_cast<double>(l) * (l + m.n - 1);
    double prod = 1.0;
    for (int k = 0; k <= (m.n - 2) / 2; ++k)
      prod *= lam + static_cast<double>(k) * (m.n - k - 1);
    m.mu[l] = prod;
  }
  m.mu_by_coeff.resize(ctx.coeff_count());
  for (std::size_t i = 0; i < ctx.coeff_count(); ++i)
    m.mu_by_coeff[i] = m.mu[ctx.coeff_degree(i)];
  return m;
}

SpectralField paneitz_apply(const SphereContext& ctx, const PaneitzMultiplier& mult,
                            const SpectralField& s) {
  ctx.check_spectral(s);
  if (mult.n != ctx.n() || mult.L != ctx.band_limit() ||
      mult.mu_by_coeff.size() != ctx.coeff_count())
    fail(Errc::DimensionMismatch, "multiplier built for a different context");
  SpectralField out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = mult.mu_by_coeff[i] * s[i];
  return out;
}

namespace {

void check_overflow(const SphereContext& ctx, const GridField& u_grid,
                    const char* where) {
  double m = kernels::active().max_abs(u_grid.data(), u_grid.size());
  if (ctx.n() * m > guards::overflow_numax)
    fail(Errc::ConformalFactorOverflow,
         std::string(where) + ": n*max|u| = " + std::to_string(ctx.n() * m));
}

} // namespace

GridField q_curvature(const SphereContext& ctx, const PaneitzMultiplier& mult,
                      const SpectralField& u) {
  const auto& K = kernels::active();
  GridField ug = ctx.synthesize(u);
  check_overflow(ctx, ug, "q_curvature");
  GridField pn = ctx.synthesize(paneitz_apply(ctx, mult, u));
  GridField q(ctx.node_count());
  K.exp_scale(-static_cast<double>(ctx.n()), ug.data(), q.data(), q.size());
  const double fact = ctx.factorial_n1();
  for (std::size_t i = 0; i < q.size(); ++i) q[i] *= pn[i] + fact;
  return q;
}

double volume_mean(const SphereContext& ctx, const SpectralField& u) {
  GridField ug = ctx.synthesize(u);
  check_overflow(ctx, ug, "volume_mean");
  GridField e(ctx.node_count());
  kernels::active().exp_scale(static_cast<double>(ctx.n()), ug.data(), e.data(),
                              e.size());
  return ctx.integrate_mean(e);
}

double alpha_factor(const SphereContext& ctx, const CandidateF& f,
                    const SpectralField& u) {
  const auto& K = kernels::active();
  GridField ug = ctx.synthesize(u);
  check_overflow(ctx, ug, "alpha");
  GridField e(ctx.node_count());
  K.exp_scale(static_cast<double>(ctx.n()), ug.data(), e.data(), e.size());
  double mean_fe =
      K.dot3(ctx.weights().data(), f.values().data(), e.data(), e.size()) /
      ctx.omega_n();
  if (mean_fe <= 0.0)
    fail(Errc::NonpositiveFMass,
         "mean(f e^{nu}) = " + std::to_string(mean_fe) + "; state left C_f^inf");
  return ctx.factorial_n1() / mean_fe;
}

double energy(const SphereContext& ctx, const PaneitzMultiplier& mult,
              const SpectralField& u) {
  ctx.check_spectral(u);
  const auto& K = kernels::active();
  double quad = K.dot3(mult.mu_by_coeff.data(), u.data(), u.data(), u.size());
  double mean_u = u[0]; // degree-0 coefficient is the spherical mean
  return 0.5 * ctx.n() * (quad + 2.0 * ctx.factorial_n1() * mean_u);
}

EnergyReport energy_f(const SphereContext& ctx, const PaneitzMultiplier& mult,
                      const CandidateF& f, const SpectralField& u) {
  const auto& K = kernels::active();
  GridField ug = ctx.synthesize(u);
  check_overflow(ctx, ug, "energy_f");
  GridField e(ctx.node_count());
  K.exp_scale(static_cast<double>(ctx.n()), ug.data(), e.data(), e.size());

  EnergyReport r;
  r.volume_mean = ctx.integrate_mean(e);
  r.mean_fe = K.dot3(ctx.weights().data(), f.values().data(), e.data(), e.size()) /
              ctx.omega_n();
  if (r.mean_fe <= 0.0)
    fail(Errc::NonpositiveFMass,
         "mean(f e^{nu}) = " + std::to_string(r.mean_fe) + "; state left C_f^inf");
  r.E = energy(ctx, mult, u);
  r.E_f = r.E - ctx.factorial_n1() * std::log(r.mean_fe);
  r.alpha = ctx.factorial_n1() / r.mean_fe;
  return r;
}

SpectralField renormalize_volume(const SphereContext& ctx, const SpectralField& u) {
  double vm = volume_mean(ctx, u);
  SpectralField out = u;
  out[0] -= std::log(vm) / ctx.n();
  return out;
}

SpectralField finalize_solution(const SphereContext& ctx, const SpectralField& u,
                                double alpha_value) {
  ctx.check_spectral(u);
  if (!(alpha_value > 0.0))
    fail(Errc::NonpositiveAlpha, "alpha = " + std::to_string(alpha_value));
  SpectralField out = u;
  out[0] += std::log(alpha_value) / ctx.n();
  return out;
}

bool in_class_cf(const SphereContext& ctx, const CandidateF& f,
                 const SpectralField& u) {
  const auto& K = kernels::active();
  GridField ug = ctx.synthesize(u);
  double m = K.max_abs(ug.data(), ug.size());
  if (ctx.n() * m > guards::overflow_numax) return false;
  GridField e(ctx.node_count());
  K.exp_scale(static_cast<double>(ctx.n()), ug.data(), e.data(), e.size());
  double vol = ctx.integrate_mean(e);
  if (std::abs(vol - 1.0) > guards::volume_tol) return false;
  double mean_fe =
      K.dot3(ctx.weights().data(), f.values().data(), e.data(), e.size()) /
      ctx.omega_n();
  return mean_fe > 0.0;
}

} // namespace qflow
