#include <cmath>
#include <string>

#include "qflow/errors.hpp"
#include "qflow/flow.hpp"
#include "qflow/kernels.hpp"

namespace qflow {

const char* stop_kind_name(StopReason::Kind k) {
  switch (k) {
    case StopReason::Kind::Converged: return "Converged";
    case StopReason::Kind::Concentrated: return "Concentrated";
    case StopReason::Kind::TimedOut: return "TimedOut";
    case StopReason::Kind::NumericFailure: return "NumericFailure";
  }
  return "?";
}

namespace {

// Derived state from u and its synthesis: report, Q grid, residual, extrema.
// Spends two transforms (P_n u synthesis is the second).
void refresh_from_grid(const SphereContext& ctx, const PaneitzMultiplier& mult,
                       const CandidateF& f, FlowState& st) {
  const auto& K = kernels::active();
  const double n = ctx.n();
  const double fact = ctx.factorial_n1();
  K.minmax(st.u_grid.data(), st.u_grid.size(), &st.min_u, &st.max_u);
  if (n * std::max(std::abs(st.min_u), std::abs(st.max_u)) > guards::overflow_numax)
    fail(Errc::ConformalFactorOverflow,
         "flow state: n*max|u| = " +
             std::to_string(n * std::max(std::abs(st.min_u), std::abs(st.max_u))));

  GridField en(ctx.node_count()), eminus(ctx.node_count());
  K.exp_scale(n, st.u_grid.data(), en.data(), en.size());
  K.exp_scale(-n, st.u_grid.data(), eminus.data(), eminus.size());

  EnergyReport rep;
  rep.volume_mean = ctx.integrate_mean(en);
  rep.mean_fe = K.dot3(ctx.weights().data(), f.values().data(), en.data(), en.size()) /
                ctx.omega_n();
  if (rep.mean_fe <= 0.0)
    fail(Errc::NonpositiveFMass, "flow state left C_f^inf");
  rep.E = energy(ctx, mult, st.u);
  rep.E_f = rep.E - fact * std::log(rep.mean_fe);
  rep.alpha = fact / rep.mean_fe;
  st.report = rep;
  st.volume_err = std::abs(rep.volume_mean - 1.0);

  GridField pn = ctx.synthesize(paneitz_apply(ctx, mult, st.u));
  st.q_grid = GridField(ctx.node_count());
  GridField d(ctx.node_count());
  for (std::size_t i = 0; i < en.size(); ++i) {
    st.q_grid[i] = eminus[i] * (pn[i] + fact);
    d[i] = rep.alpha * f.values()[i] - st.q_grid[i];
  }
  st.residual_l2 =
      K.dot4(ctx.weights().data(), en.data(), d.data(), d.data(), d.size());
}

void refresh(const SphereContext& ctx, const PaneitzMultiplier& mult,
             const CandidateF& f, FlowState& st) {
  st.u_grid = ctx.synthesize(st.u);
  refresh_from_grid(ctx, mult, f, st);
}

} // namespace

FlowState make_state(const SphereContext& ctx, const PaneitzMultiplier& mult,
                     const CandidateF& f, const SpectralField& u0,
                     const FlowParams& params) {
  if (!in_class_cf(ctx, f, u0))
    fail(Errc::InitialDataRejected,
         "initial data is not in C_f^inf (unit volume, positive f-mass)");
  FlowState st;
  st.u = u0;
  st.t = 0.0;
  st.dt = params.dt0;
  st.step_index = 0;
  st.accept_streak = 0;
  refresh(ctx, mult, f, st);
  return st;
}

FlowState resume_state(const SphereContext& ctx, const PaneitzMultiplier& mult,
                       const CandidateF& f, const SpectralField& u, double t,
                       double dt, long long step_index, int accept_streak) {
  if (!in_class_cf(ctx, f, u))
    fail(Errc::InitialDataRejected, "snapshot state is not in C_f^inf");
  FlowState st;
  st.u = u;
  st.t = t;
  st.dt = dt;
  st.step_index = step_index;
  st.accept_streak = accept_streak;
  refresh(ctx, mult, f, st);
  return st;
}

FlowState step(const SphereContext& ctx, const PaneitzMultiplier& mult,
               const CandidateF& f, const FlowState& state,
               const FlowParams& params) {
  if (!in_class_cf(ctx, f, state.u))
    fail(Errc::PreconditionViolated, "flow state is not in C_f^inf");
  const auto& K = kernels::active();
  const double fact = ctx.factorial_n1();
  const double n = ctx.n();

  // All dt-independent work happens once: alpha (recomputed fresh for this
  // attempt group from the current u), the explicit right-hand side
  // (alpha f - Q)/2 + (c/2) P_n u, and its analysis.
  const double c_freeze = std::exp(-n * state.min_u); // max of e^{-nu}
  const double alpha = state.report.alpha;
  GridField rhs_grid(ctx.node_count());
  {
    GridField eminus(ctx.node_count());
    K.exp_scale(-n, state.u_grid.data(), eminus.data(), eminus.size());
    GridField pn_syn = ctx.synthesize(paneitz_apply(ctx, mult, state.u));
    for (std::size_t i = 0; i < rhs_grid.size(); ++i) {
      double q = eminus[i] * (pn_syn[i] + fact);
      rhs_grid[i] = 0.5 * (alpha * f.values()[i] - q) + 0.5 * c_freeze * pn_syn[i];
    }
  }
  const SpectralField rhs = ctx.analyze(rhs_grid);

  double dt = state.dt;
  {
    double mu_ref =
        mult.mu[std::min(params.dilation_l_ref, ctx.band_limit())];
    double cap = params.dilation_cap / (0.5 * c_freeze * mu_ref);
    dt = std::max(std::min(dt, cap), 1e-12);
  }

  bool halved = false;
  for (int attempt = 0; attempt <= params.max_halvings; ++attempt, dt *= 0.5) {
    if (attempt > 0) halved = true;

    SpectralField unew(ctx.coeff_count());
    for (std::size_t i = 0; i < unew.size(); ++i)
      unew[i] =
          (state.u[i] + dt * rhs[i]) / (1.0 + dt * 0.5 * c_freeze * mult.mu_by_coeff[i]);

    // Renormalize the volume on the grid (the basis constant is 1, so a
    // coefficient shift and a pointwise shift agree exactly).
    GridField ug = ctx.synthesize(unew);
    double m = K.max_abs(ug.data(), ug.size());
    if (n * m > guards::overflow_numax)
      fail(Errc::ConformalFactorOverflow,
           "flow step: n*max|u| = " + std::to_string(n * m));
    GridField en(ctx.node_count());
    K.exp_scale(n, ug.data(), en.data(), en.size());
    double shift = std::log(ctx.integrate_mean(en)) / n;
    unew[0] -= shift;
    for (std::size_t i = 0; i < ug.size(); ++i) ug[i] -= shift;

    // Dissipation check on E_f.
    K.exp_scale(n, ug.data(), en.data(), en.size());
    double mean_fe =
        K.dot3(ctx.weights().data(), f.values().data(), en.data(), en.size()) /
        ctx.omega_n();
    if (mean_fe <= 0.0) continue; // treat like a rejected step
    double ef = energy(ctx, mult, unew) - fact * std::log(mean_fe);
    if (ef <= state.report.E_f + params.ef_slack) {
      FlowState next;
      next.u = std::move(unew);
      next.u_grid = std::move(ug);
      next.t = state.t + dt;
      next.step_index = state.step_index + 1;
      next.accept_streak = halved ? 0 : state.accept_streak + 1;
      next.dt = dt;
      if (next.accept_streak >= params.growth_every) {
        next.dt = std::min(dt * params.growth_factor, params.dt_max);
        next.accept_streak = 0;
      }
      refresh_from_grid(ctx, mult, f, next);
      return next;
    }
  }
  fail(Errc::NumericFailure,
       "energy dissipation could not be restored after " +
           std::to_string(params.max_halvings) + " step halvings (dt = " +
           std::to_string(dt) + ")");
}

SpectralField interpolate_initial(const SphereContext& ctx, const CandidateF& f,
                                  const SpectralField& u0, double s) {
  if (s < 0.0 || s > 1.0)
    fail(Errc::PreconditionViolated, "interpolation parameter must be in [0,1]");
  const auto& K = kernels::active();
  GridField ug = ctx.synthesize(u0);
  GridField e(ctx.node_count());
  K.exp_scale(static_cast<double>(ctx.n()), ug.data(), e.data(), e.size());
  double vol = ctx.integrate_mean(e);
  if (std::abs(vol - 1.0) > guards::volume_tol)
    fail(Errc::PreconditionViolated, "u0 must be volume-normalized");
  double fmass =
      K.dot3(ctx.weights().data(), f.values().data(), e.data(), e.size()) /
      ctx.omega_n();
  if (fmass <= 0.0) fail(Errc::NonpositiveFMass, "u0 has nonpositive f-mass");

  GridField h(ctx.node_count());
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = std::log((1.0 - s) * e[i] + s) / ctx.n();
  return ctx.analyze(h);
}

} // namespace qflow
