#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "qflow/blowup.hpp"
#include "qflow/errors.hpp"
#include "qflow/kernels.hpp"
#include "qflow/mobius.hpp"

namespace qflow {

std::vector<double> default_radii() {
  std::vector<double> r;
  for (double x = 0.01; x < 0.2; x += 0.005) r.push_back(x);
  for (double x = 0.2; x <= M_PI + 1e-12; x += 0.04) r.push_back(x);
  return r;
}

double residual_l2(const SphereContext& ctx, const CandidateF& f,
                   const FlowState& state) {
  const auto& K = kernels::active();
  GridField en(ctx.node_count());
  K.exp_scale(static_cast<double>(ctx.n()), state.u_grid.data(), en.data(), en.size());
  GridField d(ctx.node_count());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = state.report.alpha * f.values()[i] - state.q_grid[i];
  return K.dot4(ctx.weights().data(), en.data(), d.data(), d.data(), d.size());
}

namespace {

// Ball masses for one center over all radii at once. cth holds cos(r_k),
// descending in k; node i contributes to every k with cth[k] <= dot_i.
void center_masses(const std::vector<double>& dots, const std::vector<double>& mass,
                   const std::vector<double>& cth, std::vector<double>& out) {
  const std::size_t R = cth.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < dots.size(); ++i) {
    double d = dots[i];
    // First k with cth[k] <= d (cth descending).
    std::size_t lo = 0, hi = R;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (cth[mid] <= d)
        hi = mid;
      else
        lo = mid + 1;
    }
    if (lo < R) out[lo] += mass[i];
  }
  for (std::size_t k = 1; k < R; ++k) out[k] += out[k - 1];
}

void dots_for_center(const SphereContext& ctx, const std::vector<double>& p,
                     std::vector<double>& dots) {
  if (ctx.mode() == GridMode::Axisymmetric) {
    kernels::active().scale(p[ctx.n()], ctx.coordinate(ctx.n()), dots.data(),
                            dots.size());
  } else {
    kernels::active().lincomb3(p[0], ctx.coordinate(0), p[1], ctx.coordinate(1), p[2],
                               ctx.coordinate(2), dots.data(), dots.size());
  }
}

std::vector<double> node_position(const SphereContext& ctx, std::size_t i) {
  std::vector<double> p(ctx.n() + 1, 0.0);
  if (ctx.mode() == GridMode::Axisymmetric)
    p[ctx.n()] = ctx.coordinate(ctx.n())[i] >= 0.0 ? 1.0 : -1.0;
  else
    for (int d = 0; d < 3; ++d) p[d] = ctx.coordinate(d)[i];
  return p;
}

} // namespace

ConcentrationProbe concentration_scan(const SphereContext& ctx, const FlowState& state,
                                      const std::vector<double>& radii) {
  if (radii.empty()) fail(Errc::EmptyRadii, "concentration scan needs radii");
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (radii[k] <= radii[k - 1])
      fail(Errc::PreconditionViolated, "radii must be sorted ascending");

  const auto& K = kernels::active();
  const std::size_t nn = ctx.node_count();
  const std::size_t R = radii.size();

  std::vector<double> mass(nn);
  K.exp_scale(static_cast<double>(ctx.n()), state.u_grid.data(), mass.data(), nn);
  for (std::size_t i = 0; i < nn; ++i)
    mass[i] *= ctx.weights()[i] * std::abs(state.q_grid[i]);

  std::vector<double> cth(R);
  for (std::size_t k = 0; k < R; ++k) cth[k] = std::cos(radii[k]);

  ConcentrationProbe probe;
  probe.threshold_quarter = 0.25 * ctx.factorial_n1() * ctx.omega_n();
  probe.threshold_half = 0.5 * ctx.factorial_n1() * ctx.omega_n();

  std::vector<double> best(R, 0.0);
  std::vector<std::vector<double>> best_center(R);
  std::vector<double> dots(nn), masses_r(R);

  auto scan_center = [&](const std::vector<double>& p) {
    dots_for_center(ctx, p, dots);
    center_masses(dots, mass, cth, masses_r);
    for (std::size_t k = 0; k < R; ++k)
      if (masses_r[k] > best[k]) {
        best[k] = masses_r[k];
        best_center[k] = p;
      }
  };

  if (ctx.mode() == GridMode::Axisymmetric) {
    // Axisymmetric metrics can only concentrate at the poles.
    std::vector<double> north(ctx.n() + 1, 0.0), south(ctx.n() + 1, 0.0);
    north[ctx.n()] = 1.0;
    south[ctx.n()] = -1.0;
    scan_center(north);
    scan_center(south);
  } else {
    // Coarse pass over (possibly strided) nodes, then a refinement pass over
    // all nodes near the winning center.
    std::size_t stride = 1;
    while (nn / (stride * stride) > 2600) ++stride;
    for (std::size_t i = 0; i < nn; i += stride) scan_center(node_position(ctx, i));

    if (stride > 1) {
      std::size_t kref = R - 1;
      for (std::size_t k = 0; k < R; ++k)
        if (best[k] >= probe.threshold_quarter) {
          kref = k;
          break;
        }
      const std::vector<double> winner = best_center[kref];
      std::vector<double> wd(nn);
      dots_for_center(ctx, winner, wd);
      const double near = std::cos(4.0 * M_PI / (ctx.band_limit() + 1));
      for (std::size_t i = 0; i < nn; ++i)
        if (wd[i] >= near) scan_center(node_position(ctx, i));
    }
  }

  probe.mass_at_r.reserve(R);
  for (std::size_t k = 0; k < R; ++k) probe.mass_at_r.emplace_back(radii[k], best[k]);
  for (std::size_t k = 0; k < R; ++k)
    if (best[k] >= probe.threshold_quarter) {
      probe.r_star = radii[k];
      probe.p_star = best_center[k];
      break;
    }
  for (std::size_t k = 0; k < R; ++k)
    if (best[k] >= probe.threshold_half) {
      probe.r_star_half = radii[k];
      break;
    }
  if (probe.p_star.empty()) probe.p_star = best_center[R - 1];
  return probe;
}

StopSignal detect(const SphereContext& ctx, const FlowState& state,
                  const DetectorThresholds& thr,
                  const std::optional<ConcentrationProbe>& probe) {
  (void)ctx;
  StopSignal sig;
  if (state.max_u >= thr.u_blow) {
    sig.concentrating = true;
    sig.why = "max u = " + std::to_string(state.max_u) + " >= u_blow";
    sig.probe = probe;
    return sig;
  }
  if (probe && probe->r_star && *probe->r_star <= thr.r_min &&
      state.residual_l2 > thr.tol_converge) {
    sig.concentrating = true;
    sig.why = "r_star = " + std::to_string(*probe->r_star) + " <= r_min";
    sig.probe = probe;
    return sig;
  }
  return sig;
}

namespace {

// Orthonormal tangent frame at p (n = 2 only).
void tangent_frame(const std::vector<double>& p, std::vector<double>& e1,
                   std::vector<double>& e2) {
  int k = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(p[d]) < std::abs(p[k])) k = d;
  e1.assign(3, 0.0);
  e1[k] = 1.0;
  double dp = p[k];
  for (int d = 0; d < 3; ++d) e1[d] -= dp * p[d];
  double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  for (double& x : e1) x /= n1;
  e2 = {p[1] * e1[2] - p[2] * e1[1], p[2] * e1[0] - p[0] * e1[2],
        p[0] * e1[1] - p[1] * e1[0]};
}

struct FitSample {
  double z1, z2;   // chart coordinates (z2 = 0 on axisymmetric grids)
  double val;      // u + chart log factor
  double weight;   // chart area weight
};

} // namespace

BubbleFit fit_bubble(const SphereContext& ctx, const FlowState& state,
                     const std::vector<double>& p) {
  if (static_cast<int>(p.size()) != ctx.n() + 1)
    fail(Errc::DimensionMismatch, "fit center has wrong dimension");
  const bool axi = ctx.mode() == GridMode::Axisymmetric;
  const int n = ctx.n();
  const double fact = ctx.factorial_n1();

  std::vector<double> e1, e2;
  if (!axi) tangent_frame(p, e1, e2);

  // Transfer to the chart at p (projection from -p): z = x_perp / (1 + <x,p>),
  // u_tilde = u + log(2 / (1 + |z|^2)). Keep |z| <= 2, i.e. <x,p> >= -3/5.
  std::vector<FitSample> samples;
  std::vector<double> dots(ctx.node_count());
  dots_for_center(ctx, p, dots);
  for (std::size_t i = 0; i < ctx.node_count(); ++i) {
    double t = dots[i];
    if (t < -0.6 + 1e-12) continue;
    FitSample s;
    if (axi) {
      s.z1 = std::sqrt(std::max(0.0, (1.0 - t) / (1.0 + t)));
      s.z2 = 0.0;
    } else {
      double inv = 1.0 / (1.0 + t);
      double x1 = 0.0, x2 = 0.0;
      for (int d = 0; d < 3; ++d) {
        double xd = ctx.coordinate(d)[i];
        x1 += xd * e1[d];
        x2 += xd * e2[d];
      }
      s.z1 = x1 * inv;
      s.z2 = x2 * inv;
    }
    double z2 = s.z1 * s.z1 + s.z2 * s.z2;
    s.val = state.u_grid[i] + std::log(2.0 / (1.0 + z2));
    s.weight = ctx.weights()[i] * std::pow(0.5 * (1.0 + z2), n);
    samples.push_back(s);
  }
  if (samples.size() < 8) fail(Errc::FitDiverged, "too few chart samples");

  // Parameters: a = log lambda, (z01, z02), g = log(q_inf / (n-1)!).
  const int np = axi ? 2 : 4;
  auto model = [&](const double* prm, const FitSample& s, double* grad) {
    double a = prm[0];
    double z01 = axi ? 0.0 : prm[1];
    double z02 = axi ? 0.0 : prm[2];
    double g = prm[np - 1];
    double d1 = s.z1 - z01, d2 = s.z2 - z02;
    double l2 = std::exp(2.0 * a);
    double denom = 1.0 + l2 * (d1 * d1 + d2 * d2);
    double val = std::log(2.0) + a - std::log(denom) - g / n;
    if (grad) {
      grad[0] = 1.0 - 2.0 * l2 * (d1 * d1 + d2 * d2) / denom;
      if (!axi) {
        grad[1] = 2.0 * l2 * d1 / denom;
        grad[2] = 2.0 * l2 * d2 / denom;
      }
      grad[np - 1] = -1.0 / n;
    }
    return val;
  };
  auto misfit = [&](const double* prm) {
    double acc = 0.0;
    for (const auto& s : samples) {
      double r = s.val - model(prm, s, nullptr);
      acc += s.weight * r * r;
    }
    return acc;
  };

  // Initial guess from the chart maximum.
  double vmax = samples[0].val;
  double zm1 = samples[0].z1, zm2 = samples[0].z2;
  for (const auto& s : samples)
    if (s.val > vmax) {
      vmax = s.val;
      zm1 = s.z1;
      zm2 = s.z2;
    }
  std::vector<double> prm(np, 0.0);
  prm[0] = std::log(std::max(0.5, std::exp(vmax) / 2.0));
  if (!axi) {
    prm[1] = zm1;
    prm[2] = zm2;
  }
  prm[np - 1] = 0.0;

  const double f0 = misfit(prm.data());
  double fcur = f0;
  double mu = 1e-3;
  int iters = 0;
  std::vector<double> grad(np), jtj(static_cast<std::size_t>(np) * np);
  for (; iters < 200; ++iters) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(jtj.begin(), jtj.end(), 0.0);
    std::vector<double> dg(np);
    for (const auto& s : samples) {
      double m = model(prm.data(), s, dg.data());
      double r = s.val - m;
      for (int a = 0; a < np; ++a) {
        grad[a] += s.weight * r * dg[a];
        for (int b = 0; b < np; ++b)
          jtj[static_cast<std::size_t>(a) * np + b] += s.weight * dg[a] * dg[b];
      }
    }
    // Solve (JtJ + mu diag) delta = grad for the Gauss-Newton step.
    bool accepted = false;
    for (int trial = 0; trial < 12 && !accepted; ++trial) {
      std::vector<double> A(jtj);
      for (int a = 0; a < np; ++a)
        A[static_cast<std::size_t>(a) * np + a] +=
            mu * std::max(1e-12, jtj[static_cast<std::size_t>(a) * np + a]);
      std::vector<double> rhs(grad), delta(np, 0.0);
      // Gaussian elimination with partial pivoting.
      std::vector<int> piv(np);
      for (int i = 0; i < np; ++i) piv[i] = i;
      bool singular = false;
      for (int c = 0; c < np && !singular; ++c) {
        int pv = c;
        for (int k = c + 1; k < np; ++k)
          if (std::abs(A[static_cast<std::size_t>(k) * np + c]) >
              std::abs(A[static_cast<std::size_t>(pv) * np + c]))
            pv = k;
        if (std::abs(A[static_cast<std::size_t>(pv) * np + c]) < 1e-300) {
          singular = true;
          break;
        }
        if (pv != c) {
          for (int j = c; j < np; ++j)
            std::swap(A[static_cast<std::size_t>(pv) * np + j],
                      A[static_cast<std::size_t>(c) * np + j]);
          std::swap(rhs[pv], rhs[c]);
        }
        for (int k = c + 1; k < np; ++k) {
          double m = A[static_cast<std::size_t>(k) * np + c] /
                     A[static_cast<std::size_t>(c) * np + c];
          for (int j = c; j < np; ++j)
            A[static_cast<std::size_t>(k) * np + j] -=
                m * A[static_cast<std::size_t>(c) * np + j];
          rhs[k] -= m * rhs[c];
        }
      }
      if (singular) {
        mu *= 4.0;
        continue;
      }
      for (int c = np - 1; c >= 0; --c) {
        double acc = rhs[c];
        for (int j = c + 1; j < np; ++j)
          acc -= A[static_cast<std::size_t>(c) * np + j] * delta[j];
        delta[c] = acc / A[static_cast<std::size_t>(c) * np + c];
      }
      std::vector<double> trial_prm(prm);
      for (int a = 0; a < np; ++a) trial_prm[a] += delta[a];
      double ftrial = misfit(trial_prm.data());
      if (std::isfinite(ftrial) && ftrial < fcur) {
        double rel = (fcur - ftrial) / std::max(fcur, 1e-300);
        prm = trial_prm;
        fcur = ftrial;
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        if (rel < 1e-12) iters = 200; // converged
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) break;
  }

  if (!std::isfinite(fcur) || fcur > 10.0 * f0)
    fail(Errc::FitDiverged, "bubble fit misfit " + std::to_string(fcur) +
                                " vs initial " + std::to_string(f0));

  BubbleFit fit;
  fit.center = p;
  fit.lambda = std::exp(prm[0]);
  fit.z0.assign(n, 0.0);
  if (!axi) {
    fit.z0[0] = prm[1];
    fit.z0[1] = prm[2];
  }
  fit.q_inf = fact * std::exp(prm[np - 1]);
  fit.fit_residual = std::sqrt(fcur);
  fit.iterations = iters;
  return fit;
}

RunResult run(const SphereContext& ctx, const PaneitzMultiplier& mult,
              const CandidateF& f, const SpectralField& u0, const FlowParams& params,
              const RecordCallback& on_record) {
  return run_from(ctx, mult, f, make_state(ctx, mult, f, u0, params), params,
                  on_record);
}

RunResult run_from(const SphereContext& ctx, const PaneitzMultiplier& mult,
                   const CandidateF& f, FlowState initial, const FlowParams& params,
                   const RecordCallback& on_record) {
  FlowParams prm = params;
  if (prm.radii.empty()) prm.radii = default_radii();
  DetectorThresholds thr{prm.u_blow, prm.r_min, prm.tol_converge};

  RunResult result;
  FlowState state = std::move(initial);
  std::vector<double> last_theta(ctx.n() + 1, 0.0);

  auto make_record = [&](const FlowState& st,
                         const std::optional<double>& r_star) {
    DiagnosticsRecord rec;
    rec.step_index = st.step_index;
    rec.t = st.t;
    rec.dt = st.dt;
    rec.E = st.report.E;
    rec.E_f = st.report.E_f;
    rec.alpha = st.report.alpha;
    rec.residual_l2 = st.residual_l2;
    rec.max_u = st.max_u;
    rec.min_u = st.min_u;
    rec.volume_err = st.volume_err;
    if (prm.compute_theta) {
      try {
        last_theta = shadow_theta(ctx, st.u);
      } catch (const Error&) {
        // keep the previous theta; the balance solve can stall on extreme
        // states between scans
      }
    }
    rec.theta = last_theta;
    rec.r_star = r_star;
    return rec;
  };
  auto push = [&](const DiagnosticsRecord& rec) {
    result.trajectory.push_back(rec);
    if (on_record) on_record(rec);
  };

  std::optional<ConcentrationProbe> last_probe;
  push(make_record(state, std::nullopt));

  while (true) {
    if (state.t >= prm.t_max) {
      result.reason = {StopReason::Kind::TimedOut,
                       "t = " + std::to_string(state.t)};
      break;
    }
    try {
      state = step(ctx, mult, f, state, prm);
    } catch (const Error& e) {
      if (e.code() == Errc::ConformalFactorOverflow) {
        result.reason = {StopReason::Kind::Concentrated,
                         std::string("conformal factor overflow: ") + e.what()};
      } else if (e.code() == Errc::NumericFailure) {
        result.reason = {StopReason::Kind::NumericFailure, e.what()};
      } else {
        throw;
      }
      result.probe = last_probe;
      break;
    }

    const bool scan_due = prm.scan_every > 0 && state.step_index % prm.scan_every == 0;
    if (scan_due) last_probe = concentration_scan(ctx, state, prm.radii);

    const bool record_due =
        prm.record_every > 0 && state.step_index % prm.record_every == 0;
    if (record_due)
      push(make_record(state, scan_due && last_probe ? last_probe->r_star
                                                     : std::optional<double>()));

    StopSignal sig = detect(ctx, state, thr, last_probe);
    if (sig.concentrating) {
      result.reason = {StopReason::Kind::Concentrated, sig.why};
      result.probe = sig.probe;
      if (!result.probe) result.probe = concentration_scan(ctx, state, prm.radii);
      if (!record_due) push(make_record(state, result.probe->r_star));
      break;
    }
    if (state.residual_l2 <= prm.tol_converge) {
      result.reason = {StopReason::Kind::Converged,
                       "residual_l2 = " + std::to_string(state.residual_l2)};
      if (!record_due) push(make_record(state, std::nullopt));
      break;
    }
    if (state.t >= prm.t_max) {
      result.reason = {StopReason::Kind::TimedOut, "t = " + std::to_string(state.t)};
      if (!record_due) push(make_record(state, std::nullopt));
      break;
    }
  }

  result.final_state = std::move(state);
  if (result.reason.kind == StopReason::Kind::Concentrated && !result.probe)
    result.probe = last_probe;
  return result;
}

} // namespace qflow
