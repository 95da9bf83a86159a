#include <cmath>
#include <cstddef>
#include <string>

#include "qflow/errors.hpp"
#include "qflow/kernels.hpp"
#include "qflow/mobius.hpp"

namespace qflow {

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_dim(const SphereContext& ctx, const MobiusParam& p) {
  if (static_cast<int>(p.q.size()) != ctx.n() + 1)
    fail(Errc::DimensionMismatch, "Moebius parameter has wrong ambient dimension");
}

bool on_axis(const SphereContext& ctx, const MobiusParam& p) {
  for (int d = 0; d < ctx.n(); ++d)
    if (std::abs(p.q[d]) > 1e-12) return false;
  return true;
}

} // namespace

MobiusParam MobiusParam::identity(int dim) {
  MobiusParam p;
  p.q.assign(dim, 0.0);
  p.q[dim - 1] = 1.0;
  p.eps = 1.0;
  return p;
}

MobiusParam MobiusParam::make(std::vector<double> q, double eps) {
  if (!(eps > 0.0)) fail(Errc::PreconditionViolated, "Moebius scale eps must be > 0");
  double n = norm(q);
  if (n == 0.0) fail(Errc::PreconditionViolated, "Moebius center must be nonzero");
  for (double& x : q) x /= n;
  MobiusParam p;
  p.q = std::move(q);
  p.eps = eps;
  return p;
}

MobiusParam MobiusParam::from_ball(const std::vector<double>& b) {
  double r = norm(b);
  if (r >= 1.0) fail(Errc::PreconditionViolated, "ball point must be interior");
  if (r == 0.0) return identity(static_cast<int>(b.size()));
  std::vector<double> q(b);
  for (double& x : q) x /= r;
  MobiusParam p;
  p.q = std::move(q);
  p.eps = (1.0 - r) / (1.0 + r);
  return p;
}

std::vector<double> MobiusParam::ball_point() const {
  std::vector<double> b(q);
  double r = (1.0 - eps) / (1.0 + eps);
  for (double& x : b) x *= r;
  return b;
}

MobiusParam MobiusParam::inverse() const {
  MobiusParam p(*this);
  p.eps = 1.0 / eps;
  return p;
}

bool MobiusParam::is_identity(double tol) const { return std::abs(eps - 1.0) <= tol; }

std::vector<double> mobius_apply(const MobiusParam& p, const std::vector<double>& x) {
  const std::size_t d = x.size();
  double t = 0.0;
  for (std::size_t i = 0; i < d; ++i) t += x[i] * p.q[i];
  const double e2 = p.eps * p.eps;
  const double A = (1.0 - t) + e2 * (1.0 + t);
  const double cq = (e2 * (1.0 + t) - (1.0 - t)) / A;
  const double cp = 2.0 * p.eps / A;
  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) y[i] = cq * p.q[i] + cp * (x[i] - t * p.q[i]);
  return y;
}

double mobius_log_factor(const MobiusParam& p, const std::vector<double>& x) {
  double t = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) t += x[i] * p.q[i];
  const double A = (1.0 - t) + p.eps * p.eps * (1.0 + t);
  return std::log(2.0 * p.eps) - std::log(A);
}

namespace {

// <x_i, q> at every node. Axisymmetric grids require q = +-pole.
std::vector<double> node_dots(const SphereContext& ctx, const MobiusParam& p) {
  const std::size_t nn = ctx.node_count();
  std::vector<double> t(nn);
  if (ctx.mode() == GridMode::Axisymmetric) {
    if (!on_axis(ctx, p))
      fail(Errc::NotAxisymmetric,
           "Moebius center must be a pole on an axisymmetric grid");
    double s = p.q[ctx.n()];
    kernels::active().scale(s, ctx.coordinate(ctx.n()), t.data(), nn);
  } else {
    kernels::active().lincomb3(p.q[0], ctx.coordinate(0), p.q[1], ctx.coordinate(1),
                               p.q[2], ctx.coordinate(2), t.data(), nn);
  }
  return t;
}

} // namespace

SpectralField bubble(const SphereContext& ctx, const MobiusParam& p) {
  check_dim(ctx, p);
  std::vector<double> t = node_dots(ctx, p);
  GridField g(ctx.node_count());
  const double e2 = p.eps * p.eps;
  const double l2e = std::log(2.0 * p.eps);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = l2e - std::log((1.0 - t[i]) + e2 * (1.0 + t[i]));
  return ctx.analyze(g);
}

SpectralField pullback(const SphereContext& ctx, const SpectralField& u,
                       const MobiusParam& p) {
  check_dim(ctx, p);
  ctx.check_spectral(u);
  std::vector<double> t = node_dots(ctx, p);
  const double e2 = p.eps * p.eps;
  const double l2e = std::log(2.0 * p.eps);
  GridField g(ctx.node_count());

  if (ctx.mode() == GridMode::Axisymmetric) {
    const double s = p.q[ctx.n()];
    for (std::size_t i = 0; i < g.size(); ++i) {
      double A = (1.0 - t[i]) + e2 * (1.0 + t[i]);
      double cq = (e2 * (1.0 + t[i]) - (1.0 - t[i])) / A;
      g[i] = ctx.evaluate_axi(u, s * cq) + l2e - std::log(A);
    }
    return ctx.analyze(g);
  }

  std::array<double, 3> y;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double A = (1.0 - t[i]) + e2 * (1.0 + t[i]);
    double cq = (e2 * (1.0 + t[i]) - (1.0 - t[i])) / A;
    double cp = 2.0 * p.eps / A;
    for (int d = 0; d < 3; ++d) {
      double xd = ctx.coordinate(d)[i];
      y[d] = cq * p.q[d] + cp * (xd - t[i] * p.q[d]);
    }
    g[i] = ctx.evaluate(u, y) + l2e - std::log(A);
  }
  return ctx.analyze(g);
}

std::vector<double> center_of_mass(const SphereContext& ctx, const SpectralField& u) {
  const auto& K = kernels::active();
  GridField ug = ctx.synthesize(u);
  GridField e(ctx.node_count());
  K.exp_scale(static_cast<double>(ctx.n()), ug.data(), e.data(), e.size());
  std::vector<double> com(ctx.n() + 1, 0.0);
  if (ctx.mode() == GridMode::Axisymmetric) {
    com[ctx.n()] = K.dot3(ctx.weights().data(), ctx.coordinate(ctx.n()), e.data(),
                          e.size()) /
                   ctx.omega_n();
  } else {
    for (int d = 0; d < 3; ++d)
      com[d] = K.dot3(ctx.weights().data(), ctx.coordinate(d), e.data(), e.size()) /
               ctx.omega_n();
  }
  return com;
}

namespace mobius_detail {

std::vector<double> balance_residual(const SphereContext& ctx,
                                     const std::vector<double>& we,
                                     const std::vector<double>& ball) {
  const int dim = ctx.n() + 1;
  std::vector<double> r(dim, 0.0);
  double br = norm(ball);
  if (br < 1e-15) {
    // Identity map: plain weighted average of the nodes.
    if (ctx.mode() == GridMode::Axisymmetric) {
      r[dim - 1] =
          kernels::active().dot(we.data(), ctx.coordinate(ctx.n()), we.size());
    } else {
      for (int d = 0; d < dim; ++d)
        r[d] = kernels::active().dot(we.data(), ctx.coordinate(d), we.size());
    }
    return r;
  }
  std::vector<double> nb(ball);
  for (double& x : nb) x = -x;
  MobiusParam p = MobiusParam::from_ball(nb);
  std::vector<double> t = node_dots(ctx, p);
  const double e2 = p.eps * p.eps;
  if (ctx.mode() == GridMode::Axisymmetric) {
    const double s = p.q[ctx.n()];
    double acc = 0.0;
    for (std::size_t i = 0; i < we.size(); ++i) {
      double A = (1.0 - t[i]) + e2 * (1.0 + t[i]);
      double cq = (e2 * (1.0 + t[i]) - (1.0 - t[i])) / A;
      acc += we[i] * s * cq;
    }
    r[dim - 1] = acc;
    return r;
  }
  for (std::size_t i = 0; i < we.size(); ++i) {
    double A = (1.0 - t[i]) + e2 * (1.0 + t[i]);
    double cq = (e2 * (1.0 + t[i]) - (1.0 - t[i])) / A;
    double cp = 2.0 * p.eps / A;
    for (int d = 0; d < 3; ++d)
      r[d] += we[i] * (cq * p.q[d] + cp * (ctx.coordinate(d)[i] - t[i] * p.q[d]));
  }
  return r;
}

namespace {

double clamp_interior(std::vector<double>& b) {
  double r = norm(b);
  const double rmax = 1.0 - 1e-9;
  if (r > rmax) {
    for (double& x : b) x *= rmax / r;
    r = rmax;
  }
  return r;
}

// Golden-section pre-solve along -com for strongly concentrated states.
std::vector<double> presolve_direction(const SphereContext& ctx,
                                       const std::vector<double>& we,
                                       const std::vector<double>& r0) {
  const int dim = ctx.n() + 1;
  std::vector<double> dir(r0);
  double rn = norm(dir);
  for (double& x : dir) x = -x / rn;
  auto resid_at = [&](double s) {
    std::vector<double> b(dim);
    for (int d = 0; d < dim; ++d) b[d] = s * dir[d];
    return norm(balance_residual(ctx, we, b));
  };
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = 0.999;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = resid_at(x1), f2 = resid_at(x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = resid_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = resid_at(x2);
    }
  }
  double s = 0.5 * (a + b);
  std::vector<double> out(dim);
  for (int d = 0; d < dim; ++d) out[d] = s * dir[d];
  return out;
}

} // namespace

BalanceSolution solve_balance(const SphereContext& ctx,
                              const std::vector<double>& we) {
  const int dim = ctx.n() + 1;
  const bool axi = ctx.mode() == GridMode::Axisymmetric;
  const int nvar = axi ? 1 : dim;
  const double tol = 1e-9;
  const double fd_step = 1e-6;

  auto project = [&](const std::vector<double>& b) {
    return axi ? std::vector<double>{b[dim - 1]} : b;
  };
  auto embed = [&](const std::vector<double>& v) {
    std::vector<double> b(dim, 0.0);
    if (axi)
      b[dim - 1] = v[0];
    else
      b = v;
    return b;
  };

  std::vector<double> ball(dim, 0.0);
  std::vector<double> r = balance_residual(ctx, we, ball);
  double rn = norm(r);
  if (rn > 0.3) {
    ball = presolve_direction(ctx, we, r);
    r = balance_residual(ctx, we, ball);
    rn = norm(r);
  }

  int used = 0;
  for (int it = 0; it < 60 && rn > tol; ++it) {
    used = it + 1;
    // Forward-difference Jacobian in the free ball coordinates.
    std::vector<double> v = project(ball);
    std::vector<double> jac(static_cast<std::size_t>(nvar) * nvar);
    for (int c = 0; c < nvar; ++c) {
      std::vector<double> vp = v;
      vp[c] += fd_step;
      std::vector<double> bp = embed(vp);
      clamp_interior(bp);
      std::vector<double> rp = balance_residual(ctx, we, bp);
      std::vector<double> rpp = axi ? std::vector<double>{rp[dim - 1]} : rp;
      std::vector<double> rr = axi ? std::vector<double>{r[dim - 1]} : r;
      for (int rix = 0; rix < nvar; ++rix)
        jac[static_cast<std::size_t>(rix) * nvar + c] = (rpp[rix] - rr[rix]) / fd_step;
    }
    // Solve J d = -r (Gaussian elimination, nvar <= dim).
    std::vector<double> rhs = axi ? std::vector<double>{-r[dim - 1]} : r;
    if (!axi)
      for (double& x : rhs) x = -x;
    for (int c = 0; c < nvar; ++c) {
      int piv = c;
      for (int k = c + 1; k < nvar; ++k)
        if (std::abs(jac[static_cast<std::size_t>(k) * nvar + c]) >
            std::abs(jac[static_cast<std::size_t>(piv) * nvar + c]))
          piv = k;
      if (std::abs(jac[static_cast<std::size_t>(piv) * nvar + c]) < 1e-300)
        fail(Errc::NoConvergence, "singular balance Jacobian");
      if (piv != c) {
        for (int k = c; k < nvar; ++k)
          std::swap(jac[static_cast<std::size_t>(piv) * nvar + k],
                    jac[static_cast<std::size_t>(c) * nvar + k]);
        std::swap(rhs[piv], rhs[c]);
      }
      for (int k = c + 1; k < nvar; ++k) {
        double m = jac[static_cast<std::size_t>(k) * nvar + c] /
                   jac[static_cast<std::size_t>(c) * nvar + c];
        for (int j = c; j < nvar; ++j)
          jac[static_cast<std::size_t>(k) * nvar + j] -=
              m * jac[static_cast<std::size_t>(c) * nvar + j];
        rhs[k] -= m * rhs[c];
      }
    }
    std::vector<double> d(nvar);
    for (int c = nvar - 1; c >= 0; --c) {
      double acc = rhs[c];
      for (int j = c + 1; j < nvar; ++j)
        acc -= jac[static_cast<std::size_t>(c) * nvar + j] * d[j];
      d[c] = acc / jac[static_cast<std::size_t>(c) * nvar + c];
    }
    // Backtracking: halve the step until |R| decreases.
    double lam = 1.0;
    std::vector<double> best_ball = ball;
    std::vector<double> best_r = r;
    double best_rn = rn;
    for (int bt = 0; bt < 30; ++bt) {
      std::vector<double> vt = v;
      for (int c = 0; c < nvar; ++c) vt[c] += lam * d[c];
      std::vector<double> bt_ball = embed(vt);
      clamp_interior(bt_ball);
      std::vector<double> rt = balance_residual(ctx, we, bt_ball);
      double rtn = norm(rt);
      if (rtn < best_rn) {
        best_ball = bt_ball;
        best_r = rt;
        best_rn = rtn;
        break;
      }
      lam *= 0.5;
    }
    if (best_rn >= rn) break; // stalled
    ball = best_ball;
    r = best_r;
    rn = best_rn;
  }

  if (rn > 1e-8)
    fail(Errc::NoConvergence,
         "center-of-mass balance stalled at |com| = " + std::to_string(rn));
  return {ball, used};
}

} // namespace mobius_detail

namespace {

std::vector<double> exp_weights(const SphereContext& ctx, const SpectralField& u) {
  const auto& K = kernels::active();
  GridField ug = ctx.synthesize(u);
  std::vector<double> we(ctx.node_count());
  K.exp_scale(static_cast<double>(ctx.n()), ug.data(), we.data(), we.size());
  for (std::size_t i = 0; i < we.size(); ++i)
    we[i] *= ctx.weights()[i] / ctx.omega_n();
  return we;
}

std::vector<double> theta_of(const SphereContext& ctx, const MobiusParam& p) {
  const int dim = ctx.n() + 1;
  std::vector<double> th(dim, 0.0);
  std::vector<double> t = node_dots(ctx, p);
  const double e2 = p.eps * p.eps;
  const double wnorm = 1.0 / ctx.omega_n();
  if (ctx.mode() == GridMode::Axisymmetric) {
    const double s = p.q[ctx.n()];
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      double A = (1.0 - t[i]) + e2 * (1.0 + t[i]);
      double cq = (e2 * (1.0 + t[i]) - (1.0 - t[i])) / A;
      acc += ctx.weights()[i] * wnorm * s * cq;
    }
    th[dim - 1] = acc;
    return th;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    double A = (1.0 - t[i]) + e2 * (1.0 + t[i]);
    double cq = (e2 * (1.0 + t[i]) - (1.0 - t[i])) / A;
    double cp = 2.0 * p.eps / A;
    double wi = ctx.weights()[i] * wnorm;
    for (int d = 0; d < 3; ++d)
      th[d] += wi * (cq * p.q[d] + cp * (ctx.coordinate(d)[i] - t[i] * p.q[d]));
  }
  return th;
}

} // namespace

NormalizedState normalize_com(const SphereContext& ctx, const SpectralField& u) {
  std::vector<double> we = exp_weights(ctx, u);
  mobius_detail::BalanceSolution sol = mobius_detail::solve_balance(ctx, we);
  NormalizedState st;
  st.phi = MobiusParam::from_ball(sol.ball);
  if (static_cast<int>(st.phi.q.size()) != ctx.n() + 1)
    st.phi = MobiusParam::identity(ctx.n() + 1);
  st.v = pullback(ctx, u, st.phi);
  st.theta = theta_of(ctx, st.phi);
  st.com_residual = norm(mobius_detail::balance_residual(ctx, we, sol.ball));
  st.iterations = sol.iterations;
  return st;
}

std::vector<double> shadow_theta(const SphereContext& ctx, const SpectralField& u) {
  std::vector<double> we = exp_weights(ctx, u);
  MobiusParam p = MobiusParam::from_ball(mobius_detail::solve_balance(ctx, we).ball);
  if (static_cast<int>(p.q.size()) != ctx.n() + 1) p = MobiusParam::identity(ctx.n() + 1);
  return theta_of(ctx, p);
}

double bubble_energy_f(const SphereContext& ctx, const CandidateF& f,
                       const MobiusParam& p) {
  check_dim(ctx, p);
  MobiusParam inv = p.inverse();
  std::vector<double> t = node_dots(ctx, inv);
  const double e2 = inv.eps * inv.eps;
  double acc = 0.0;
  std::vector<double> y(ctx.n() + 1, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double A = (1.0 - t[i]) + e2 * (1.0 + t[i]);
    double cq = (e2 * (1.0 + t[i]) - (1.0 - t[i])) / A;
    double cp = 2.0 * inv.eps / A;
    if (ctx.mode() == GridMode::Axisymmetric) {
      y.assign(ctx.n() + 1, 0.0);
      y[ctx.n()] = inv.q[ctx.n()] * cq;
    } else {
      for (int d = 0; d < 3; ++d)
        y[d] = cq * inv.q[d] + cp * (ctx.coordinate(d)[i] - t[i] * inv.q[d]);
    }
    acc += ctx.weights()[i] * f.value_at(y);
  }
  double mean_fe = acc / ctx.omega_n();
  if (mean_fe <= 0.0)
    fail(Errc::NonpositiveFMass, "bubble f-mass is nonpositive");
  return -ctx.factorial_n1() * std::log(mean_fe);
}

} // namespace qflow
