#pragma once

#include <vector>

#include "qflow/candidate.hpp"
#include "qflow/sphere.hpp"

namespace qflow {

// Conformal transformations of S^n in the dilation family
//   phi_{q,eps} = psi^q . delta_eps . pi^q,
// where pi^q projects stereographically from q (q at infinity, -q at the
// chart origin) and delta_eps dilates by eps. The conformal stretch has the
// closed form
//   e^{u_{q,eps}}(x) = 2 eps / A(x),  A = (1 - <x,q>) + eps^2 (1 + <x,q>),
// verified against finite-difference Jacobians in the tests. eps = 1 is the
// identity; as eps -> 0 the pullback volume concentrates at q while the map
// itself converges to the constant -q.
//
// Ball coordinates: b = (1-eps)/(1+eps) q identifies (q, eps) with a point
// of the open unit ball B^{n+1}; b = 0 is the identity and (q, eps) and
// (-q, 1/eps) coincide. The inverse map carries ball point -b.
struct MobiusParam {
  std::vector<double> q; // unit vector, n+1 entries
  double eps = 1.0;

  static MobiusParam identity(int dim);
  static MobiusParam make(std::vector<double> q, double eps);
  static MobiusParam from_ball(const std::vector<double>& b);
  std::vector<double> ball_point() const;
  MobiusParam inverse() const;
  bool is_identity(double tol = 0.0) const;
};

// phi_{q,eps}(x) for a unit vector x.
std::vector<double> mobius_apply(const MobiusParam& p, const std::vector<double>& x);

// u_{q,eps}(x) = log(2 eps / A(x)).
double mobius_log_factor(const MobiusParam& p, const std::vector<double>& x);

// Conformal factor of phi_{q,eps}^*(g_{S^n}) as a spectral field.
// Axisymmetric contexts require q on the polar axis.
SpectralField bubble(const SphereContext& ctx, const MobiusParam& p);

// v with e^{2v} g = phi_p^*(e^{2u} g): v = u . phi_p + u_{q,eps}, resampled
// at mapped quadrature nodes and re-analyzed.
SpectralField pullback(const SphereContext& ctx, const SpectralField& u,
                       const MobiusParam& p);

// mean(x e^{nu}) component-wise; the Moebius-balancing residual.
std::vector<double> center_of_mass(const SphereContext& ctx, const SpectralField& u);

struct NormalizedState {
  SpectralField v;            // balanced conformal factor
  MobiusParam phi;            // the normalizing map
  std::vector<double> theta;  // mean of phi over S^n (the shadow point)
  double com_residual = 0.0;  // |mean(x dmu_h)| at the solution
  int iterations = 0;         // Newton iterations used by the balance solve
};

// Finds phi with |center_of_mass(pullback(u, phi))| <= 1e-8 by a damped
// Newton iteration on the ball point (finite-difference Jacobian, step 1e-6).
// Throws NoConvergence after 60 iterations without reaching the tolerance.
NormalizedState normalize_com(const SphereContext& ctx, const SpectralField& u);

// theta of the normalizing map only (skips the pullback resampling).
std::vector<double> shadow_theta(const SphereContext& ctx, const SpectralField& u);

// E_f[u_{q,eps}] evaluated without truncating the bubble to the band limit:
// E vanishes by Moebius invariance and the f-mass term is computed by the
// change of variables mean(f e^{n u_{q,eps}}) = mean(f . phi_{q,1/eps}),
// whose integrand stays quadrature-resolvable for arbitrarily small eps.
double bubble_energy_f(const SphereContext& ctx, const CandidateF& f,
                       const MobiusParam& p);

namespace mobius_detail {
// mean(phi_{from_ball(-b)}(x) e^{nu}) for the balance solve; `we` holds
// w_i e^{n u_i} / omega_n.
std::vector<double> balance_residual(const SphereContext& ctx,
                                     const std::vector<double>& we,
                                     const std::vector<double>& ball);
struct BalanceSolution {
  std::vector<double> ball;
  int iterations = 0;
};
BalanceSolution solve_balance(const SphereContext& ctx,
                              const std::vector<double>& we);
}

} // namespace qflow
