#pragma once

#include "qflow/candidate.hpp"
#include "qflow/sphere.hpp"

namespace qflow {

// The order-n Paneitz operator of the round S^n acts on a degree-l basis
// function as multiplication by
//   mu_l = prod_{k=0}^{(n-2)/2} (lambda_l + k(n-k-1)),  lambda_l = l(l+n-1).
// mu_0 = 0 (constants are annihilated) and mu_l is strictly increasing.
struct PaneitzMultiplier {
  int n = 0;
  int L = 0;
  std::vector<double> mu;          // per degree l = 0..L
  std::vector<double> mu_by_coeff; // per coefficient index of the context
};

PaneitzMultiplier make_multiplier(const SphereContext& ctx);

SpectralField paneitz_apply(const SphereContext& ctx, const PaneitzMultiplier& mult,
                            const SpectralField& s);

// Q-curvature of g = e^{2u} g_{S^n}: Q = e^{-nu} (P_n u + (n-1)!), evaluated
// at the quadrature nodes. Throws ConformalFactorOverflow when
// n * max|u| > 300 (blow-up has outrun double precision).
GridField q_curvature(const SphereContext& ctx, const PaneitzMultiplier& mult,
                      const SpectralField& u);

// Volume-normalizing factor alpha = (n-1)! / mean(f e^{nu}).
// Throws NonpositiveFMass when the f-mass is <= 0.
double alpha_factor(const SphereContext& ctx, const CandidateF& f,
                    const SpectralField& u);

// E[u] = (n/2) mean(u P_n u + 2 (n-1)! u), computed in coefficient space.
double energy(const SphereContext& ctx, const PaneitzMultiplier& mult,
              const SpectralField& u);

struct EnergyReport {
  double E = 0.0;
  double E_f = 0.0;
  double alpha = 0.0;
  double mean_fe = 0.0;     // mean(f e^{nu})
  double volume_mean = 0.0; // mean(e^{nu})
};

// E_f = E - (n-1)! log mean(f e^{nu}), plus the quantities it is made of.
EnergyReport energy_f(const SphereContext& ctx, const PaneitzMultiplier& mult,
                      const CandidateF& f, const SpectralField& u);

// u - (1/n) log mean(e^{nu}); afterwards the flow metric has unit mean volume.
SpectralField renormalize_volume(const SphereContext& ctx, const SpectralField& u);

double volume_mean(const SphereContext& ctx, const SpectralField& u);

// Converts a stationary state of the normalized flow (Q = alpha f) into a
// solution of the prescribed-curvature equation (Q = f): u + (1/n) log alpha.
SpectralField finalize_solution(const SphereContext& ctx, const SpectralField& u,
                                double alpha_value);

// Membership in C_f^inf: unit volume (within 1e-10) and positive f-mass.
bool in_class_cf(const SphereContext& ctx, const CandidateF& f,
                 const SpectralField& u);

namespace guards {
inline constexpr double overflow_numax = 300.0; // reject when n*max|u| exceeds this
inline constexpr double volume_tol = 1e-10;
}

} // namespace qflow
