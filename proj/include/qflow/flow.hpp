#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qflow/conformal.hpp"

namespace qflow {

// State of the normalized negative-gradient flow 2 u_t = alpha f - Q.
// u is volume-normalized after every accepted step; the cached grids hold
// the synthesis of u and the Q-curvature of the current metric.
struct FlowState {
  double t = 0.0;
  double dt = 0.0;           // step size planned for the next step
  long long step_index = 0;
  int accept_streak = 0;     // accepted steps since the last halving/growth
  SpectralField u;
  EnergyReport report;
  double residual_l2 = 0.0;  // int |alpha f - Q|^2 dmu_g
  double max_u = 0.0;
  double min_u = 0.0;
  double volume_err = 0.0;
  GridField u_grid;
  GridField q_grid;
};

struct StopReason {
  enum class Kind { Converged, Concentrated, TimedOut, NumericFailure };
  Kind kind = Kind::TimedOut;
  std::string detail;
};

const char* stop_kind_name(StopReason::Kind k);

struct DiagnosticsRecord {
  long long step_index = 0;
  double t = 0.0, dt = 0.0;
  double E = 0.0, E_f = 0.0, alpha = 0.0;
  double residual_l2 = 0.0;
  double max_u = 0.0, min_u = 0.0, volume_err = 0.0;
  std::vector<double> theta;        // n+1 entries
  std::optional<double> r_star;     // present on scan steps
};

struct FlowParams {
  double dt0 = 1e-3;
  double dt_max = 0.1;
  double t_max = 200.0;
  double tol_converge = 1e-8;   // on residual_l2
  double u_blow = 6.0;
  double r_min = 0.05;
  int record_every = 1;
  int scan_every = 25;          // concentration scans, in accepted steps
  bool compute_theta = true;
  std::vector<double> radii;    // scan radii; default_radii() when empty

  // Step-control constants: dissipation slack per accepted step, halvings
  // before NumericFailure, accepted steps before growing dt by the factor.
  double ef_slack = 1e-10;
  int max_halvings = 40;
  int growth_every = 10;
  double growth_factor = 1.2;

  // Accuracy cap: the stabilized splitting damps the increment of degree-l
  // modes by 1/(1 + dt (c/2) mu_l), which time-dilates the slow bubble drift
  // once dt c mu_l is large. Attempted steps are clamped to
  //   dt <= dilation_cap / ((c/2) mu_{l_ref})
  // so that the driving low modes stay within a bounded dilation.
  double dilation_cap = 1.0;
  int dilation_l_ref = 2;
};

std::vector<double> default_radii();

// Fresh state for initial data u0 (throws InitialDataRejected when u0 is not
// in C_f^inf).
FlowState make_state(const SphereContext& ctx, const PaneitzMultiplier& mult,
                     const CandidateF& f, const SpectralField& u0,
                     const FlowParams& params);

// Rebuilds a state from persisted stepper data (snapshot resume); derived
// diagnostics are recomputed from the coefficients.
FlowState resume_state(const SphereContext& ctx, const PaneitzMultiplier& mult,
                       const CandidateF& f, const SpectralField& u, double t,
                       double dt, long long step_index, int accept_streak);

// One accepted IMEX step: the stiff piece (c/2) P_n u with frozen
// c = max e^{-nu} is implicit (diagonal in coefficient space), the rest
// explicit; alpha is recomputed at the start of every attempt. Steps that
// raise E_f by more than ef_slack are retried at dt/2, up to max_halvings
// (then NumericFailure). The returned state is volume-renormalized.
FlowState step(const SphereContext& ctx, const PaneitzMultiplier& mult,
               const CandidateF& f, const FlowState& state, const FlowParams& params);

// Homotopy H_1(s, u0) = (1/n) log((1-s) e^{n u0} + s) between u0 and 0.
SpectralField interpolate_initial(const SphereContext& ctx, const CandidateF& f,
                                  const SpectralField& u0, double s);

} // namespace qflow
