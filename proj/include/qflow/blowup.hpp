#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qflow/flow.hpp"

namespace qflow {

// Concentration diagnostics. Ball masses are sums of w_i e^{n u_i} |Q_i|
// over quadrature nodes inside the geodesic ball (hard indicator, so radii
// are resolved to one grid cell); the sup over centers is taken over a
// coarse node subset and refined around the winner.
struct ConcentrationProbe {
  std::vector<double> p_star;            // argmax center
  std::optional<double> r_star;          // radius reaching the quarter threshold
  std::optional<double> r_star_half;     // half-threshold radius, logged alongside
  std::vector<std::pair<double, double>> mass_at_r; // (r, sup_p ball mass)
  double threshold_quarter = 0.0;        // (1/4)(n-1)! omega_n
  double threshold_half = 0.0;           // (1/2)(n-1)! omega_n
};

// int_{S^n} |alpha f - Q|^2 dmu_g for the state's own alpha.
double residual_l2(const SphereContext& ctx, const CandidateF& f,
                   const FlowState& state);

ConcentrationProbe concentration_scan(const SphereContext& ctx, const FlowState& state,
                                      const std::vector<double>& radii);

struct DetectorThresholds {
  double u_blow = 6.0;
  double r_min = 0.05;
  double tol_converge = 1e-8;
};

struct StopSignal {
  bool concentrating = false;
  std::string why;
  std::optional<ConcentrationProbe> probe;
};

// Fires when max u >= u_blow, or when the probe's r_star <= r_min while the
// residual has not dropped below tol_converge.
StopSignal detect(const SphereContext& ctx, const FlowState& state,
                  const DetectorThresholds& thr,
                  const std::optional<ConcentrationProbe>& probe);

// Least-squares fit of the flat bubble profile
//   log(2 lambda / (1 + |lambda (z - z0)|^2)) - (1/n) log(q_inf / (n-1)!)
// to the state transferred to the stereographic chart at p, over |z| <= 2.
struct BubbleFit {
  std::vector<double> center; // p
  double lambda = 0.0;
  std::vector<double> z0;     // chart offset (length n; 0 on axisymmetric grids)
  double q_inf = 0.0;
  double fit_residual = 0.0;  // sqrt of the chart-L2 misfit
  int iterations = 0;
};

BubbleFit fit_bubble(const SphereContext& ctx, const FlowState& state,
                     const std::vector<double>& p);

// Full trajectory driver: steps until convergence, concentration, timeout or
// numeric failure. Records every record_every-th accepted step plus the
// initial and final states; scans every scan_every-th step.
struct RunResult {
  std::vector<DiagnosticsRecord> trajectory;
  FlowState final_state;
  StopReason reason;
  std::optional<ConcentrationProbe> probe;
};

using RecordCallback = std::function<void(const DiagnosticsRecord&)>;

RunResult run(const SphereContext& ctx, const PaneitzMultiplier& mult,
              const CandidateF& f, const SpectralField& u0, const FlowParams& params,
              const RecordCallback& on_record = {});

// Same driver starting from an existing state (snapshot resume). The given
// state is recorded as the first trajectory row.
RunResult run_from(const SphereContext& ctx, const PaneitzMultiplier& mult,
                   const CandidateF& f, FlowState initial, const FlowParams& params,
                   const RecordCallback& on_record = {});

} // namespace qflow
