#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qflow/candidate.hpp"

namespace qflow {

struct CriticalPoint {
  std::vector<double> location; // unit vector
  double f_value = 0.0;
  double grad_norm = 0.0;
  double laplacian = 0.0; // Delta_{S^n} f
  int morse_index = 0;    // negative Hessian eigenvalues
  std::vector<double> hessian_eigs;
  bool degenerate = false; // some eigenvalue within 1e-10 of zero
};

struct CriticalPointResult {
  std::vector<CriticalPoint> points;  // critical points with f > 0
  std::vector<std::string> warnings;  // hypothesis violations, non-fatal
};

// Finds the critical points of f in {f > 0}, classified by Morse index and
// the sign of Delta f. Builtin families use analytic ambient derivatives;
// grid-only candidates fall back to finite differences of the spectral
// interpolant (n = 2 only; NoAnalyticDerivatives otherwise). Axisymmetric
// candidates have isolated critical points only at the poles; interior
// critical latitudes are reported as hypothesis violations.
CriticalPointResult find_critical_points(const SphereContext& ctx,
                                         const CandidateF& f);

// gamma_i = #{q : f(q) > 0, grad f(q) = 0, Delta f(q) < 0, ind(f,q) = n - i}.
std::vector<long long> gamma_counts(const std::vector<CriticalPoint>& points, int n);

// The integer system gamma_0 = 1 + k_0, gamma_i = k_{i-1} + k_i, k_n = 0.
// Solvable iff the forward recurrence stays nonnegative and ends at zero;
// when the system has no nonnegative solution the existence theorem applies.
struct KSolve {
  std::vector<long long> gamma;
  std::optional<std::vector<long long>> k_seq;
  bool solvable = false;
};

KSolve solve_k(const std::vector<long long>& gamma, int n);

// Coefficient-wise identity sum s^j gamma_j = 1 + (1+s) sum s^j k_j.
bool morse_polynomial_check(const std::vector<long long>& gamma,
                            const std::vector<long long>& k_seq);

struct BetaLevels {
  std::vector<double> betas; // -(n-1)! log f(q_i), ascending
  bool distinct = true;      // no two levels within 1e-9
};

BetaLevels beta_levels(const std::vector<CriticalPoint>& points, double fact_n1);

struct HypothesisCheck {
  std::string name;
  bool pass = true;
  bool structural = true; // failing structural checks voids the criterion
  std::string detail;
};

struct CriterionVerdict {
  std::vector<CriticalPoint> points;
  std::vector<long long> gamma;
  std::optional<std::vector<long long>> k_seq;
  bool solvable = false;
  bool guarantees_existence = false; // = !solvable
  std::vector<HypothesisCheck> hypothesis_report;
  std::string headline; // "yes" | "no" | "hypotheses-violated"
  BetaLevels levels;
};

CriterionVerdict criterion_verdict(const SphereContext& ctx, const CandidateF& f);

} // namespace qflow
