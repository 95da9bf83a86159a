#pragma once

#include <array>
#include <string>
#include <vector>

#include "qflow/sphere.hpp"

namespace qflow {

// Builtin curvature-candidate families. All have smooth ambient extensions
// to R^{n+1} with closed-form gradient and Hessian:
//   Constant  f = c
//   Affine    f = a + b x_axis                     (axis 1-based, <= n+1)
//   Bumps     f = c0 + sum_i amp_i exp(sharp_i (<x, p_i> - 1))
struct BumpTerm {
  double amp = 0.0;
  double sharp = 1.0;
  std::vector<double> center; // unit vector, n+1 entries
};

struct FSpec {
  enum class Family { Constant, Affine, Bumps };
  Family family = Family::Constant;
  double c = 1.0;        // Constant value / Affine offset / Bumps c0
  double b = 0.0;        // Affine slope
  int axis = 0;          // Affine axis, 1-based
  std::vector<BumpTerm> bumps;

  std::string describe() const;
};

// A candidate f bound to a grid: cached node samples, cached extrema, and
// (for builtin families) ambient derivative callbacks for the Morse module.
class CandidateF {
public:
  // Loader entry point; rejects candidates with nonpositive spherical mean
  // (NonpositiveMeanF) and families incompatible with an axisymmetric grid
  // (NotAxisymmetric).
  static CandidateF make(const SphereContext& ctx, const FSpec& spec);

  // Grid-only candidate (no analytic derivatives). Mean must still be > 0.
  static CandidateF from_grid(const SphereContext& ctx, GridField values,
                              std::string label = "grid");

  const GridField& values() const { return values_; }
  double mean() const { return mean_; }
  double min_value() const { return min_; }
  double max_value() const { return max_; }
  bool sign_changing() const { return min_ < 0.0 && max_ > 0.0; }
  bool has_analytic_derivatives() const { return analytic_; }
  const FSpec& spec() const { return spec_; }
  const std::string& label() const { return label_; }

  // Ambient extension and derivatives at a unit vector x (size n+1).
  double value_at(const std::vector<double>& x) const;
  std::vector<double> ambient_gradient(const std::vector<double>& x) const;
  // Row-major (n+1) x (n+1) ambient Hessian.
  std::vector<double> ambient_hessian(const std::vector<double>& x) const;

  int ambient_dim() const { return dim_; }

private:
  FSpec spec_;
  std::string label_;
  GridField values_;
  double mean_ = 0.0, min_ = 0.0, max_ = 0.0;
  bool analytic_ = false;
  int dim_ = 0;
};

} // namespace qflow
