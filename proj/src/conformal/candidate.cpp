#include <cmath>
#include <sstream>

#include "qflow/candidate.hpp"
#include "qflow/errors.hpp"
#include "qflow/kernels.hpp"

namespace qflow {

std::string FSpec::describe() const {
  std::ostringstream os;
  switch (family) {
    case Family::Constant:
      os << "constant:" << c;
      break;
    case Family::Affine:
      os << "affine:" << c << "," << b << "," << axis;
      break;
    case Family::Bumps:
      os << "bumps:" << c;
      for (const auto& t : bumps) {
        os << ";" << t.amp << "," << t.sharp;
        for (double v : t.center) os << "," << v;
      }
      break;
  }
  return os.str();
}

namespace {

void validate_axisymmetric(const SphereContext& ctx, const FSpec& spec) {
  if (ctx.mode() != GridMode::Axisymmetric) return;
  const int axis_dim = ctx.n() + 1;
  switch (spec.family) {
    case FSpec::Family::Constant:
      return;
    case FSpec::Family::Affine:
      if (spec.axis != axis_dim)
        fail(Errc::NotAxisymmetric,
             "affine candidate must use the polar axis x_" + std::to_string(axis_dim) +
                 " on an axisymmetric grid");
      return;
    case FSpec::Family::Bumps:
      for (const auto& t : spec.bumps) {
        for (int d = 0; d + 1 < axis_dim; ++d)
          if (std::abs(t.center[d]) > 1e-14)
            fail(Errc::NotAxisymmetric,
                 "bump centers must sit on the polar axis on an axisymmetric grid");
      }
      return;
  }
}

double eval_spec(const FSpec& spec, const double* x, int dim) {
  switch (spec.family) {
    case FSpec::Family::Constant:
      return spec.c;
    case FSpec::Family::Affine:
      return spec.c + spec.b * x[spec.axis - 1];
    case FSpec::Family::Bumps: {
      double acc = spec.c;
      for (const auto& t : spec.bumps) {
        double dp = 0.0;
        for (int d = 0; d < dim; ++d) dp += x[d] * t.center[d];
        acc += t.amp * std::exp(t.sharp * (dp - 1.0));
      }
      return acc;
    }
  }
  return 0.0;
}

} // namespace

CandidateF CandidateF::make(const SphereContext& ctx, const FSpec& spec) {
  const int dim = ctx.n() + 1;
  if (spec.family == FSpec::Family::Affine && (spec.axis < 1 || spec.axis > dim))
    fail(Errc::TypeError, "affine axis out of range");
  if (spec.family == FSpec::Family::Bumps)
    for (const auto& t : spec.bumps)
      if (static_cast<int>(t.center.size()) != dim)
        fail(Errc::TypeError, "bump center has wrong dimension");
  validate_axisymmetric(ctx, spec);

  CandidateF f;
  f.spec_ = spec;
  f.label_ = spec.describe();
  f.analytic_ = true;
  f.dim_ = dim;
  f.values_ = GridField(ctx.node_count());

  std::vector<double> x(dim, 0.0);
  for (std::size_t i = 0; i < ctx.node_count(); ++i) {
    if (ctx.mode() == GridMode::Axisymmetric) {
      x.assign(dim, 0.0);
      x[dim - 1] = ctx.coordinate(ctx.n())[i];
    } else {
      for (int d = 0; d < dim; ++d) x[d] = ctx.coordinate(d)[i];
    }
    f.values_[i] = eval_spec(spec, x.data(), dim);
  }

  f.mean_ = ctx.integrate_mean(f.values_);
  kernels::active().minmax(f.values_.data(), f.values_.size(), &f.min_, &f.max_);
  if (f.mean_ <= 0.0)
    fail(Errc::NonpositiveMeanF, "candidate '" + f.label_ +
                                     "' has nonpositive spherical mean " +
                                     std::to_string(f.mean_));
  return f;
}

CandidateF CandidateF::from_grid(const SphereContext& ctx, GridField values,
                                 std::string label) {
  ctx.check_grid(values);
  CandidateF f;
  f.label_ = std::move(label);
  f.analytic_ = false;
  f.dim_ = ctx.n() + 1;
  f.values_ = std::move(values);
  f.mean_ = ctx.integrate_mean(f.values_);
  kernels::active().minmax(f.values_.data(), f.values_.size(), &f.min_, &f.max_);
  if (f.mean_ <= 0.0)
    fail(Errc::NonpositiveMeanF, "grid candidate has nonpositive spherical mean");
  return f;
}

double CandidateF::value_at(const std::vector<double>& x) const {
  if (!analytic_)
    fail(Errc::NoAnalyticDerivatives, "point evaluation needs a builtin family");
  return eval_spec(spec_, x.data(), dim_);
}

std::vector<double> CandidateF::ambient_gradient(const std::vector<double>& x) const {
  if (!analytic_)
    fail(Errc::NoAnalyticDerivatives, "gradient needs a builtin family");
  std::vector<double> g(dim_, 0.0);
  switch (spec_.family) {
    case FSpec::Family::Constant:
      break;
    case FSpec::Family::Affine:
      g[spec_.axis - 1] = spec_.b;
      break;
    case FSpec::Family::Bumps:
      for (const auto& t : spec_.bumps) {
        double dp = 0.0;
        for (int d = 0; d < dim_; ++d) dp += x[d] * t.center[d];
        double s = t.amp * t.sharp * std::exp(t.sharp * (dp - 1.0));
        for (int d = 0; d < dim_; ++d) g[d] += s * t.center[d];
      }
      break;
  }
  return g;
}

std::vector<double> CandidateF::ambient_hessian(const std::vector<double>& x) const {
  if (!analytic_)
    fail(Errc::NoAnalyticDerivatives, "hessian needs a builtin family");
  std::vector<double> h(static_cast<std::size_t>(dim_) * dim_, 0.0);
  if (spec_.family == FSpec::Family::Bumps) {
    for (const auto& t : spec_.bumps) {
      double dp = 0.0;
      for (int d = 0; d < dim_; ++d) dp += x[d] * t.center[d];
      double s = t.amp * t.sharp * t.sharp * std::exp(t.sharp * (dp - 1.0));
      for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b)
          h[static_cast<std::size_t>(a) * dim_ + b] += s * t.center[a] * t.center[b];
    }
  }
  return h;
}

} // namespace qflow
