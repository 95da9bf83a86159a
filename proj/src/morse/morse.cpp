#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <cstddef>

#include "qflow/errors.hpp"
#include "qflow/morse.hpp"

namespace qflow {

namespace {

constexpr double grad_tol_analytic = 1e-11;
constexpr double grad_tol_interp = 1e-8;
constexpr double hess_degenerate_tol = 1e-10;
constexpr double lap_nondegen_tol = 1e-8;
constexpr double dedup_dist = 1e-6;

double vnorm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void normalize(std::vector<double>& v) {
  double n = vnorm(v);
  for (double& x : v) x /= n;
}

// Orthonormal tangent frame at a unit vector x, by Gram-Schmidt over the
// coordinate axes least aligned with x.
std::vector<std::vector<double>> tangent_frame(const std::vector<double>& x) {
  const int dim = static_cast<int>(x.size());
  std::vector<int> order(dim);
  for (int d = 0; d < dim; ++d) order[d] = d;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(x[a]) < std::abs(x[b]); });
  std::vector<std::vector<double>> frame;
  for (int d = 0; d < dim && static_cast<int>(frame.size()) < dim - 1; ++d) {
    std::vector<double> e(dim, 0.0);
    e[order[d]] = 1.0;
    double dx = 0.0;
    for (int j = 0; j < dim; ++j) dx += e[j] * x[j];
    for (int j = 0; j < dim; ++j) e[j] -= dx * x[j];
    for (const auto& prev : frame) {
      double dp = 0.0;
      for (int j = 0; j < dim; ++j) dp += e[j] * prev[j];
      for (int j = 0; j < dim; ++j) e[j] -= dp * prev[j];
    }
    double nn = vnorm(e);
    if (nn < 1e-8) continue;
    for (double& v : e) v /= nn;
    frame.push_back(std::move(e));
  }
  return frame;
}

// Jacobi eigenvalue iteration for a small symmetric matrix (row-major).
std::vector<double> sym_eigenvalues(std::vector<double> a, int n) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a[i * n + i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

// Local model of f on the sphere: value, gradient and Hessian in an
// orthonormal tangent frame.
struct LocalModel {
  double value = 0.0;
  std::vector<double> grad;  // frame components, size n
  std::vector<double> hess;  // row-major n x n
};

class SphereFunction {
public:
  virtual ~SphereFunction() = default;
  virtual LocalModel eval(const std::vector<double>& x,
                          const std::vector<std::vector<double>>& frame) const = 0;
  // Convergence tolerance on |grad|; the finite-difference route has a noise
  // floor around 1e-9 and cannot meet the analytic one.
  virtual double grad_tol() const { return grad_tol_analytic; }
};

// Analytic route: restrict the ambient extension,
//   Hess_S f(X,Y) = Hess_R f(X,Y) - <x, grad_R f> <X,Y>.
class AnalyticFunction : public SphereFunction {
public:
  explicit AnalyticFunction(const CandidateF& f) : f_(f) {}
  LocalModel eval(const std::vector<double>& x,
                  const std::vector<std::vector<double>>& frame) const override {
    const int dim = static_cast<int>(x.size());
    const int n = dim - 1;
    LocalModel m;
    m.value = f_.value_at(x);
    std::vector<double> g = f_.ambient_gradient(x);
    std::vector<double> h = f_.ambient_hessian(x);
    double radial = 0.0;
    for (int d = 0; d < dim; ++d) radial += x[d] * g[d];
    m.grad.resize(n);
    for (int a = 0; a < n; ++a) {
      double acc = 0.0;
      for (int d = 0; d < dim; ++d) acc += frame[a][d] * g[d];
      m.grad[a] = acc;
    }
    m.hess.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double acc = 0.0;
        for (int r = 0; r < dim; ++r) {
          double hr = 0.0;
          for (int c = 0; c < dim; ++c)
            hr += h[static_cast<std::size_t>(r) * dim + c] * frame[b][c];
          acc += frame[a][r] * hr;
        }
        m.hess[static_cast<std::size_t>(a) * n + b] =
            acc - (a == b ? radial : 0.0);
      }
    return m;
  }

private:
  const CandidateF& f_;
};

// Grid route (n = 2): geodesic finite differences of the spectral
// interpolant. Second differences along geodesics give the Hessian directly.
class InterpolantFunction : public SphereFunction {
public:
  InterpolantFunction(const SphereContext& ctx, SpectralField coeffs)
      : ctx_(ctx), coeffs_(std::move(coeffs)) {}

  double grad_tol() const override { return grad_tol_interp; }

  LocalModel eval(const std::vector<double>& x,
                  const std::vector<std::vector<double>>& frame) const override {
    const double h = 1e-4;
    LocalModel m;
    m.value = at(x);
    const int n = 2;
    m.grad.resize(n);
    m.hess.assign(4, 0.0);
    double f0 = m.value;
    std::array<double, 2> fp{}, fm{};
    for (int a = 0; a < n; ++a) {
      fp[a] = at(geodesic(x, frame[a], h));
      fm[a] = at(geodesic(x, frame[a], -h));
      m.grad[a] = (fp[a] - fm[a]) / (2.0 * h);
      m.hess[a * n + a] = (fp[a] - 2.0 * f0 + fm[a]) / (h * h);
    }
    std::vector<double> diag(3);
    for (int d = 0; d < 3; ++d)
      diag[d] = (frame[0][d] + frame[1][d]) / std::sqrt(2.0);
    double hd = (at(geodesic(x, diag, h)) - 2.0 * f0 + at(geodesic(x, diag, -h))) /
                (h * h);
    double off = hd - 0.5 * (m.hess[0] + m.hess[3]);
    m.hess[1] = m.hess[2] = off;
    return m;
  }

private:
  double at(const std::vector<double>& x) const {
    return ctx_.evaluate(coeffs_, {x[0], x[1], x[2]});
  }
  static std::vector<double> geodesic(const std::vector<double>& x,
                                      const std::vector<double>& dir, double h) {
    std::vector<double> y(3);
    double c = std::cos(h), s = std::sin(h);
    for (int d = 0; d < 3; ++d) y[d] = c * x[d] + s * dir[d];
    return y;
  }
  const SphereContext& ctx_;
  SpectralField coeffs_;
};

std::optional<CriticalPoint> newton_refine(const SphereFunction& fn,
                                           std::vector<double> x, int n) {
  for (int it = 0; it < 80; ++it) {
    auto frame = tangent_frame(x);
    LocalModel m = fn.eval(x, frame);
    double gn = vnorm(m.grad);
    if (gn <= fn.grad_tol()) {
      CriticalPoint cp;
      cp.location = x;
      cp.f_value = m.value;
      cp.grad_norm = gn;
      cp.hessian_eigs = sym_eigenvalues(m.hess, n);
      cp.laplacian = 0.0;
      for (double e : cp.hessian_eigs) cp.laplacian += e;
      cp.morse_index = 0;
      for (double e : cp.hessian_eigs)
        if (e < 0.0) ++cp.morse_index;
      cp.degenerate = false;
      for (double e : cp.hessian_eigs)
        if (std::abs(e) < hess_degenerate_tol) cp.degenerate = true;
      return cp;
    }
    // Newton step in the tangent frame, gradient fallback when near-singular.
    std::vector<double> H = m.hess;
    std::vector<double> d = m.grad;
    for (double& v : d) v = -v;
    bool solved = true;
    for (int c = 0; c < n && solved; ++c) {
      int piv = c;
      for (int k = c + 1; k < n; ++k)
        if (std::abs(H[k * n + c]) > std::abs(H[piv * n + c])) piv = k;
      if (std::abs(H[piv * n + c]) < 1e-14 * (1.0 + std::abs(H[0]))) {
        solved = false;
        break;
      }
      if (piv != c) {
        for (int j = c; j < n; ++j) std::swap(H[piv * n + j], H[c * n + j]);
        std::swap(d[piv], d[c]);
      }
      for (int k = c + 1; k < n; ++k) {
        double f = H[k * n + c] / H[c * n + c];
        for (int j = c; j < n; ++j) H[k * n + j] -= f * H[c * n + j];
        d[k] -= f * d[c];
      }
    }
    if (solved) {
      for (int c = n - 1; c >= 0; --c) {
        double acc = d[c];
        for (int j = c + 1; j < n; ++j) acc -= H[c * n + j] * d[j];
        d[c] = acc / H[c * n + c];
      }
    } else {
      for (int c = 0; c < n; ++c) d[c] = -m.grad[c];
    }
    double dn = vnorm(d);
    if (dn > 0.5)
      for (double& v : d) v *= 0.5 / dn;
    for (int c = 0; c < n; ++c)
      for (int j = 0; j < 3; ++j) x[j] += d[c] * frame[c][j];
    normalize(x);
  }
  return std::nullopt;
}

double geodesic_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double dp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dp += a[i] * b[i];
  return std::acos(std::min(1.0, std::max(-1.0, dp)));
}

// Axisymmetric candidates: the poles are the only isolated candidates;
// interior zeros of dF/ds flag non-isolated critical latitudes.
CriticalPointResult axi_critical_points(const SphereContext& ctx,
                                        const CandidateF& f) {
  CriticalPointResult res;
  const int dim = ctx.n() + 1;
  auto deriv = [&](double s) {
    std::vector<double> x(dim, 0.0);
    x[dim - 1] = s;
    return f.ambient_gradient(x)[dim - 1];
  };
  const int scan = 2048;
  double prev = deriv(-1.0 + 2.0 / scan);
  for (int i = 2; i < scan; ++i) {
    double s = -1.0 + 2.0 * i / scan;
    double cur = deriv(s);
    if ((prev < 0.0) != (cur < 0.0) && std::max(std::abs(prev), std::abs(cur)) > 1e-13) {
      res.warnings.push_back(
          "non-isolated critical latitude near cos(theta) = " + std::to_string(s) +
          " (axisymmetric candidates violate the isolated-critical-point hypothesis)");
      break;
    }
    prev = cur;
  }

  AnalyticFunction fn(f);
  for (double sign : {1.0, -1.0}) {
    std::vector<double> pole(dim, 0.0);
    pole[dim - 1] = sign;
    auto frame = tangent_frame(pole);
    LocalModel m = fn.eval(pole, frame);
    if (m.value <= 0.0) continue;
    CriticalPoint cp;
    cp.location = pole;
    cp.f_value = m.value;
    cp.grad_norm = vnorm(m.grad);
    cp.hessian_eigs = sym_eigenvalues(m.hess, ctx.n());
    cp.laplacian = 0.0;
    for (double e : cp.hessian_eigs) cp.laplacian += e;
    cp.morse_index = 0;
    for (double e : cp.hessian_eigs)
      if (e < 0.0) ++cp.morse_index;
    for (double e : cp.hessian_eigs)
      if (std::abs(e) < hess_degenerate_tol) cp.degenerate = true;
    res.points.push_back(std::move(cp));
  }
  return res;
}

} // namespace

CriticalPointResult find_critical_points(const SphereContext& ctx,
                                         const CandidateF& f) {
  if (ctx.mode() == GridMode::Axisymmetric) {
    if (!f.has_analytic_derivatives())
      fail(Errc::NoAnalyticDerivatives,
           "grid-only candidates are supported in dimension 2 only");
    return axi_critical_points(ctx, f);
  }

  CriticalPointResult res;
  const int n = ctx.n();

  std::unique_ptr<SphereFunction> fn;
  if (f.has_analytic_derivatives()) {
    fn = std::make_unique<AnalyticFunction>(f);
  } else {
    if (n != 2)
      fail(Errc::NoAnalyticDerivatives,
           "grid-only candidates are supported in dimension 2 only");
    fn = std::make_unique<InterpolantFunction>(ctx, ctx.analyze(f.values()));
  }

  // Constant candidates have no isolated critical points at all.
  if (f.max_value() - f.min_value() < 1e-13 * std::max(1.0, std::abs(f.max_value()))) {
    res.warnings.push_back(
        "candidate is constant: every point is critical, none isolated");
    return res;
  }

  std::size_t stride = 1;
  while (ctx.node_count() / stride > 2000) ++stride;
  for (std::size_t i = 0; i < ctx.node_count(); i += stride) {
    std::vector<double> seed(3);
    for (int d = 0; d < 3; ++d) seed[d] = ctx.coordinate(d)[i];
    auto cp = newton_refine(*fn, seed, n);
    if (!cp || cp->f_value <= 0.0) continue;
    bool dup = false;
    for (auto& prev : res.points)
      if (geodesic_dist(prev.location, cp->location) < dedup_dist) {
        if (cp->grad_norm < prev.grad_norm) prev = *cp;
        dup = true;
        break;
      }
    if (!dup) res.points.push_back(*cp);
  }

  for (const auto& p : res.points) {
    if (p.degenerate)
      res.warnings.push_back("degenerate Hessian at a critical point (non-Morse)");
    if (std::abs(p.laplacian) < lap_nondegen_tol)
      res.warnings.push_back(
          "|Delta f| < 1e-8 at a critical point (non-degeneracy hypothesis "
          "violated)");
  }
  return res;
}

std::vector<long long> gamma_counts(const std::vector<CriticalPoint>& points, int n) {
  std::vector<long long> gamma(n + 1, 0);
  for (const auto& p : points) {
    if (p.f_value <= 0.0 || p.laplacian >= 0.0) continue;
    int i = n - p.morse_index;
    if (i >= 0 && i <= n) ++gamma[i];
  }
  return gamma;
}

KSolve solve_k(const std::vector<long long>& gamma, int n) {
  KSolve out;
  out.gamma = gamma;
  std::vector<long long> k(n + 1, 0);
  k[0] = gamma[0] - 1;
  bool ok = k[0] >= 0;
  for (int i = 1; i <= n && ok; ++i) {
    k[i] = gamma[i] - k[i - 1];
    ok = k[i] >= 0;
  }
  ok = ok && k[n] == 0;
  out.solvable = ok;
  if (ok) out.k_seq = std::move(k);
  return out;
}

bool morse_polynomial_check(const std::vector<long long>& gamma,
                            const std::vector<long long>& k_seq) {
  const std::size_t n1 = gamma.size();
  std::vector<long long> rhs(n1 + 1, 0);
  rhs[0] = 1;
  for (std::size_t j = 0; j < k_seq.size(); ++j) {
    rhs[j] += k_seq[j];
    rhs[j + 1] += k_seq[j];
  }
  for (std::size_t j = 0; j < n1; ++j)
    if (rhs[j] != gamma[j]) return false;
  return rhs[n1] == 0;
}

BetaLevels beta_levels(const std::vector<CriticalPoint>& points, double fact_n1) {
  BetaLevels out;
  for (const auto& p : points) {
    if (p.f_value <= 0.0)
      fail(Errc::PreconditionViolated, "beta levels need f > 0 at every point");
    out.betas.push_back(-fact_n1 * std::log(p.f_value));
  }
  std::sort(out.betas.begin(), out.betas.end());
  for (std::size_t i = 1; i < out.betas.size(); ++i)
    if (out.betas[i] - out.betas[i - 1] < 1e-9) out.distinct = false;
  return out;
}

CriterionVerdict criterion_verdict(const SphereContext& ctx, const CandidateF& f) {
  CriterionVerdict v;
  CriticalPointResult cps = find_critical_points(ctx, f);
  v.points = cps.points;
  v.gamma = gamma_counts(v.points, ctx.n());
  KSolve ks = solve_k(v.gamma, ctx.n());
  v.solvable = ks.solvable;
  v.k_seq = ks.k_seq;
  v.guarantees_existence = !ks.solvable;
  v.levels = beta_levels(v.points, ctx.factorial_n1());

  bool structural_fail = false;
  auto add = [&](std::string name, bool pass, bool structural, std::string detail) {
    if (structural && !pass) structural_fail = true;
    v.hypothesis_report.push_back(
        {std::move(name), pass, structural, std::move(detail)});
  };

  add("positive_mean", f.mean() > 0.0, true,
      "mean(f) = " + std::to_string(f.mean()));
  add("sign_changing", f.sign_changing(), false,
      f.sign_changing()
          ? "f changes sign"
          : "f does not change sign (the criterion targets sign-changing "
            "candidates; positive ones are covered by classical results)");
  bool isolated = true, nondegen = true, morse_ok = true;
  for (const auto& w : cps.warnings) {
    if (w.find("non-isolated") != std::string::npos ||
        w.find("constant") != std::string::npos)
      isolated = false;
    if (w.find("|Delta f|") != std::string::npos) nondegen = false;
    if (w.find("degenerate Hessian") != std::string::npos) morse_ok = false;
  }
  add("isolated_critical_points", isolated, true,
      isolated ? "all critical points isolated" : cps.warnings.front());
  add("nondegenerate_delta_f", nondegen, true,
      nondegen ? "|Delta f| >= 1e-8 at every critical point"
               : "some critical point has |Delta f| < 1e-8");
  add("morse_nondegenerate", morse_ok, true,
      morse_ok ? "Hessians nondegenerate" : "degenerate Hessian found");
  add("distinct_critical_levels", v.levels.distinct, true,
      v.levels.distinct ? "beta levels distinct" : "two beta levels within 1e-9");

  if (structural_fail)
    v.headline = "hypotheses-violated";
  else
    v.headline = v.guarantees_existence ? "yes" : "no";
  return v;
}

} // namespace qflow
