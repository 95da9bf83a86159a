#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qflow/conformal.hpp"
#include "qflow/errors.hpp"
#include "qflow/kernels.hpp"

using namespace qflow;

namespace {

SpectralField random_u(const SphereContext& ctx, std::mt19937_64& rng, double max_abs,
                       int lmax) {
  SpectralField s(ctx.coeff_count(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    int l = ctx.coeff_degree(i);
    if (l >= 1 && l <= lmax) s[i] = 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
  }
  GridField g = ctx.synthesize(s);
  double m = kernels::active().max_abs(g.data(), g.size());
  if (m > 0) {
    double target = max_abs * ((rng() >> 11) * 0x1.0p-53);
    for (auto& c : s.c) c *= target / m;
  }
  return s;
}

FSpec affine_05_x3() {
  FSpec spec;
  spec.family = FSpec::Family::Affine;
  spec.c = 0.5;
  spec.b = 1.0;
  spec.axis = 3;
  return spec;
}

} // namespace

TEST_CASE("Paneitz multiplier closed forms") {
  {
    auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
    auto mult = make_multiplier(ctx);
    for (int l = 0; l <= 16; ++l)
      CHECK(mult.mu[l] == doctest::Approx(l * (l + 1.0)).epsilon(1e-15));
    CHECK(mult.mu[0] == 0.0);
    for (int l = 1; l <= 16; ++l) CHECK(mult.mu[l] > mult.mu[l - 1]);
  }
  {
    auto ctx = SphereContext::make(4, GridMode::Axisymmetric, 16);
    auto mult = make_multiplier(ctx);
    for (int l = 0; l <= 16; ++l) {
      double lam = l * (l + 3.0);
      CHECK(mult.mu[l] == doctest::Approx(lam * (lam + 2.0)).epsilon(1e-15));
    }
    CHECK(mult.mu[1] == doctest::Approx(24.0)); // lambda_1 = 4; 4*6
  }
  {
    // n=6: three factors lambda_l + k(n-k-1), k = 0,1,2
    auto ctx = SphereContext::make(6, GridMode::Axisymmetric, 12);
    auto mult = make_multiplier(ctx);
    for (int l = 0; l <= 12; ++l) {
      double lam = l * (l + 5.0);
      CHECK(mult.mu[l] ==
            doctest::Approx(lam * (lam + 4.0) * (lam + 6.0)).epsilon(1e-14));
    }
  }
}

TEST_CASE("paneitz_apply on basis functions and constants") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 12);
  auto mult = make_multiplier(ctx);
  SpectralField s(ctx.coeff_count(), 0.0);
  s[0] = 5.0;
  SpectralField out = paneitz_apply(ctx, mult, s);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i]) <= 1e-14);

  s = SpectralField(ctx.coeff_count(), 0.0);
  s[ctx.coeff_index(2, 1)] = 1.0;
  out = paneitz_apply(ctx, mult, s);
  CHECK(out[ctx.coeff_index(2, 1)] == doctest::Approx(6.0)); // l(l+1) = 6
}

TEST_CASE("q_curvature of the round metric and constant shifts") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  auto mult = make_multiplier(ctx);
  SpectralField u(ctx.coeff_count(), 0.0);
  GridField q = q_curvature(ctx, mult, u);
  for (std::size_t i = 0; i < q.size(); ++i)
    CHECK(q[i] == doctest::Approx(1.0).epsilon(1e-13)); // (n-1)! = 1

  u[0] = 0.4; // Q = e^{-nc}(n-1)!
  q = q_curvature(ctx, mult, u);
  for (std::size_t i = 0; i < q.size(); ++i)
    CHECK(q[i] == doctest::Approx(std::exp(-0.8)).epsilon(1e-12));

  auto ctx4 = SphereContext::make(4, GridMode::Axisymmetric, 16);
  auto mult4 = make_multiplier(ctx4);
  SpectralField u4(ctx4.coeff_count(), 0.0);
  GridField q4 = q_curvature(ctx4, mult4, u4);
  for (std::size_t i = 0; i < q4.size(); ++i)
    CHECK(q4[i] == doctest::Approx(6.0).epsilon(1e-13)); // 3! = 6
}

TEST_CASE("q_curvature overflow guard") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 12);
  auto mult = make_multiplier(ctx);
  SpectralField u(ctx.coeff_count(), 0.0);
  u[0] = 200.0; // n*max|u| = 400 > 300
  try {
    q_curvature(ctx, mult, u);
    FAIL("overflow not detected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConformalFactorOverflow);
  }
}

TEST_CASE("Gauss constraint: mean(Q e^{nu}) = (n-1)! for random band-limited u") {
  std::mt19937_64 rng(42);
  auto ctx = SphereContext::make(2, GridMode::Full2D, 32);
  auto mult = make_multiplier(ctx);
  const auto& K = kernels::active();
  for (int trial = 0; trial < 30; ++trial) {
    SpectralField u = random_u(ctx, rng, 2.0, 32);
    GridField q = q_curvature(ctx, mult, u);
    GridField ug = ctx.synthesize(u);
    GridField en(ctx.node_count());
    K.exp_scale(2.0, ug.data(), en.data(), en.size());
    GridField prod(ctx.node_count());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = q[i] * en[i];
    CHECK(ctx.integrate_mean(prod) == doctest::Approx(1.0).epsilon(1e-8));
  }
  auto ctx4 = SphereContext::make(4, GridMode::Axisymmetric, 32);
  auto mult4 = make_multiplier(ctx4);
  for (int trial = 0; trial < 10; ++trial) {
    SpectralField u = random_u(ctx4, rng, 1.0, 32);
    GridField q = q_curvature(ctx4, mult4, u);
    GridField ug = ctx4.synthesize(u);
    GridField en(ctx4.node_count());
    K.exp_scale(4.0, ug.data(), en.data(), en.size());
    GridField prod(ctx4.node_count());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = q[i] * en[i];
    CHECK(ctx4.integrate_mean(prod) == doctest::Approx(6.0).epsilon(1e-8));
  }
}

TEST_CASE("alpha factor") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  SpectralField u(ctx.coeff_count(), 0.0);

  CandidateF f1 = CandidateF::make(ctx, FSpec{});
  CHECK(alpha_factor(ctx, f1, u) == doctest::Approx(1.0).epsilon(1e-12));

  CandidateF f2 = CandidateF::make(ctx, affine_05_x3());
  CHECK(alpha_factor(ctx, f2, u) == doctest::Approx(2.0).epsilon(1e-12));

  auto ctx4 = SphereContext::make(4, GridMode::Axisymmetric, 16);
  FSpec c6;
  c6.c = 6.0;
  CandidateF f3 = CandidateF::make(ctx4, c6);
  SpectralField u4(ctx4.coeff_count(), 0.0);
  CHECK(alpha_factor(ctx4, f3, u4) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("alpha rejects nonpositive f-mass") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  CandidateF f = CandidateF::make(ctx, affine_05_x3());
  // Volume concentrated near the south pole, where f < 0.
  GridField g(ctx.node_count());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double t = -ctx.coordinate(2)[i];
    double eps = 0.1;
    double A = (1.0 - t) + eps * eps * (1.0 + t);
    g[i] = std::log(2.0 * eps) - std::log(A);
  }
  SpectralField u = ctx.analyze(g);
  try {
    alpha_factor(ctx, f, u);
    FAIL("negative f-mass accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonpositiveFMass);
  }
}

TEST_CASE("energy closed forms") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  auto mult = make_multiplier(ctx);
  SpectralField u(ctx.coeff_count(), 0.0);
  CHECK(energy(ctx, mult, u) == 0.0);

  u[0] = 0.3; // E = n (n-1)! c
  CHECK(energy(ctx, mult, u) == doctest::Approx(2.0 * 0.3).epsilon(1e-14));

  auto ctx4 = SphereContext::make(4, GridMode::Axisymmetric, 16);
  auto mult4 = make_multiplier(ctx4);
  SpectralField u4(ctx4.coeff_count(), 0.0);
  u4[0] = -0.2;
  CHECK(energy(ctx4, mult4, u4) == doctest::Approx(4.0 * 6.0 * -0.2).epsilon(1e-13));
}

TEST_CASE("Beckner floor: E >= 0 for volume-normalized fields") {
  std::mt19937_64 rng(5);
  auto ctx = SphereContext::make(2, GridMode::Full2D, 24);
  auto mult = make_multiplier(ctx);
  for (int trial = 0; trial < 50; ++trial) {
    SpectralField u = renormalize_volume(ctx, random_u(ctx, rng, 1.5, 20));
    CHECK(energy(ctx, mult, u) >= -1e-8);
  }
}

TEST_CASE("energy_f report identities") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  auto mult = make_multiplier(ctx);
  CandidateF f = CandidateF::make(ctx, affine_05_x3());

  SpectralField u(ctx.coeff_count(), 0.0);
  EnergyReport rep = energy_f(ctx, mult, f, u);
  CHECK(rep.E == 0.0);
  CHECK(rep.E_f == doctest::Approx(-std::log(0.5)).epsilon(1e-10));
  CHECK(rep.volume_mean == doctest::Approx(1.0).epsilon(1e-13));

  auto ctx4 = SphereContext::make(4, GridMode::Axisymmetric, 16);
  auto mult4 = make_multiplier(ctx4);
  FSpec c6;
  c6.c = 6.0;
  CandidateF f6 = CandidateF::make(ctx4, c6);
  SpectralField u4(ctx4.coeff_count(), 0.0);
  EnergyReport rep4 = energy_f(ctx4, mult4, f6, u4);
  CHECK(rep4.E_f == doctest::Approx(-6.0 * std::log(6.0)).epsilon(1e-12));

  std::mt19937_64 rng(8);
  SpectralField ur = renormalize_volume(ctx, random_u(ctx, rng, 1.0, 12));
  EnergyReport r = energy_f(ctx, mult, f, ur);
  CHECK(r.E_f == doctest::Approx(r.E - std::log(r.mean_fe)).epsilon(1e-14));
  CHECK(r.alpha * r.mean_fe == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("renormalize_volume") {
  std::mt19937_64 rng(17);
  auto ctx = SphereContext::make(2, GridMode::Full2D, 20);
  SpectralField u = random_u(ctx, rng, 1.4, 16);
  SpectralField v = renormalize_volume(ctx, u);
  CHECK(std::abs(volume_mean(ctx, v) - 1.0) <= 1e-13);
  SpectralField w = renormalize_volume(ctx, v);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(w[i] == doctest::Approx(v[i]).epsilon(1e-13));
  SpectralField c(ctx.coeff_count(), 0.0);
  c[0] = 1.7;
  SpectralField z = renormalize_volume(ctx, c);
  CHECK(std::abs(z[0]) <= 1e-14);
}

TEST_CASE("finalize_solution shifts Q by 1/alpha") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  auto mult = make_multiplier(ctx);
  SpectralField u(ctx.coeff_count(), 0.0);

  SpectralField same = finalize_solution(ctx, u, 1.0);
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i] == u[i]);

  SpectralField shifted = finalize_solution(ctx, u, 4.0);
  CHECK(shifted[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  GridField q = q_curvature(ctx, mult, shifted);
  for (std::size_t i = 0; i < q.size(); ++i)
    CHECK(q[i] == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(finalize_solution(ctx, u, -1.0), Error);
  CHECK_THROWS_AS(finalize_solution(ctx, u, 0.0), Error);
}

TEST_CASE("in_class_cf") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  CandidateF f = CandidateF::make(ctx, affine_05_x3());

  SpectralField u(ctx.coeff_count(), 0.0);
  CHECK(in_class_cf(ctx, f, u));

  SpectralField off = u;
  off[0] = 0.1; // breaks unit volume
  CHECK_FALSE(in_class_cf(ctx, f, off));

  FSpec bad;
  bad.family = FSpec::Family::Affine;
  bad.c = -1.0;
  bad.b = 0.1;
  bad.axis = 3;
  try {
    CandidateF::make(ctx, bad);
    FAIL("negative-mean candidate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonpositiveMeanF);
  }
}

TEST_CASE("alpha sandwich on synthetic states") {
  // (n-1)!/max f <= alpha <= (n-1)! e^{E_f[u]/(n-1)!}; the run-level
  // invariant specializes this with u_0 as E_f reference.
  std::mt19937_64 rng(101);
  auto ctx = SphereContext::make(2, GridMode::Full2D, 20);
  auto mult = make_multiplier(ctx);
  CandidateF f = CandidateF::make(ctx, affine_05_x3());
  for (int trial = 0; trial < 20; ++trial) {
    SpectralField u = renormalize_volume(ctx, random_u(ctx, rng, 1.0, 12));
    EnergyReport rep = energy_f(ctx, mult, f, u);
    CHECK(rep.alpha >= 1.0 / f.max_value() - 1e-10);
    CHECK(rep.alpha <= std::exp(rep.E_f) * (1.0 + 1e-10));
  }
}

TEST_CASE("candidate rejects non-axisymmetric specs on axisymmetric grids") {
  auto ctx = SphereContext::make(4, GridMode::Axisymmetric, 16);
  FSpec affine;
  affine.family = FSpec::Family::Affine;
  affine.c = 0.5;
  affine.b = 1.0;
  affine.axis = 2; // not the polar axis
  try {
    CandidateF::make(ctx, affine);
    FAIL("non-axisymmetric candidate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotAxisymmetric);
  }
}
