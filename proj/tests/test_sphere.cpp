#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qflow/errors.hpp"
#include "qflow/sphere.hpp"

using namespace qflow;

namespace {

SpectralField random_band_limited(const SphereContext& ctx, std::mt19937_64& rng,
                                  double amp, int lmax) {
  SpectralField s(ctx.coeff_count(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    int l = ctx.coeff_degree(i);
    if (l >= 1 && l <= lmax) s[i] = amp * (2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0);
  }
  return s;
}

} // namespace

TEST_CASE("sphere volumes match the closed form") {
  // omega_n = 2 pi^{(n+1)/2} / Gamma((n+1)/2)
  CHECK(sphere_volume(2) == doctest::Approx(4.0 * M_PI).epsilon(1e-14));
  CHECK(sphere_volume(4) == doctest::Approx(8.0 * M_PI * M_PI / 3.0).epsilon(1e-14));
  CHECK(sphere_volume(1) == doctest::Approx(2.0 * M_PI).epsilon(1e-14));
  CHECK(sphere_volume(3) == doctest::Approx(2.0 * M_PI * M_PI).epsilon(1e-14));
}

TEST_CASE("make_context rejects invalid arguments") {
  CHECK_THROWS_AS(SphereContext::make(3, GridMode::Full2D, 32), Error);
  CHECK_THROWS_AS(SphereContext::make(4, GridMode::Full2D, 32), Error);
  CHECK_THROWS_AS(SphereContext::make(2, GridMode::Full2D, 4), Error);
  try {
    SphereContext::make(3, GridMode::Axisymmetric, 32);
    FAIL("odd dimension accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OddDimension);
  }
}

TEST_CASE("quadrature weights sum to omega_n") {
  {
    auto ctx = SphereContext::make(2, GridMode::Full2D, 32);
    double sum = 0.0;
    for (double w : ctx.weights()) sum += w;
    CHECK(std::abs(sum - 4.0 * M_PI) <= 1e-12 * 4.0 * M_PI);
    CHECK(ctx.omega_n() == doctest::Approx(4.0 * M_PI).epsilon(1e-14));
  }
  {
    auto ctx = SphereContext::make(4, GridMode::Axisymmetric, 64);
    double sum = 0.0;
    for (double w : ctx.weights()) sum += w;
    double want = 8.0 * M_PI * M_PI / 3.0;
    CHECK(std::abs(sum - want) <= 1e-12 * want);
  }
  {
    auto ctx = SphereContext::make(6, GridMode::Axisymmetric, 24);
    double sum = 0.0;
    for (double w : ctx.weights()) sum += w;
    CHECK(std::abs(sum - sphere_volume(6)) <= 1e-12 * sphere_volume(6));
  }
}

TEST_CASE("integrate_mean basics") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 24);
  GridField one(ctx.node_count(), 1.0);
  CHECK(ctx.integrate_mean(one) == doctest::Approx(1.0).epsilon(1e-13));

  // height coordinate has zero mean by symmetry
  GridField x3(ctx.node_count());
  for (std::size_t i = 0; i < x3.size(); ++i) x3[i] = ctx.coordinate(2)[i];
  CHECK(std::abs(ctx.integrate_mean(x3)) <= 1e-13);

  // x3^2 over S^2 has mean 1/3 (exact integral 4 pi / 3)
  GridField x3sq(ctx.node_count());
  for (std::size_t i = 0; i < x3sq.size(); ++i)
    x3sq[i] = ctx.coordinate(2)[i] * ctx.coordinate(2)[i];
  CHECK(ctx.integrate_mean(x3sq) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("analyze of a constant hits only the degree-0 coefficient") {
  for (auto mode : {GridMode::Full2D, GridMode::Axisymmetric}) {
    auto ctx = SphereContext::make(2, mode, 16);
    GridField g(ctx.node_count(), 3.25);
    SpectralField s = ctx.analyze(g);
    CHECK(s[0] == doctest::Approx(3.25).epsilon(1e-13));
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s[i]) <= 1e-12);
  }
}

TEST_CASE("analyze recovers a unit coefficient for a sampled basis function") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  for (auto [l, m] : {std::pair{3, 0}, {3, 2}, {5, -4}, {16, 7}}) {
    GridField g(ctx.node_count());
    for (std::size_t i = 0; i < g.size(); ++i) {
      double ct = ctx.coordinate(2)[i];
      double phi = std::atan2(ctx.coordinate(1)[i], ctx.coordinate(0)[i]);
      g[i] = ctx.basis_full2d(l, m, ct, phi);
    }
    SpectralField s = ctx.analyze(g);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double want = (i == ctx.coeff_index(l, m)) ? 1.0 : 0.0;
      CHECK(std::abs(s[i] - want) <= 1e-12);
    }
  }
}

TEST_CASE("synthesize/analyze round trip is the identity on band-limited fields") {
  std::mt19937_64 rng(7);
  for (auto mode : {GridMode::Full2D, GridMode::Axisymmetric}) {
    auto ctx = SphereContext::make(2, mode, 32);
    SpectralField s = random_band_limited(ctx, rng, 1.0, 32);
    s[0] = 0.7;
    SpectralField back = ctx.analyze(ctx.synthesize(s));
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(back[i] - s[i]) <= 1e-12);
  }
  {
    auto ctx = SphereContext::make(4, GridMode::Axisymmetric, 48);
    SpectralField s = random_band_limited(ctx, rng, 0.5, 48);
    SpectralField back = ctx.analyze(ctx.synthesize(s));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(back[i] - s[i]) <= 1e-12);
  }
}

TEST_CASE("zero and constant synthesis") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 12);
  SpectralField s(ctx.coeff_count(), 0.0);
  GridField g = ctx.synthesize(s);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
  s[0] = -2.5;
  g = ctx.synthesize(s);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(g[i] == doctest::Approx(-2.5).epsilon(1e-14));
}

TEST_CASE("quadrature inner products are orthonormal to 1e-11") {
  // All zonal pairs plus a random batch of (l,m) pairs in Full2D.
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  const int L = 16;
  std::mt19937_64 rng(11);
  auto inner = [&](int l1, int m1, int l2, int m2) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ctx.node_count(); ++i) {
      double ct = ctx.coordinate(2)[i];
      double phi = std::atan2(ctx.coordinate(1)[i], ctx.coordinate(0)[i]);
      acc += ctx.weights()[i] * ctx.basis_full2d(l1, m1, ct, phi) *
             ctx.basis_full2d(l2, m2, ct, phi);
    }
    return acc / ctx.omega_n();
  };
  for (int l1 = 0; l1 <= L; l1 += 4)
    for (int l2 = l1; l2 <= L; l2 += 4)
      CHECK(std::abs(inner(l1, 0, l2, 0) - (l1 == l2 ? 1.0 : 0.0)) <= 1e-11);
  for (int trial = 0; trial < 300; ++trial) {
    int l1 = static_cast<int>(rng() % (L + 1));
    int l2 = static_cast<int>(rng() % (L + 1));
    int m1 = l1 == 0 ? 0 : static_cast<int>(rng() % (2 * l1 + 1)) - l1;
    int m2 = l2 == 0 ? 0 : static_cast<int>(rng() % (2 * l2 + 1)) - l2;
    double want = (l1 == l2 && m1 == m2) ? 1.0 : 0.0;
    CHECK(std::abs(inner(l1, m1, l2, m2) - want) <= 1e-11);
  }

  auto axi = SphereContext::make(4, GridMode::Axisymmetric, 20);
  for (int l1 = 0; l1 <= 20; ++l1)
    for (int l2 = l1; l2 <= 20; ++l2) {
      double acc = 0.0;
      for (std::size_t i = 0; i < axi.node_count(); ++i) {
        double x = axi.coordinate(4)[i];
        acc += axi.weights()[i] * axi.basis_axi(l1, x) * axi.basis_axi(l2, x);
      }
      acc /= axi.omega_n();
      CHECK(std::abs(acc - (l1 == l2 ? 1.0 : 0.0)) <= 1e-11);
    }
}

TEST_CASE("laplacian is the diagonal -l(l+n-1) multiplier") {
  {
    auto ctx = SphereContext::make(2, GridMode::Full2D, 12);
    SpectralField s(ctx.coeff_count(), 0.0);
    s[0] = 4.0; // constant -> 0
    s[ctx.coeff_index(1, 0)] = 1.0;
    s[ctx.coeff_index(5, -3)] = 2.0;
    SpectralField d = ctx.laplacian(s);
    CHECK(d[0] == 0.0);
    CHECK(d[ctx.coeff_index(1, 0)] == doctest::Approx(-2.0));   // l=1, n=2
    CHECK(d[ctx.coeff_index(5, -3)] == doctest::Approx(-60.0)); // 2*l(l+1)
  }
  {
    auto ctx = SphereContext::make(4, GridMode::Axisymmetric, 12);
    SpectralField s(ctx.coeff_count(), 0.0);
    s[2] = 1.0;
    SpectralField d = ctx.laplacian(s);
    CHECK(d[2] == doctest::Approx(-10.0)); // l=2, n=4: 2*5
  }
}

TEST_CASE("laplacian commutes with degree truncation") {
  std::mt19937_64 rng(23);
  auto ctx = SphereContext::make(2, GridMode::Full2D, 16);
  SpectralField s = random_band_limited(ctx, rng, 1.0, 16);
  SpectralField d = ctx.laplacian(s);
  // truncate then laplacian == laplacian then truncate
  auto truncate = [&](SpectralField v, int lcut) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (ctx.coeff_degree(i) > lcut) v[i] = 0.0;
    return v;
  };
  SpectralField a = ctx.laplacian(truncate(s, 9));
  SpectralField b = truncate(d, 9);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("point evaluation matches synthesis at the nodes") {
  std::mt19937_64 rng(3);
  auto ctx = SphereContext::make(2, GridMode::Full2D, 20);
  SpectralField s = random_band_limited(ctx, rng, 0.8, 20);
  GridField g = ctx.synthesize(s);
  for (std::size_t i = 0; i < ctx.node_count(); i += 137) {
    std::array<double, 3> x = {ctx.coordinate(0)[i], ctx.coordinate(1)[i],
                               ctx.coordinate(2)[i]};
    CHECK(ctx.evaluate(s, x) == doctest::Approx(g[i]).epsilon(1e-11));
  }

  auto axi = SphereContext::make(4, GridMode::Axisymmetric, 32);
  SpectralField sa = random_band_limited(axi, rng, 0.8, 32);
  GridField ga = axi.synthesize(sa);
  for (std::size_t i = 0; i < axi.node_count(); i += 7)
    CHECK(axi.evaluate_axi(sa, axi.coordinate(4)[i]) ==
          doctest::Approx(ga[i]).epsilon(1e-11));
}

TEST_CASE("dimension mismatches are rejected") {
  auto ctx = SphereContext::make(2, GridMode::Full2D, 12);
  GridField bad(17);
  CHECK_THROWS_AS(ctx.analyze(bad), Error);
  SpectralField sbad(3);
  CHECK_THROWS_AS(ctx.synthesize(sbad), Error);
}
