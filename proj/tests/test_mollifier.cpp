#include <cmath>

#include "colombeau/mollifier.hpp"
#include "colombeau/quadrature.hpp"
#include "doctest.h"

using namespace colombeau;

namespace {

double moment(const Mollifier& m, const MultiIndex& beta) {
  Expr mono = Expr::polynomial(PolyN::monomial_term(m.dim(), beta, 1.0));
  return integrate(m.phi().times(mono)).value;
}

// absolute moment of the scaled family eps^{-n} phi(y/eps): per-orthant
// split so each piece is a smooth integrand
double absolute_moment(const Mollifier& m, const MultiIndex& beta, double eps) {
  int n = m.dim();
  std::array<double, 4> A{1 / eps, 0, 0, 1 / eps};
  TestFunction scaled = m.phi().affine_precompose(A, {0, 0}).scaled(std::pow(eps, -n));
  Expr mono = Expr::polynomial(PolyN::monomial_term(n, beta, 1.0));
  Expr integrand = Expr::product({mono, scaled.expr()});
  const Box& s = scaled.support();
  double total = 0;
  int orthants = n == 1 ? 2 : 4;
  for (int o = 0; o < orthants; ++o) {
    Box part = s;
    double sign = 1;
    for (int i = 0; i < n; ++i) {
      bool positive = (o >> i) & 1;
      part.iv[i] = positive ? Interval{0, s.iv[i].hi} : Interval{s.iv[i].lo, 0};
      if (!positive && beta[i] % 2 == 1) sign = -sign;
    }
    total += sign * integrate(integrand, part).value;
  }
  return total;
}

}  // namespace

TEST_CASE("q=0 mollifier is the normalized bump") {
  Mollifier m = build_mollifier(0, 1, false);
  CHECK(moment(m, MultiIndex(1, {0})) == doctest::Approx(1.0).epsilon(1e-10));
  // phi = B / int B, so phi(0) = b(0)/mass
  CHECK(m.phi().evaluate({0, 0}) ==
        doctest::Approx(std::exp(-1.0) / bump_mass()).epsilon(1e-10));
}

TEST_CASE("q=1 symmetric: first moment vanishes automatically") {
  Mollifier m = build_mollifier(1, 1, true);
  CHECK(std::abs(moment(m, MultiIndex(1, {1}))) < 1e-12);
}

TEST_CASE("q=2 mollifier goes negative and kills the second moment") {
  Mollifier m = build_mollifier(2, 1, false);
  CHECK(std::abs(moment(m, MultiIndex(1, {1}))) < 1e-8);
  CHECK(std::abs(moment(m, MultiIndex(1, {2}))) < 1e-8);
  double least = 1e300;
  for (double t = -0.99; t < 1; t += 0.01) least = std::min(least, m.phi().evaluate({t, 0}));
  CHECK(least < 0);
}

TEST_CASE("moment invariants hold for q in 0..3 and n in 1..2") {
  for (int n : {1, 2})
    for (int q = 0; q <= 3; ++q) {
      for (bool sym : {false, true}) {
        Mollifier m = build_mollifier(q, n, sym);
        MomentReport rep = verify_moments(m);
        CHECK(rep.worst_violation() <= kMomentTol);
        // support inside the closed unit ball (box check)
        CHECK(m.support_radius() <= std::sqrt(static_cast<double>(n)) + 1e-12);
        for (int i = 0; i < n; ++i) {
          CHECK(m.phi().support().iv[i].lo >= -1 - 1e-12);
          CHECK(m.phi().support().iv[i].hi <= 1 + 1e-12);
        }
      }
    }
}

TEST_CASE("symmetric mollifier has tiny odd moments beyond q") {
  Mollifier m = build_mollifier(2, 1, true);
  MomentReport rep = verify_moments(m);
  for (auto& [beta, v] : rep.moments)
    if (beta.order() % 2 == 1) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("scaled family: k-th absolute moment scales exactly as eps^k") {
  Mollifier m = build_mollifier(1, 1, false);
  MultiIndex beta(1, {2});
  double ref = absolute_moment(m, beta, 1.0);
  for (double eps : {0.5, 0.25}) {
    double v = absolute_moment(m, beta, eps);
    CHECK(v == doctest::Approx(ref * eps * eps).epsilon(1e-9));
  }
}

TEST_CASE("rebuilding gives identical coefficients") {
  Mollifier a = build_mollifier(3, 1, false);
  Mollifier b = build_mollifier(3, 1, false);
  REQUIRE(a.coeffs().size() == b.coeffs().size());
  for (size_t i = 0; i < a.coeffs().size(); ++i)
    CHECK(std::abs(a.coeffs()[i].second - b.coeffs()[i].second) <= 1e-14);
}

TEST_CASE("order cap is enforced") {
  CHECK_THROWS_AS(build_mollifier(7, 1, false), ConstructionError);
}
