#include <cmath>

#include "colombeau/expr.hpp"
#include "colombeau/quadrature.hpp"
#include "doctest.h"

using namespace colombeau;

TEST_CASE("int_{-1}^{1} (1 - t^2) dt = 4/3") {
  PolyN p(1);
  p.add_term(MultiIndex(1, {0}), 1);
  p.add_term(MultiIndex(1, {2}), -1);
  auto r = integrate(Expr::polynomial(p), Box::cube(1, -1, 1));
  CHECK(r.value == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("bump mass matches the trapezoid oracle") {
  // independent oracle: high-resolution trapezoid rule
  const int N = 2'000'001;
  double trap = 0;
  double h = 2.0 / (N - 1);
  for (int i = 0; i < N; ++i) {
    double t = -1 + i * h;
    double w = (i == 0 || i == N - 1) ? 0.5 : 1.0;
    trap += w * bump_value(t);
  }
  trap *= h;
  CHECK(trap == doctest::Approx(0.443994).epsilon(2e-6));

  auto r = integrate(Expr::bump(Expr::coordinate(1, 0)), Box::cube(1, -2, 2));
  CHECK(r.value == doctest::Approx(trap).epsilon(1e-9));
  CHECK(r.value == doctest::Approx(bump_mass()).epsilon(1e-12));
}

TEST_CASE("box disjoint from support integrates to exactly 0 with zero panels") {
  auto r = integrate(Expr::bump(Expr::coordinate(1, 0)), Box::cube(1, 3, 5));
  CHECK(r.value == 0.0);
  CHECK(r.panels_visited == 0);
}

TEST_CASE("quadrature is exact for polynomials of degree <= 23") {
  PolyN p(1);
  p.add_term(MultiIndex(1, {23}), 1.0);
  p.add_term(MultiIndex(1, {10}), -2.0);
  auto r = integrate(Expr::polynomial(p), Box::cube(1, 0, 1));
  // exact: 1/24 - 2/11
  CHECK(r.value == doctest::Approx(1.0 / 24 - 2.0 / 11).epsilon(1e-13));
}

TEST_CASE("2-d tensor quadrature: radial bump mass is the square of a 1-d integral") {
  // product bump b(y0) b(y1): mass = (int b)^2
  Expr e = Expr::product({Expr::bump(Expr::coordinate(2, 0)), Expr::bump(Expr::coordinate(2, 1))});
  auto r = integrate(e, Box::cube(2, -1, 1));
  double m = bump_mass();
  CHECK(r.value == doctest::Approx(m * m).epsilon(1e-10));
}

TEST_CASE("error estimate reflects the last refinement difference") {
  auto r = integrate(Expr::bump(Expr::coordinate(1, 0)), Box::cube(1, -1, 1));
  CHECK(r.error_estimate < 1e-10);
  CHECK(r.converged);
}
