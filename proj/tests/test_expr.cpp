#include <cmath>
#include <random>

#include "colombeau/expr.hpp"
#include "doctest.h"

using namespace colombeau;

namespace {

Expr t_coord() { return Expr::coordinate(1, 0); }

// standard bump in one variable, support [-1, 1]
Expr bump1() { return Expr::bump(t_coord()); }

// radial bump in two variables, support the closed unit ball
Expr bump_radial2() {
  PolyN r2(2);
  r2.add_term(MultiIndex(2, {2, 0}), 1);
  r2.add_term(MultiIndex(2, {0, 2}), 1);
  return Expr::bump(Expr::polynomial(r2));
}

double central_diff(const Expr& e, Point y, int axis, double h = 1e-5) {
  Point a = y, b = y;
  a[axis] += h;
  b[axis] -= h;
  return (e.evaluate(a) - e.evaluate(b)) / (2 * h);
}

}  // namespace

TEST_CASE("constant and bump point values") {
  Expr one = Expr::constant(1, 1.0);
  CHECK(one.evaluate({3.7, 0}) == 1.0);
  Expr b = bump1();
  CHECK(b.evaluate({0, 0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(b.evaluate({1.5, 0}) == 0.0);
  CHECK(b.evaluate({1.0, 0}) == 0.0);
  CHECK(b.evaluate({-1.0, 0}) == 0.0);
}

TEST_CASE("polynomial differentiation: d2/dxdy of x^2 y at (3,5)") {
  PolyN p(2);
  p.add_term(MultiIndex(2, {2, 1}), 1);
  Expr e = Expr::polynomial(p);
  Expr d = e.derivative(MultiIndex(2, {1, 1}));
  CHECK(d.evaluate({3, 5}) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("derivative of constant is the zero expression") {
  Expr c = Expr::constant(2, 4.2);
  CHECK(c.derivative(MultiIndex(2, {1, 0})).is_zero());
  CHECK(c.derivative(MultiIndex(2, {0, 2})).is_zero());
}

TEST_CASE("bump derivative vanishes at the interior maximum") {
  Expr d = bump1().derivative(0);
  CHECK(d.evaluate({0, 0}) == doctest::Approx(0.0).epsilon(1e-15));
  // and at/beyond the support edge everything is 0
  CHECK(d.evaluate({1.0, 0}) == 0.0);
  CHECK(d.evaluate({0.999999, 0}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("symbolic derivatives match central differences at interior points") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-0.8, 0.8);
  Expr exprs[] = {bump1(), Expr::product({bump1(), Expr::polynomial([] {
                                            PolyN p(1);
                                            p.add_term(MultiIndex(1, {3}), 2.0);
                                            p.add_term(MultiIndex(1, {0}), 0.5);
                                            return p;
                                          }())}),
                  Expr::smoothstep(t_coord()), Expr::ipow(bump1(), 3)};
  for (const Expr& e : exprs) {
    Expr d = e.derivative(0);
    for (int k = 0; k < 25; ++k) {
      double t = U(rng);
      double sym = d.evaluate({t, 0});
      double num = central_diff(e, {t, 0}, 0);
      CHECK(sym == doctest::Approx(num).epsilon(1e-6));
    }
  }
}

TEST_CASE("mixed partials commute on random 2-d expressions") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-0.6, 0.6);
  PolyN p(2);
  p.add_term(MultiIndex(2, {1, 2}), 1.3);
  p.add_term(MultiIndex(2, {2, 0}), -0.4);
  Expr e = Expr::product({bump_radial2(), Expr::polynomial(p)});
  Expr dxy = e.derivative(0).derivative(1);
  Expr dyx = e.derivative(1).derivative(0);
  for (int k = 0; k < 50; ++k) {
    Point y{U(rng), U(rng)};
    CHECK(dxy.evaluate(y) == doctest::Approx(dyx.evaluate(y)).epsilon(1e-12));
  }
}

TEST_CASE("support boxes are sound: 1000 random points outside evaluate to 0") {
  Expr e = Expr::product({bump_radial2(), Expr::coordinate(2, 1)});
  Box s = e.support();
  REQUIRE(s.bounded());
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-5, 5);
  int tested = 0;
  while (tested < 1000) {
    Point y{U(rng), U(rng)};
    if (s.contains(y)) continue;
    ++tested;
    CHECK(e.evaluate(y) == 0.0);
  }
}

TEST_CASE("affine precomposition: identity, support scaling, composition law") {
  Expr b = bump1();
  SUBCASE("identity returns the expression unchanged") {
    Expr same = affine_precompose(b, {1, 0, 0, 1}, {0, 0});
    for (double t : {-0.7, 0.0, 0.4}) CHECK(same.evaluate({t, 0}) == b.evaluate({t, 0}));
  }
  SUBCASE("bump((y-x)/eps) has support [x-eps, x+eps]") {
    double eps = 0.25, x = 1.5;
    Expr e = affine_precompose(b, {1 / eps, 0, 0, 1}, {-x / eps, 0});
    CHECK(e.support().iv[0].lo == doctest::Approx(x - eps).epsilon(1e-14));
    CHECK(e.support().iv[0].hi == doctest::Approx(x + eps).epsilon(1e-14));
  }
  SUBCASE("composing twice equals the composed map") {
    std::array<double, 4> A1{2, 0, 0, 1}, A2{0.5, 0, 0, 1};
    std::array<double, 2> b1{0.3, 0}, b2{-0.1, 0};
    Expr two = affine_precompose(affine_precompose(b, A1, b1), A2, b2);
    // (e(A1 y + b1))(A2 y + b2) = e(A1 A2 y + A1 b2 + b1)
    Expr one = affine_precompose(b, {A1[0] * A2[0], 0, 0, 1}, {A1[0] * b2[0] + b1[0], 0});
    for (double t : {-0.9, -0.2, 0.0, 0.55, 1.4})
      CHECK(two.evaluate({t, 0}) == doctest::Approx(one.evaluate({t, 0})).epsilon(1e-12));
  }
}

TEST_CASE("smoothstep clamps exactly and rises strictly inside") {
  Expr s = Expr::smoothstep(t_coord());
  CHECK(s.evaluate({-1.0, 0}) == 0.0);
  CHECK(s.evaluate({-2.0, 0}) == 0.0);
  CHECK(s.evaluate({1.0, 0}) == 1.0);
  CHECK(s.evaluate({3.0, 0}) == 1.0);
  CHECK(s.evaluate({0.0, 0}) == doctest::Approx(0.5).epsilon(1e-12));
  double prev = 0;
  for (double t = -0.95; t < 0.99; t += 0.05) {
    double v = s.evaluate({t, 0});
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("compose node: chain rule against finite differences") {
  // f(u, v) = u * bump(v) composed with (y0 + y1^2, y0 * y1)
  PolyN u(2);
  u.add_term(MultiIndex(2, {1, 0}), 1);
  Expr f = Expr::product({Expr::polynomial(u), Expr::bump(Expr::coordinate(2, 1))});
  PolyN g1(2), g2(2);
  g1.add_term(MultiIndex(2, {1, 0}), 1);
  g1.add_term(MultiIndex(2, {0, 2}), 1);
  g2.add_term(MultiIndex(2, {1, 1}), 1);
  Expr e = Expr::compose(f, {Expr::polynomial(g1), Expr::polynomial(g2)});
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int axis = 0; axis < 2; ++axis) {
    Expr d = e.derivative(axis);
    for (int k = 0; k < 20; ++k) {
      Point y{U(rng), U(rng)};
      CHECK(d.evaluate(y) == doctest::Approx(central_diff(e, y, axis)).epsilon(1e-6));
    }
  }
}

TEST_CASE("interval range encloses sampled values") {
  Expr e = Expr::product({bump1(), Expr::polynomial([] {
                            PolyN p(1);
                            p.add_term(MultiIndex(1, {1}), 3.0);
                            return p;
                          }())});
  Box b = Box::cube(1, -0.5, 0.5);
  Interval r = e.range(b);
  for (double t = -0.5; t <= 0.5; t += 0.01) {
    double v = e.evaluate({t, 0});
    CHECK(v >= r.lo - 1e-14);
    CHECK(v <= r.hi + 1e-14);
  }
}

TEST_CASE("test function requires compact support") {
  CHECK_THROWS_AS(TestFunction(Expr::constant(1, 1.0)), ConstructionError);
  TestFunction phi(bump1());
  CHECK(phi.support().bounded());
  CHECK(phi.evaluate({2, 0}) == 0.0);
}
