#include <cmath>
#include <random>

#include "colombeau/genfun.hpp"
#include "colombeau/quadrature.hpp"
#include "doctest.h"

using namespace colombeau;

namespace {

Domain omega1() { return Domain::box(Box::cube(1, -3, 3)); }

TestFunction mollifier_phi(int q = 0) { return build_mollifier(q, 1, false).phi(); }

TestFunction shifted_bump(double center, double width) {
  PolyN t(1);
  t.add_term(MultiIndex(1, {1}), 1.0 / width);
  t.add_term(MultiIndex(1, {0}), -center / width);
  return TestFunction(Expr::bump(Expr::polynomial(t)));
}

Expr poly1(std::vector<std::pair<int, double>> terms) {
  PolyN p(1);
  for (auto& [k, v] : terms) p.add_term(MultiIndex(1, {k}), v);
  return Expr::polynomial(p);
}

}  // namespace

TEST_CASE("distribution pairings") {
  TestFunction phi = mollifier_phi();

  SUBCASE("<delta_a, phi> = phi(a)") {
    Distribution d = Distribution::delta(1, {0.25, 0});
    CHECK(pair(d, phi) == doctest::Approx(phi.evaluate({0.25, 0})).epsilon(1e-14));
  }
  SUBCASE("<delta', phi> = -phi'(a)") {
    Distribution d = Distribution::delta_derivative(MultiIndex(1, {1}), {0.1, 0});
    CHECK(pair(d, phi) == doctest::Approx(-phi.derivative(0).evaluate({0.1, 0})).epsilon(1e-12));
  }
  SUBCASE("<H, phi> = half the mass for even phi") {
    Distribution H = Distribution::heaviside();
    double mass = integrate(phi).value;
    CHECK(pair(H, phi) == doctest::Approx(0.5 * mass).epsilon(1e-10));
  }
  SUBCASE("<PV 1/x, phi> = 0 for even phi, and matches the log oracle off-center") {
    Distribution pv = Distribution::principal_value_1_over_x();
    CHECK(std::abs(pair(pv, phi)) < 1e-10);
    // shifted bump: PV integral equals the plain integral of phi(t)/t
    TestFunction off = shifted_bump(1.5, 0.4);  // support [1.1, 1.9], away from 0
    PolyN tp(1);
    tp.add_term(MultiIndex(1, {1}), 1.0);
    auto ratio = [&](const Point& y) { return off.evaluate(y) / y[0]; };
    double oracle = integrate(ratio, off.support(), 1).value;
    CHECK(pair(pv, off) == doctest::Approx(oracle).epsilon(1e-9));
  }
  SUBCASE("linear combinations pair linearly") {
    Distribution lc = Distribution::linear_combination(
        {{2.0, Distribution::delta(1, {0, 0})}, {-3.0, Distribution::heaviside()}});
    double expected = 2 * phi.evaluate({0, 0}) - 3 * pair(Distribution::heaviside(), phi);
    CHECK(pair(lc, phi) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("locally integrable with half-space restriction") {
    // |y| * bump = y*bump on y>0 minus y*bump on y<0
    Distribution abs_bump = Distribution::linear_combination(
        {{1.0, Distribution::locally_integrable(Expr::product({poly1({{1, 1.0}}), phi.expr()}),
                                                HalfSpace{0, 0, true})},
         {-1.0, Distribution::locally_integrable(Expr::product({poly1({{1, 1.0}}), phi.expr()}),
                                                 HalfSpace{0, 0, false})}});
    auto oracle = [&](const Point& y) { return std::abs(y[0]) * phi.evaluate(y) * phi.evaluate(y); };
    double expected = integrate(oracle, phi.support(), 1).value;
    CHECK(pair(abs_bump, phi) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("iota and sigma evaluation semantics") {
  Domain om = omega1();
  SmoothingKernel k = model_kernel(build_mollifier(0, 1, false));
  GenFun delta = GenFun::iota(Distribution::delta(1, {0, 0}), om);
  GenFun one = GenFun::sigma(Expr::constant(1, 1.0), om);

  // iota(delta) against the model kernel: eps^{-n} phi(-x/eps)
  Mollifier m = build_mollifier(0, 1, false);
  double eps = 0.2, x = 0.13;
  CHECK(evaluate_with_kernel(delta, k, eps, {x, 0}) ==
        doctest::Approx(m.phi().evaluate({-x / eps, 0}) / eps).epsilon(1e-12));

  // sigma(1) is the algebra unit
  GenFun R = GenFun::product({one, delta});
  TestFunction phi = mollifier_phi();
  CHECK(R.evaluate(phi, {0.3, 0}) == doctest::Approx(delta.evaluate(phi, {0.3, 0})).epsilon(1e-14));

  // iota is linear
  GenFun lin = GenFun::iota(
      Distribution::linear_combination(
          {{2.0, Distribution::delta(1, {0, 0})}, {-3.0, Distribution::heaviside()}}),
      om);
  double expect =
      2 * phi.evaluate({0, 0}) - 3 * pair(Distribution::heaviside(), phi);
  CHECK(lin.evaluate(phi, {0.5, 0}) == doctest::Approx(expect).epsilon(1e-12));

  // sigma is multiplicative
  Expr f = poly1({{0, 0.5}, {1, 1.5}});
  Expr g = poly1({{2, 2.0}});
  GenFun lhs = GenFun::sigma(Expr::product({f, g}), om);
  GenFun rhs = GenFun::product({GenFun::sigma(f, om), GenFun::sigma(g, om)});
  for (double t : {-0.7, 0.0, 0.9})
    CHECK(lhs.evaluate(phi, {t, 0}) == doctest::Approx(rhs.evaluate(phi, {t, 0})).epsilon(1e-12));
}

TEST_CASE("product of embeddings evaluates by composition of definitions") {
  Domain om = omega1();
  SmoothingKernel k = model_kernel(build_mollifier(0, 1, false));
  GenFun R = GenFun::product(
      {GenFun::iota(Distribution::heaviside(), om), GenFun::iota(Distribution::delta(1, {0, 0}), om)});
  double eps = 0.25;
  TestFunction tf = k.at(eps, {0, 0});
  double expected = pair(Distribution::heaviside(), tf) * tf.evaluate({0, 0});
  CHECK(evaluate_with_kernel(R, k, eps, {0, 0}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("d1 is the exact Gateaux derivative in the test-function slot") {
  Domain om = omega1();
  GenFun H = GenFun::iota(Distribution::heaviside(), om);
  GenFun delta = GenFun::iota(Distribution::delta(1, {0, 0}), om);
  GenFun f = GenFun::sigma(poly1({{1, 1.0}}), om);
  TestFunction phi = mollifier_phi();
  TestFunction psi = shifted_bump(0.2, 0.5);

  SUBCASE("d1 of a linear embedding is the pairing with the direction") {
    CHECK(delta.d1(phi, {0.4, 0}, psi) == doctest::Approx(psi.evaluate({0, 0})).epsilon(1e-12));
    CHECK(f.d1(phi, {0.4, 0}, psi) == 0.0);
  }
  SUBCASE("Leibniz rule for products") {
    GenFun R = GenFun::product({H, delta});
    double expected = pair(Distribution::heaviside(), psi) * phi.evaluate({0, 0}) +
                      pair(Distribution::heaviside(), phi) * psi.evaluate({0, 0});
    CHECK(R.d1(phi, {0.1, 0}, psi) == doctest::Approx(expected).epsilon(1e-10));
  }
  SUBCASE("linearity in the direction") {
    GenFun R = GenFun::product({H, delta});
    TestFunction psi2 = shifted_bump(-0.3, 0.4);
    TestFunction combo(Expr::sum({Expr::scale(1.7, psi.expr()), Expr::scale(-0.6, psi2.expr())}),
                       psi.support().hull(psi2.support()));
    double lhs = R.d1(phi, {0.1, 0}, combo);
    double rhs = 1.7 * R.d1(phi, {0.1, 0}, psi) - 0.6 * R.d1(phi, {0.1, 0}, psi2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
  SUBCASE("difference quotient cross-check") {
    GenFun R = GenFun::product({H, H, delta});
    double h = 1e-5;
    TestFunction bumped(Expr::sum({phi.expr(), Expr::scale(h, psi.expr())}),
                        phi.support().hull(psi.support()));
    double fd = (R.evaluate(bumped, {0, 0}) - R.evaluate(phi, {0, 0})) / h;
    double exact = R.d1(phi, {0, 0}, psi);
    CHECK(exact == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("pullback of generalized functions") {
  Domain om = omega1();
  TestFunction phi = mollifier_phi();

  SUBCASE("identity pullback changes nothing") {
    GenFun R = GenFun::iota(Distribution::delta(1, {0, 0}), om);
    GenFun P = GenFun::pullback(Diffeomorphism::identity(om), R);
    CHECK(P.evaluate(phi, {0.2, 0}) == doctest::Approx(R.evaluate(phi, {0.2, 0})).epsilon(1e-12));
  }
  SUBCASE("translation pullback moves the delta: mu^* iota(delta_0) = iota(delta_{-a})") {
    double a = 0.4;
    Diffeomorphism tr = Diffeomorphism::affine({1, 0, 0, 1}, {a, 0}, om);
    GenFun R = GenFun::iota(Distribution::delta(1, {0, 0}), Domain::box(Box::cube(1, -4, 4)));
    GenFun P = GenFun::pullback(tr, R);
    GenFun expected = GenFun::iota(Distribution::delta(1, {-a, 0}), om);
    CHECK(P.evaluate(phi, {0.1, 0}) ==
          doctest::Approx(expected.evaluate(phi, {0.1, 0})).epsilon(1e-12));
    CHECK(P.evaluate(phi, {0.1, 0}) == doctest::Approx(phi.evaluate({-a, 0})).epsilon(1e-12));
  }
  SUBCASE("mu^* is an algebra morphism and commutes with sigma") {
    Diffeomorphism mu = Diffeomorphism::affine({0.8, 0, 0, 1}, {0.1, 0}, om);
    Expr f = poly1({{0, 0.3}, {2, 1.0}});
    GenFun R = GenFun::iota(Distribution::heaviside(), Domain::box(Box::cube(1, -4, 4)));
    GenFun S = GenFun::sigma(f, Domain::box(Box::cube(1, -4, 4)));
    GenFun lhs = GenFun::pullback(mu, R * S);
    GenFun rhs = GenFun::pullback(mu, R) * GenFun::pullback(mu, S);
    for (double x : {-0.5, 0.2})
      CHECK(lhs.evaluate(phi, {x, 0}) == doctest::Approx(rhs.evaluate(phi, {x, 0})).epsilon(1e-10));

    GenFun sig_pull = GenFun::pullback(mu, S);
    GenFun pull_sig = GenFun::sigma(Expr::compose(f, mu.forward()), om);
    for (double x : {-0.5, 0.2})
      CHECK(sig_pull.evaluate(phi, {x, 0}) ==
            doctest::Approx(pull_sig.evaluate(phi, {x, 0})).epsilon(1e-12));
  }
}

TEST_CASE("Lie derivative on the basic space") {
  Domain om = omega1();
  TestFunction phi = mollifier_phi(1);
  VectorField e1 = VectorField::coordinate_field(1, 0, om);
  // X = (1 + 0.5 y) d/dy
  VectorField X({poly1({{0, 1.0}, {1, 0.5}})}, om);

  SUBCASE("L_X sigma(f) = sigma(D_X f)") {
    Expr f = poly1({{1, 1.0}, {3, -0.2}});
    GenFun lhs = GenFun::lie_derivative(X, GenFun::sigma(f, om));
    Expr dxf = Expr::product({X.components[0], f.derivative(0)});
    GenFun rhs = GenFun::sigma(dxf, om);
    for (double x : {-0.4, 0.0, 0.7})
      CHECK(lhs.evaluate(phi, {x, 0}) == doctest::Approx(rhs.evaluate(phi, {x, 0})).epsilon(1e-12));
  }
  SUBCASE("L_X iota(delta) = iota(L_X delta)") {
    GenFun lhs = GenFun::lie_derivative(X, GenFun::iota(Distribution::delta(1, {0, 0}), om));
    GenFun rhs = GenFun::iota(Distribution::lie_derivative(X, Distribution::delta(1, {0, 0})), om);
    for (double x : {-0.2, 0.5})
      CHECK(lhs.evaluate(phi, {x, 0}) == doctest::Approx(rhs.evaluate(phi, {x, 0})).epsilon(1e-12));
  }
  SUBCASE("Leibniz rule on random products") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    GenFun H = GenFun::iota(Distribution::heaviside(), om);
    GenFun f = GenFun::sigma(poly1({{0, 0.4}, {2, 1.0}}), om);
    GenFun R = H, S = f;
    GenFun lhs = GenFun::lie_derivative(X, R * S);
    GenFun rhs = GenFun::lie_derivative(X, R) * S + R * GenFun::lie_derivative(X, S);
    for (int i = 0; i < 10; ++i) {
      double x = U(rng);
      CHECK(lhs.evaluate(phi, {x, 0}) == doctest::Approx(rhs.evaluate(phi, {x, 0})).epsilon(1e-10));
    }
  }
  SUBCASE("hat L_X is not C-infinity-linear in X: concrete witness") {
    // g = y, X = e1: evaluate (L_{gX} - sigma(g) L_X) iota(delta) at x = 0
    VectorField gX({poly1({{1, 1.0}})}, om);
    GenFun delta = GenFun::iota(Distribution::delta(1, {0, 0}), om);
    GenFun lhs = GenFun::lie_derivative(gX, delta);
    GenFun rhs = GenFun::sigma(poly1({{1, 1.0}}), om) * GenFun::lie_derivative(e1, delta);
    double witness = std::abs(lhs.evaluate(phi, {0, 0}) - rhs.evaluate(phi, {0, 0}));
    CHECK(witness > 0.1);
  }
  SUBCASE("nesting depth is capped at 3") {
    GenFun R = GenFun::iota(Distribution::delta(1, {0, 0}), om);
    GenFun l1 = GenFun::lie_derivative(e1, R);
    GenFun l2 = GenFun::lie_derivative(e1, l1);
    GenFun l3 = GenFun::lie_derivative(e1, l2);
    CHECK_THROWS_AS(GenFun::lie_derivative(e1, l3), ConstructionError);
  }
}

TEST_CASE("restriction narrows the domain without changing values") {
  Domain om = omega1();
  Domain sub = Domain::box(Box::cube(1, -1, 1));
  GenFun R = GenFun::iota(Distribution::delta(1, {0, 0}), om);
  GenFun r1 = R.restrict(sub);
  TestFunction phi = mollifier_phi();
  CHECK(r1.evaluate(phi, {0.2, 0}) == R.evaluate(phi, {0.2, 0}));
  Domain smaller = Domain::box(Box::cube(1, -0.5, 0.5));
  GenFun r2 = r1.restrict(smaller);
  CHECK(r2.domain().components()[0].iv[0].hi == 0.5);
  CHECK_THROWS_AS(R.restrict(Domain::box(Box::cube(1, -9, 9))), DomainError);
}

TEST_CASE("exact composite derivative matches finite differences through every node kind") {
  Domain om = omega1();
  SmoothingKernel k = model_kernel(build_mollifier(1, 1, false));
  VectorField X({poly1({{0, 1.0}, {1, 0.5}})}, om);
  Diffeomorphism mu = Diffeomorphism::affine({0.85, 0, 0, 1}, {0.05, 0}, Domain::box(Box::cube(1, -4, 4)));

  GenFun H = GenFun::iota(Distribution::heaviside(), Domain::box(Box::cube(1, -6, 6)));
  GenFun delta = GenFun::iota(Distribution::delta(1, {0, 0}), Domain::box(Box::cube(1, -6, 6)));
  GenFun f = GenFun::sigma(poly1({{0, 0.3}, {2, 0.8}}), Domain::box(Box::cube(1, -6, 6)));

  std::vector<GenFun> subjects = {
      delta,
      H * delta,
      GenFun::pullback(mu, H * f),
      GenFun::lie_derivative(X, H),
      GenFun::lie_derivative(X, GenFun::pullback(mu, delta)),
  };
  double eps = 0.15;
  for (const GenFun& R : subjects) {
    for (double x : {-0.15, 0.2}) {
      double exact = composite_derivative(R, k, {}, eps, {x, 0}, MultiIndex(1, {1}));
      double h = 1e-5;
      double fd = (composite_derivative(R, k, {}, eps, {x + h, 0}, MultiIndex::zero(1)) -
                   composite_derivative(R, k, {}, eps, {x - h, 0}, MultiIndex::zero(1))) /
                  (2 * h);
      CHECK(exact == doctest::Approx(fd).epsilon(2e-4));
    }
  }
  // second derivative of one composite subject
  GenFun R = H * delta;
  double h = 1e-4, x = 0.05;
  double exact2 = composite_derivative(R, k, {}, eps, {x, 0}, MultiIndex(1, {2}));
  double fd2 = (composite_derivative(R, k, {}, eps, {x + h, 0}, MultiIndex::zero(1)) -
                2 * composite_derivative(R, k, {}, eps, {x, 0}, MultiIndex::zero(1)) +
                composite_derivative(R, k, {}, eps, {x - h, 0}, MultiIndex::zero(1))) /
               (h * h);
  CHECK(exact2 == doctest::Approx(fd2).epsilon(1e-3));
}

TEST_CASE("sheaf gluing: single piece reproduces the original exactly for small eps") {
  // cover (-2, 0.4) and (-0.4, 2); cutoffs sum to 1 on [-1.5, 1.5]
  Domain U1 = Domain::box(Box(1, {-2.0}, {0.4}));
  Domain U2 = Domain::box(Box(1, {-0.4}, {2.0}));
  Domain om = Domain::box(Box::cube(1, -2, 2));
  GenFun R = GenFun::iota(Distribution::delta(1, {0, 0}), om);

  // chi_1 falls from 1 to 0 on [-0.2, 0.2]; chi_2 = 1 - chi_1 (exact partition)
  PolyN down(1);
  down.add_term(MultiIndex(1, {1}), -5.0);
  Expr chi1 = Expr::smoothstep(Expr::polynomial(down));
  PolyN up(1);
  up.add_term(MultiIndex(1, {1}), 5.0);
  Expr chi2 = Expr::smoothstep(Expr::polynomial(up));
  auto plateau = [](double a, double b, double c, double d) {
    PolyN upp(1), dnn(1);
    upp.add_term(MultiIndex(1, {1}), 2.0 / (b - a));
    upp.add_term(MultiIndex(1, {0}), -(a + b) / (b - a));
    dnn.add_term(MultiIndex(1, {1}), -2.0 / (d - c));
    dnn.add_term(MultiIndex(1, {0}), (c + d) / (d - c));
    return Expr::product({Expr::smoothstep(Expr::polynomial(upp)), Expr::smoothstep(Expr::polynomial(dnn))});
  };
  // theta_j == 1 on a neighborhood of supp chi_j inside U_j
  Expr theta1 = plateau(-1.9, -1.8, 0.25, 0.35);  // 1 on [-1.8, 0.25]
  Expr theta2 = plateau(-0.45, -0.35, 1.8, 1.9);  // 1 on [-0.35, 1.8]

  // cutoffs get compact support inside their cover sets via plateau factors
  Expr chi1_c = Expr::product({chi1, plateau(-1.7, -1.6, 0.2, 0.3)});  // supp in [-1.7, 0.2]
  Expr chi2_c = Expr::product({chi2, plateau(-0.3, -0.2, 1.6, 1.7)});  // supp in [-0.2, 1.7]

  GenFun glued = GenFun::sheaf_glue({R.restrict(U1), R.restrict(U2)}, {U1, U2}, {chi1_c, chi2_c},
                                    {theta1, theta2}, {0, 1});

  SmoothingKernel k = model_kernel(build_mollifier(0, 1, false));
  // for small eps the kernel support sits inside the plateaus and the glued
  // function reproduces R exactly on [-1, 1]
  for (double eps : {0.05, 0.02}) {
    for (double x : {-0.8, -0.1, 0.0, 0.15, 0.9}) {
      double lhs = evaluate_with_kernel(glued, k, eps, {x, 0});
      double rhs = evaluate_with_kernel(R, k, eps, {x, 0});
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }

  SUBCASE("validation rejects a plateau that is not 1 on the cutoff support") {
    CHECK_THROWS_AS(GenFun::sheaf_glue({R.restrict(U1), R.restrict(U2)}, {U1, U2}, {chi1_c, chi2_c},
                                       {Expr::scale(0.5, theta1), theta2}, {0, 1}),
                    ConstructionError);
  }
}
