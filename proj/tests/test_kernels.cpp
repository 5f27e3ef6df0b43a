#include <cmath>

#include "colombeau/kernels.hpp"
#include "colombeau/quadrature.hpp"
#include "colombeau/testing.hpp"
#include "doctest.h"

using namespace colombeau;

namespace {

Expr poly1(std::vector<std::pair<int, double>> terms) {
  PolyN p(1);
  for (auto& [k, v] : terms) p.add_term(MultiIndex(1, {k}), v);
  return Expr::polynomial(p);
}

// smooth compactly perturbed polynomial (a "sin-like" arch plus a line)
Expr bump_perturbed_poly() {
  PolyN half(1);
  half.add_term(MultiIndex(1, {1}), 0.5);
  Expr arch = Expr::bump(Expr::polynomial(half));  // supported on [-2, 2]
  return Expr::sum({poly1({{0, 0.3}, {1, 0.8}}), Expr::product({arch, poly1({{1, 1.2}, {2, -0.4}})})});
}

}  // namespace

TEST_CASE("lambda partition satisfies the five defining properties") {
  std::vector<double> eseq = geometric_eps_seq(8);
  LambdaPartition lp = lambda_partition(eseq);
  const int J = lp.size();

  // sum to 1 on [eps_J, 1]
  for (double e = lp.eps_min(); e <= 1.0; e += (1.0 - lp.eps_min()) / 97) {
    double s = 0;
    for (int j = 1; j <= J; ++j) s += lp.lambda(j, e);
    CHECK(std::abs(s - 1.0) < 1e-10);
  }
  // lambda_j(eps_j) = 1 and lambda_1 = 1 on [eps_1, 1]
  for (int j = 1; j <= J; ++j) CHECK(lp.lambda(j, eseq[j - 1]) == doctest::Approx(1.0).epsilon(1e-12));
  for (double e : {0.5, 0.7, 0.9, 1.0}) CHECK(lp.lambda(1, e) == doctest::Approx(1.0).epsilon(1e-12));
  // support: zero outside [eps_{j+1}, eps_{j-1}], positive inside
  for (int j = 2; j < J; ++j) {
    double lo = eseq[j], hi = eseq[j - 2];
    CHECK(lp.lambda(j, hi + 0.01 * (1 - hi)) == 0.0);
    CHECK(lp.lambda(j, lo * 0.99) == 0.0);
    for (double t : {0.1, 0.35, 0.65, 0.9}) {
      double e = lo + t * (hi - lo);
      CHECK(lp.lambda(j, e) > 0.0);
    }
  }
  CHECK_THROWS_AS(lambda_partition({0.5, 0.6}), ConstructionError);
  CHECK_THROWS_AS(lambda_partition({1.5, 0.5}), ConstructionError);
}

TEST_CASE("model kernel: support, sup scaling, delta pairing") {
  Mollifier m = build_mollifier(0, 1, false);
  SmoothingKernel k = model_kernel(m);
  double r = m.support_radius();

  double eps = 0.125, x = 0.3;
  TestFunction tf = k.at(eps, {x, 0});
  CHECK(tf.support().iv[0].lo == doctest::Approx(x - eps * r).epsilon(1e-13));
  CHECK(tf.support().iv[0].hi == doctest::Approx(x + eps * r).epsilon(1e-13));

  double sup_phi = m.phi().evaluate({0, 0});  // bump peak is at 0
  CHECK(tf.evaluate({x, 0}) == doctest::Approx(sup_phi / eps).epsilon(1e-12));

  // <delta_0, k(eps,x)> = eps^{-1} phi(-x/eps)
  CHECK(tf.evaluate({0, 0}) == doctest::Approx(m.phi().evaluate({-x / eps, 0}) / eps).epsilon(1e-12));
}

TEST_CASE("model kernel x-derivative matches finite differences") {
  SmoothingKernel k = model_kernel(build_mollifier(2, 1, false));
  SmoothingKernel dk = k.dx(0);
  double eps = 0.2, h = 1e-6;
  for (double x : {-0.4, 0.0, 0.55}) {
    for (double y : {-0.3, 0.1, 0.2}) {
      double sym = dk.at(eps, {x, 0}).evaluate({y, 0});
      double fd = (k.at(eps, {x + h, 0}).evaluate({y, 0}) - k.at(eps, {x - h, 0}).evaluate({y, 0})) /
                  (2 * h);
      CHECK(sym == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("LSK1 and LSK2 hold for the model kernel") {
  SmoothingKernel k = model_kernel(build_mollifier(1, 1, false));
  CompactProbe K(Box::cube(1, -0.5, 0.5), k.domain(), 5);
  std::vector<double> eps = eps_grid(1e-2, 0.3, 8);

  auto lsk1 = check_lsk(k, LskCheck::LSK1, K, {}, eps);
  CHECK(lsk1.passed());
  CHECK(lsk1.extra <= 1.05 * k.support_constant());

  LskParams p2;
  p2.alpha = MultiIndex::zero(1);
  p2.beta = MultiIndex::zero(1);
  p2.two_sided = true;
  p2.slope_tol = 0.02;  // closed-form scaling is exact
  auto lsk2 = check_lsk(k, LskCheck::LSK2, K, p2, eps);
  CHECK(lsk2.passed());
  CHECK(lsk2.slope == doctest::Approx(-1.0).epsilon(0.02));

  // (d_x + d_y) annihilates the model kernel: exact-zero fast path
  LskParams p2a;
  p2a.alpha = MultiIndex(1, {1});
  p2a.beta = MultiIndex::zero(1);
  auto zero = check_lsk(k, LskCheck::LSK2, K, p2a, eps);
  CHECK(zero.passed());
  CHECK(zero.exact_zero);

  SUBCASE("beta = 1 steepens the rate to -n-1") {
    LskParams p;
    p.beta = MultiIndex(1, {1});
    p.alpha = MultiIndex::zero(1);
    auto rep = check_lsk(k, LskCheck::LSK2, K, p, eps);
    CHECK(rep.slope == doctest::Approx(-2.0).epsilon(0.08));
  }
}

TEST_CASE("LSK3: Taylor remainder rate and polynomial exactness") {
  for (int q : {0, 1, 2}) {
    // asymmetric shape: the (q+1)-st moment of phi is genuinely nonzero,
    // so f = y^{q+1} exposes the exact Taylor remainder c eps^{q+1}
    Mollifier m = build_mollifier(q, 1, false, 0.7, 0.25);
    SmoothingKernel k = model_kernel(m);
    CompactProbe K(Box::cube(1, -0.25, 0.25), k.domain(), 3);
    std::vector<double> eps = eps_grid(4e-3, 0.3, 9);

    Expr mono = Expr::polynomial(PolyN::monomial_term(1, MultiIndex(1, {q + 1}), 1.0));
    double c = integrate(m.phi().times(mono)).value;  // quadrature oracle
    REQUIRE(std::abs(c) > 1e-4);

    LskParams p;
    p.alpha = MultiIndex::zero(1);
    p.f = poly1({{q + 1, 1.0}});
    auto rep = check_lsk(k, LskCheck::LSK3, K, p, eps);
    CHECK(rep.passed());
    CHECK(rep.slope == doctest::Approx(q + 1.0).epsilon(0.05 / (q + 1)));

    double eps0 = eps[0];
    TestFunction tf = k.at(eps0, {0, 0});
    double I = integrate(Expr::product({p.f, tf.expr()}), tf.support()).value;
    CHECK(I == doctest::Approx(c * std::pow(eps0, q + 1)).epsilon(1e-8));

    // a centered (even) mollifier reproduces y^{q+1} exactly by parity
    auto degenerate = check_lsk(model_kernel(build_mollifier(q, 1, false)), LskCheck::LSK3, K, p, eps);
    CHECK(degenerate.passed());

    // polynomials of degree <= q are reproduced to quadrature tolerance
    LskParams pe;
    pe.alpha = MultiIndex::zero(1);
    pe.f = poly1({{0, 0.7}, {q, 0.5}});
    auto exact = check_lsk(k, LskCheck::LSK3, K, pe, eps);
    CHECK(exact.passed());
    CHECK(exact.exact_zero);
  }
}

TEST_CASE("glued kernel equals the model kernel for small eps and stays in the region") {
  SmoothingKernel k = model_kernel(build_mollifier(1, 1, false));
  Domain d = Domain::box(Box::cube(1, -2, 2));
  LambdaPartition lp = lambda_partition(geometric_eps_seq(12));
  SmoothingKernel glued = glue_to_domain(k, d, lp);

  double agree = glue_agreement_eps(d, lp, k.support_constant(), Box::cube(1, -0.5, 0.5));
  REQUIRE(agree > 1e-2);
  double eps = 0.8 * agree;
  for (double x : {-0.5, 0.0, 0.4}) {
    TestFunction a = glued.at(eps, {x, 0});
    TestFunction b = k.at(eps, {x, 0});
    for (double y = x - 2 * eps; y <= x + 2 * eps; y += eps / 7)
      CHECK(std::abs(a.evaluate({y, 0}) - b.evaluate({y, 0})) <= 1e-14);
  }

  // eps near 1, x near the boundary: support stays inside the region
  TestFunction edge = glued.at(0.9, {1.9, 0});
  CHECK(edge.support().iv[0].hi <= 2.0 + 1e-12);
  for (double y : {2.01, 2.3, 2.02}) CHECK(edge.evaluate({y, 0}) == 0.0);

  // LSK3 order is preserved through the gluing
  CompactProbe K(Box::cube(1, -0.5, 0.5), d, 3);
  LskParams p;
  p.alpha = MultiIndex::zero(1);
  p.f = poly1({{3, 1.0}});
  auto rep = check_lsk(glued, LskCheck::LSK3, K, p, eps_grid(4e-3, 0.25, 8));
  CHECK(rep.passed());
  CHECK(rep.slope >= glued.order() + 1 - 0.2);
}

TEST_CASE("restrict-extend agrees with the source on K and the background outside") {
  Domain U = Domain::box(Box(1, {-2.0}, {0.5}));
  Domain V = Domain::box(Box(1, {-1.0}, {2.0}));
  SmoothingKernel base = model_kernel(build_mollifier(1, 1, false));
  LambdaPartition lp = lambda_partition(geometric_eps_seq(12));
  SmoothingKernel on_U = glue_to_domain(base, U, lp);
  SmoothingKernel on_V = glue_to_domain(base, V, lp);

  CompactProbe K(Box(1, {-0.4}, {0.0}), U.intersect(V), 5);
  SmoothingKernel blended = restrict_extend(on_U, K, V, on_V);

  double eps = 0.45 * blended.agreement_eps();
  for (const Point& x : K.grid) {
    TestFunction a = blended.at(eps, x);
    TestFunction b = on_U.at(eps, x);
    for (double y = x[0] - 2 * eps; y <= x[0] + 2 * eps; y += eps / 5)
      CHECK(std::abs(a.evaluate({y, 0}) - b.evaluate({y, 0})) <= 1e-14);
  }
  // far from supp chi the background is reproduced exactly
  for (double x : {1.2, 1.5}) {
    TestFunction a = blended.at(0.1, {x, 0});
    TestFunction b = on_V.at(0.1, {x, 0});
    for (double y = x - 0.3; y <= x + 0.3; y += 0.05)
      CHECK(a.evaluate({y, 0}) == b.evaluate({y, 0}));
  }
  // blended region still satisfies the LSK2 rate
  CompactProbe blend_zone(Box(1, {-0.1}, {0.6}), V, 5);
  LskParams p;
  p.alpha = MultiIndex::zero(1);
  p.beta = MultiIndex(1, {1});
  auto rep = check_lsk(blended, LskCheck::LSK2, blend_zone, p, eps_grid(4e-3, 0.2, 8));
  CHECK(rep.slope >= -1 - 1 - 0.15);
}

TEST_CASE("derive_kernel: translation invariance kills constant fields") {
  SmoothingKernel k = model_kernel(build_mollifier(1, 1, false));
  VectorField e1 = VectorField::coordinate_field(1, 0, Domain::whole_space(1));
  SmoothingKernel dk = derive_kernel(k, e1);
  CHECK(dk.vanishing_class());
  for (double eps : {0.3, 0.05}) {
    for (double x : {-0.2, 0.6}) {
      TestFunction tf = dk.at(eps, {x, 0});
      for (double y = x - 2 * eps; y <= x + 2 * eps; y += eps / 3)
        CHECK(std::abs(tf.evaluate({y, 0})) <= 1e-12);
    }
  }
}

TEST_CASE("derive_kernel with a nonconstant field passes LSK3' and LSK2") {
  SmoothingKernel k = model_kernel(build_mollifier(1, 1, false));
  // X = (1 + 0.5 y) d/dy: nonzero divergence, nonconstant coefficient
  VectorField X({poly1({{0, 1.0}, {1, 0.5}})}, Domain::whole_space(1));
  SmoothingKernel dk = derive_kernel(k, X);
  CompactProbe K(Box::cube(1, -0.3, 0.3), Domain::whole_space(1), 3);
  std::vector<double> eps = eps_grid(4e-3, 0.25, 8);

  LskParams p3;
  p3.alpha = MultiIndex::zero(1);
  p3.f = bump_perturbed_poly();
  auto lsk3p = check_lsk(dk, LskCheck::LSK3Prime, K, p3, eps);
  CHECK(lsk3p.passed());
  CHECK(lsk3p.slope >= k.order() + 0.8);

  LskParams p2;
  p2.alpha = MultiIndex::zero(1);
  p2.beta = MultiIndex::zero(1);
  auto lsk2 = check_lsk(dk, LskCheck::LSK2, K, p2, eps);
  CHECK(lsk2.slope >= -1 - 0.15);
}

TEST_CASE("lsk7 kernel takes the prescribed values at (eps_j, x_j)") {
  SmoothingKernel phi0 = model_kernel(build_mollifier(1, 1, false));
  VectorField e1 = VectorField::coordinate_field(1, 0, Domain::whole_space(1));
  std::map<MultiIndex, SmoothingKernel, bool (*)(const MultiIndex&, const MultiIndex&)> phis(
      multi_index_less);
  phis.insert({MultiIndex(1, {1}), derive_kernel(phi0, e1)});
  std::vector<double> eseq = geometric_eps_seq(10);
  std::vector<Point> xseq;
  for (int j = 0; j < 10; ++j) xseq.push_back({0.05 * (j % 3), 0});
  LambdaPartition lp = lambda_partition(eseq);

  SmoothingKernel psi = lsk7_build(phi0, phis, MultiIndex(1, {1}), eseq, xseq, lp);
  for (int j : {1, 3, 6}) {
    double ej = eseq[j - 1];
    const Point& xj = xseq[j - 1];
    TestFunction a = psi.at(ej, xj);
    TestFunction b = phi0.at(ej, xj);
    double scale = 1.0 / ej;  // kernel magnitude at this eps
    for (double y = xj[0] - 1.5 * ej; y <= xj[0] + 1.5 * ej; y += ej / 6)
      CHECK(std::abs(a.evaluate({y, 0}) - b.evaluate({y, 0})) <= 1e-13 * scale);
  }

  CompactProbe K(Box::cube(1, -0.2, 0.2), Domain::whole_space(1), 3);
  std::vector<double> eps = eps_grid(4e-3, 0.2, 8);
  LskParams p2;
  p2.alpha = MultiIndex::zero(1);
  p2.beta = MultiIndex(1, {1});
  auto lsk2 = check_lsk(psi, LskCheck::LSK2, K, p2, eps);
  CHECK(lsk2.slope >= -1 - 1 - 0.15);

  LskParams p3;
  p3.alpha = MultiIndex::zero(1);
  p3.f = poly1({{3, 1.0}, {1, 0.5}});
  auto lsk3 = check_lsk(psi, LskCheck::LSK3, K, p3, eps);
  CHECK(lsk3.passed());
  CHECK(lsk3.slope >= phi0.order() + 0.8);

  CHECK_THROWS_AS(lsk7_build(phi0, phis, MultiIndex(1, {1}), {0.9, 0.95}, {{0, 0}, {0, 0}},
                             lambda_partition({0.9, 0.5})),
                  ConstructionError);
}

TEST_CASE("pullback kernel: identity, translation, nonlinear mass preservation") {
  SmoothingKernel k = model_kernel(build_mollifier(0, 1, false));

  SUBCASE("identity pullback is evaluation-equal") {
    Diffeomorphism id = Diffeomorphism::identity(Domain::box(Box::cube(1, -3, 3)));
    SmoothingKernel pk = pullback_kernel(id, k);
    for (double y : {-0.1, 0.2, 0.33})
      CHECK(pk.evaluate(0.2, {0.1, 0}, {y, 0}) ==
            doctest::Approx(k.evaluate(0.2, {0.1, 0}, {y, 0})).epsilon(1e-12));
  }

  SUBCASE("translation shifts both slots and preserves mass exactly") {
    double a = 0.7;
    Diffeomorphism tr = Diffeomorphism::affine({1, 0, 0, 1}, {a, 0}, Domain::box(Box::cube(1, -3, 3)));
    SmoothingKernel pk = pullback_kernel(tr, k);
    for (double y : {-0.2, 0.0, 0.15})
      CHECK(pk.evaluate(0.2, {0.1, 0}, {y, 0}) ==
            doctest::Approx(k.evaluate(0.2, {0.1 + a, 0}, {y + a, 0})).epsilon(1e-12));
    TestFunction tf = pk.at(0.2, {0.1, 0});
    CHECK(integrate(tf).value == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("nonlinear shear preserves unit mass by the substitution rule") {
    SmoothingKernel k2 = model_kernel(build_mollifier(1, 2, false));
    PolyN g(2);
    g.add_term(MultiIndex(2, {0, 1}), 0.2);
    g.add_term(MultiIndex(2, {0, 3}), -0.04);
    Diffeomorphism mu = Diffeomorphism::shear(Expr::polynomial(g), Domain::box(Box::cube(2, -3, 3)));
    SmoothingKernel pk = pullback_kernel(mu, k2);
    TestFunction tf = pk.at(0.25, {0.2, -0.3});
    CHECK(integrate(tf).value == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pullback functoriality: (mu2 o mu1)^* = mu1^* o mu2^*") {
  SmoothingKernel k = model_kernel(build_mollifier(0, 1, false));
  Domain d = Domain::box(Box::cube(1, -4, 4));
  Diffeomorphism mu1 = Diffeomorphism::affine({0.8, 0, 0, 1}, {0.1, 0}, d);
  Diffeomorphism mu2 = Diffeomorphism::affine({1.25, 0, 0, 1}, {-0.2, 0}, mu1.target());
  Diffeomorphism comp = mu2.after(mu1);

  SmoothingKernel lhs = pullback_kernel(comp, k);
  SmoothingKernel rhs = pullback_kernel(mu1, pullback_kernel(mu2, k));
  for (double x : {-0.3, 0.4}) {
    for (double y = x - 0.5; y <= x + 0.5; y += 0.11)
      CHECK(std::abs(lhs.evaluate(0.2, {x, 0}, {y, 0}) - rhs.evaluate(0.2, {x, 0}, {y, 0})) <= 1e-10);
  }
}

TEST_CASE("pullback preserves the declared order in the LSK3 verifier") {
  SmoothingKernel k = model_kernel(build_mollifier(2, 1, false));
  Domain d = Domain::box(Box::cube(1, -4, 4));
  Diffeomorphism mu = Diffeomorphism::affine({0.75, 0, 0, 1}, {0.2, 0}, d);
  SmoothingKernel pk = pullback_kernel(mu, k);
  CHECK(pk.order() == k.order());

  CompactProbe K(Box::cube(1, -0.3, 0.3), mu.source(), 3);
  LskParams p;
  p.alpha = MultiIndex::zero(1);
  p.f = poly1({{4, 1.0}});
  auto rep = check_lsk(pk, LskCheck::LSK3, K, p, eps_grid(4e-3, 0.2, 8));
  CHECK(rep.passed());
  CHECK(rep.slope >= k.order() + 0.8);
}

TEST_CASE("eps grids outside the kernel validity are rejected") {
  SmoothingKernel k = model_kernel(build_mollifier(0, 1, false));
  LambdaPartition lp = lambda_partition(geometric_eps_seq(4));  // eps_min = 1/16
  SmoothingKernel glued = glue_to_domain(k, Domain::box(Box::cube(1, -2, 2)), lp);
  CHECK_THROWS_AS(glued.at(0.01, {0, 0}), DomainError);
  CHECK_THROWS_AS(k.at(1.5, {0, 0}), DomainError);
}
