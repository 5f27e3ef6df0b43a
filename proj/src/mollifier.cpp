#include "colombeau/mollifier.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "colombeau/quadrature.hpp"

namespace colombeau {

namespace {

// base bump b((t-c)/w) in 1-d, b(|y - c e1|^2/w^2) in 2-d
// (support = closed ball of radius w centered at c e1)
Expr base_bump(int n, double w, double c) {
  if (n == 1) {
    PolyN t(1);
    t.add_term(MultiIndex(1, {1}), 1.0 / w);
    t.add_term(MultiIndex(1, {0}), -c / w);
    return Expr::bump(Expr::polynomial(t));
  }
  PolyN r2(2);
  r2.add_term(MultiIndex(2, {2, 0}), 1.0 / (w * w));
  r2.add_term(MultiIndex(2, {1, 0}), -2.0 * c / (w * w));
  r2.add_term(MultiIndex(2, {0, 0}), c * c / (w * w));
  r2.add_term(MultiIndex(2, {0, 2}), 1.0 / (w * w));
  return Expr::bump(Expr::polynomial(r2));
}

bool even_in_every_component(const MultiIndex& a) {
  for (int i = 0; i < a.dim; ++i)
    if (a.e[i] % 2 != 0) return false;
  return true;
}

const QuadratureOptions kTightQuad{1e-12, 1e-14, 0};

double base_moment(const Expr& B, const MultiIndex& delta, bool base_even) {
  if (base_even && !even_in_every_component(delta)) return 0;
  Expr mono = Expr::polynomial(PolyN::monomial_term(delta.dim, delta, 1.0));
  return integrate(Expr::product({mono, B}), B.support(), kTightQuad).value;
}

}  // namespace

double MomentReport::worst_violation() const {
  double worst = 0;
  for (auto& [beta, v] : moments) {
    if (beta.order() > order) continue;
    double target = beta.order() == 0 ? 1.0 : 0.0;
    worst = std::max(worst, std::abs(v - target));
  }
  return worst;
}

Mollifier build_mollifier(int q, int n, bool symmetric, double width, double center) {
  if (q < 0 || q > 6)
    throw ConstructionError("mollifier order q=" + std::to_string(q) + " outside supported range 0..6");
  if (n < 1 || n > 2) throw ConstructionError("mollifier dimension must be 1 or 2");
  if (width <= 0 || std::abs(center) + width > 1)
    throw ConstructionError("mollifier support must stay in the unit ball (|center| + width <= 1)");
  if (symmetric && center != 0)
    throw ConstructionError("a symmetric mollifier cannot have a shifted support");

  Expr B = base_bump(n, width, center);

  std::vector<MultiIndex> basis;
  for (const MultiIndex& g : multi_indices_up_to_order(n, q))
    if (!symmetric || g.order() % 2 == 0) basis.push_back(g);
  const int m = static_cast<int>(basis.size());

  Eigen::MatrixXd M(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = base_moment(B, basis[i].plus(basis[j]), center == 0);
      M(i, j) = v;
      M(j, i) = v;
    }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  double cond = svd.singularValues()(0) / svd.singularValues()(m - 1);
  if (!std::isfinite(cond) || cond > 1e12)
    throw ConstructionError("moment matrix ill-conditioned (cond " + std::to_string(cond) +
                            ") for q=" + std::to_string(q) + ", n=" + std::to_string(n));

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(0) = 1.0;  // basis[0] is the zero multi-index
  Eigen::VectorXd a = M.colPivHouseholderQr().solve(rhs);

  PolyN p(n);
  std::vector<std::pair<MultiIndex, double>> coeffs;
  for (int i = 0; i < m; ++i) {
    p.add_term(basis[i], a(i));
    coeffs.push_back({basis[i], a(i)});
  }
  TestFunction phi(Expr::product({Expr::polynomial(p), B}), B.support());
  Mollifier mol(phi, q, n, symmetric, coeffs);

  if (verify_moments(mol).worst_violation() > kMomentTol)
    throw ConstructionError("built mollifier violates its moment invariants (q=" + std::to_string(q) +
                            ", n=" + std::to_string(n) + ")");
  return mol;
}

MomentReport verify_moments(const Mollifier& m) {
  MomentReport rep;
  rep.order = m.order();
  for (const MultiIndex& beta : multi_indices_up_to_order(m.dim(), m.order() + 2)) {
    Expr mono = Expr::polynomial(PolyN::monomial_term(m.dim(), beta, 1.0));
    double v = integrate(m.phi().times(mono).expr(), m.phi().support(), kTightQuad).value;
    rep.moments.push_back({beta, v});
  }
  return rep;
}

}  // namespace colombeau
