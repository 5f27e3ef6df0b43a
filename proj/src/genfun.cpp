#include "colombeau/genfun.hpp"

#include <cmath>
#include <functional>

#include "colombeau/quadrature.hpp"

namespace colombeau {

// ---------------------------------------------------------------------------
// Distribution

Distribution Distribution::delta(int n, const Point& a) {
  Distribution d;
  d.kind_ = DistKind::Delta;
  d.dim_ = n;
  d.point_ = a;
  return d;
}

Distribution Distribution::delta_derivative(const MultiIndex& alpha, const Point& a) {
  Distribution d;
  d.kind_ = DistKind::DeltaDerivative;
  d.dim_ = alpha.dim;
  d.alpha_ = alpha;
  d.point_ = a;
  return d;
}

Distribution Distribution::heaviside(int n, int axis, double threshold) {
  Distribution d;
  d.kind_ = DistKind::Heaviside;
  d.dim_ = n;
  d.half_ = {axis, threshold, true};
  d.has_region_ = true;
  return d;
}

Distribution Distribution::locally_integrable(Expr density, std::optional<HalfSpace> region) {
  Distribution d;
  d.kind_ = DistKind::LocallyIntegrable;
  d.dim_ = density.dim();
  d.density_ = std::move(density);
  if (region) {
    d.half_ = *region;
    d.has_region_ = true;
  }
  return d;
}

Distribution Distribution::principal_value_1_over_x() {
  Distribution d;
  d.kind_ = DistKind::PrincipalValue;
  d.dim_ = 1;
  return d;
}

Distribution Distribution::linear_combination(std::vector<std::pair<double, Distribution>> terms) {
  if (terms.empty()) throw ConstructionError("linear combination needs at least one term");
  Distribution d;
  d.kind_ = DistKind::LinearCombination;
  d.dim_ = terms[0].second.dim();
  for (auto& [c, u] : terms) {
    if (u.dim() != d.dim_) throw DimensionError("linear combination of mixed dimensions");
    d.terms_.push_back({c, std::make_shared<const Distribution>(std::move(u))});
  }
  return d;
}

Distribution Distribution::lie_derivative(const VectorField& X, Distribution u) {
  Distribution d;
  d.kind_ = DistKind::LieDerivative;
  d.dim_ = u.dim();
  if (X.dim() != u.dim()) throw DimensionError("vector field/distribution dimension mismatch");
  d.field_ = std::make_shared<const VectorField>(X);
  d.child_ = std::make_shared<const Distribution>(std::move(u));
  return d;
}

double pair(const Distribution& u, const TestFunction& phi) {
  if (u.dim() != phi.dim()) throw DimensionError("pairing dimension mismatch");
  switch (u.kind()) {
    case DistKind::Delta:
      return phi.evaluate(u.point());
    case DistKind::DeltaDerivative: {
      double sign = u.alpha().order() % 2 == 0 ? 1.0 : -1.0;
      return sign * phi.derivative(u.alpha()).evaluate(u.point());
    }
    case DistKind::Heaviside: {
      Box b = phi.support();
      const HalfSpace& h = u.halfspace();
      if (h.positive)
        b.iv[h.axis].lo = std::max(b.iv[h.axis].lo, h.threshold);
      else
        b.iv[h.axis].hi = std::min(b.iv[h.axis].hi, h.threshold);
      return integrate(phi.expr(), b).value;
    }
    case DistKind::LocallyIntegrable: {
      Box b = phi.support();
      if (u.has_region()) {
        const HalfSpace& h = u.halfspace();
        if (h.positive)
          b.iv[h.axis].lo = std::max(b.iv[h.axis].lo, h.threshold);
        else
          b.iv[h.axis].hi = std::min(b.iv[h.axis].hi, h.threshold);
      }
      return integrate(Expr::product({u.density(), phi.expr()}), b).value;
    }
    case DistKind::PrincipalValue: {
      const Box& s = phi.support();
      double R = std::max(std::abs(s.iv[0].lo), std::abs(s.iv[0].hi));
      if (R <= 0) return 0;
      TestFunction dphi = phi.derivative(0);
      double at0 = 2 * dphi.evaluate({0, 0});
      auto g = [&](const Point& t) {
        double s0 = t[0];
        if (s0 < 1e-8) return at0;  // removable singularity, series value
        return (phi.evaluate({s0, 0}) - phi.evaluate({-s0, 0})) / s0;
      };
      return integrate(g, Box(1, {0.0}, {R}), 1).value;
    }
    case DistKind::LinearCombination: {
      double r = 0;
      for (auto& [c, v] : u.terms()) r += c * pair(*v, phi);
      return r;
    }
    case DistKind::LieDerivative:
      return -pair(u.child(), u.field().lie_on_test_function(phi));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// GenFun nodes

struct GenNode {
  GenKind kind = GenKind::EmbedSmooth;
  std::shared_ptr<const Distribution> dist;
  Expr smooth;
  double value = 1;
  std::vector<GenFun> children;
  std::shared_ptr<const Diffeomorphism> mu, mu_inv;
  std::shared_ptr<const VectorField> field;
  std::vector<Expr> cutoffs;   // chi_j(x)
  std::vector<Expr> plateaus;  // theta_j(y)
  std::vector<int> piece_of;
  int max_lie_depth = 0;
};

GenFun GenFun::make(GenNodePtr node, Domain d) {
  GenFun g;
  g.node_ = std::move(node);
  g.domain_ = std::move(d);
  return g;
}

namespace {

GenFun wrap_node(GenNode n, Domain d) {
  return GenFun::make(std::make_shared<const GenNode>(std::move(n)), std::move(d));
}

}  // namespace

int GenFun::lie_depth() const { return node_ ? node_->max_lie_depth : 0; }

GenFun GenFun::iota(Distribution u, Domain domain) {
  if (u.dim() != domain.dim()) throw DimensionError("iota dimension mismatch");
  GenNode n;
  n.kind = GenKind::EmbedDist;
  n.dist = std::make_shared<const Distribution>(std::move(u));
  return wrap_node(std::move(n), std::move(domain));
}

GenFun GenFun::sigma(Expr f, Domain domain) {
  if (f.dim() != domain.dim()) throw DimensionError("sigma dimension mismatch");
  GenNode n;
  n.kind = GenKind::EmbedSmooth;
  n.smooth = std::move(f);
  return wrap_node(std::move(n), std::move(domain));
}

GenFun GenFun::sum(std::vector<GenFun> children) {
  if (children.empty()) throw ConstructionError("sum needs at least one operand");
  GenNode n;
  n.kind = GenKind::Sum;
  Domain d = children[0].domain();
  for (auto& c : children) n.max_lie_depth = std::max(n.max_lie_depth, c.lie_depth());
  n.children = std::move(children);
  return wrap_node(std::move(n), std::move(d));
}

GenFun GenFun::product(std::vector<GenFun> children) {
  if (children.empty()) throw ConstructionError("product needs at least one operand");
  if (children.size() == 1) return children[0];
  GenNode n;
  n.kind = GenKind::Product;
  Domain d = children[0].domain();
  std::vector<GenFun> flat;
  for (auto& c : children) {
    n.max_lie_depth = std::max(n.max_lie_depth, c.lie_depth());
    if (c.node().kind == GenKind::Product) {
      for (auto& g : c.node().children) flat.push_back(g);
    } else {
      flat.push_back(c);
    }
  }
  n.children = std::move(flat);
  return wrap_node(std::move(n), std::move(d));
}

GenFun GenFun::scale(double c, GenFun child) {
  GenNode n;
  n.kind = GenKind::Scale;
  n.value = c;
  n.max_lie_depth = child.lie_depth();
  Domain d = child.domain();
  n.children = {std::move(child)};
  return wrap_node(std::move(n), std::move(d));
}

GenFun GenFun::pullback(const Diffeomorphism& mu, GenFun R) {
  if (!R.domain().contains_domain(mu.target()) && !R.domain().is_whole_space())
    throw DomainError("pullback: generalized function is not defined on the target");
  GenNode n;
  n.kind = GenKind::Pullback;
  n.mu = std::make_shared<const Diffeomorphism>(mu);
  n.mu_inv = std::make_shared<const Diffeomorphism>(mu.inverted());
  n.max_lie_depth = R.lie_depth();
  n.children = {std::move(R)};
  return wrap_node(std::move(n), mu.source());
}

GenFun GenFun::lie_derivative(const VectorField& X, GenFun R) {
  if (X.dim() != R.dim()) throw DimensionError("lie derivative dimension mismatch");
  if (R.lie_depth() + 1 > 3)
    throw ConstructionError("lie derivative nesting is capped at depth 3");
  GenNode n;
  n.kind = GenKind::Lie;
  n.field = std::make_shared<const VectorField>(X);
  n.max_lie_depth = R.lie_depth() + 1;
  Domain d = R.domain();
  n.children = {std::move(R)};
  return wrap_node(std::move(n), std::move(d));
}

GenFun GenFun::sheaf_glue(std::vector<GenFun> pieces, std::vector<Domain> cover,
                          std::vector<Expr> cutoffs, std::vector<Expr> plateaus,
                          std::vector<int> piece_of) {
  if (pieces.empty() || pieces.size() != cover.size())
    throw ConstructionError("sheaf glue: pieces and cover must align");
  if (cutoffs.size() != plateaus.size() || cutoffs.size() != piece_of.size())
    throw ConstructionError("sheaf glue: cutoffs, plateaus and assignment must align");
  int dim = pieces[0].dim();
  for (size_t j = 0; j < cutoffs.size(); ++j) {
    int p = piece_of[j];
    if (p < 0 || p >= static_cast<int>(pieces.size()))
      throw ConstructionError("sheaf glue: partition references an unknown piece");
    if (!cover[p].contains_box(cutoffs[j].support()))
      throw ConstructionError("sheaf glue: cutoff support escapes its cover set");
    // theta_j must be exactly 1 on supp chi_j
    Box probe = cutoffs[j].support();
    for (const Point& y : probe.grid(dim == 1 ? 17 : 7))
      if (std::abs(plateaus[j].evaluate(y) - 1.0) > 1e-12)
        throw ConstructionError("sheaf glue: plateau is not 1 on the cutoff support");
  }
  // union of the cover as the glued domain (hull of the overlapping boxes)
  Box hull = Box::empty(dim);
  for (const Domain& u : cover) hull = hull.hull(u.bounding_box());
  GenNode n;
  n.kind = GenKind::SheafGlue;
  for (auto& p : pieces) n.max_lie_depth = std::max(n.max_lie_depth, p.lie_depth());
  n.children = std::move(pieces);
  n.cutoffs = std::move(cutoffs);
  n.plateaus = std::move(plateaus);
  n.piece_of = std::move(piece_of);
  return wrap_node(std::move(n), Domain::box(hull, 16));
}

GenFun GenFun::restrict(const Domain& sub) const {
  if (!domain_.contains_domain(sub))
    throw DomainError("restriction target is not a subdomain");
  GenFun g = *this;
  g.domain_ = sub;
  return g;
}

// ---------------------------------------------------------------------------
// exact composite derivatives

namespace {

double comp(const GenNode& n, const SmoothingKernel& base, const std::vector<SmoothingKernel>& dirs,
            double eps, const Point& x, const MultiIndex& gamma);

// product fold over a span of factors
double prod_comp(const std::vector<GenFun>& factors, size_t from, const SmoothingKernel& base,
                 const std::vector<SmoothingKernel>& dirs, double eps, const Point& x,
                 const MultiIndex& gamma) {
  if (from + 1 == factors.size())
    return comp(factors[from].node(), base, dirs, eps, x, gamma);
  const size_t k = dirs.size();
  double total = 0;
  for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
    std::vector<SmoothingKernel> dirsA, dirsB;
    for (size_t i = 0; i < k; ++i) (mask >> i & 1 ? dirsA : dirsB).push_back(dirs[i]);
    for (const MultiIndex& beta : multi_indices_below(gamma)) {
      double a = comp(factors[from].node(), base, dirsA, eps, x, beta);
      if (a == 0) continue;
      double b = prod_comp(factors, from + 1, base, dirsB, eps, x, gamma.minus(beta));
      total += binomial(gamma, beta) * a * b;
    }
  }
  return total;
}

double comp(const GenNode& n, const SmoothingKernel& base, const std::vector<SmoothingKernel>& dirs,
            double eps, const Point& x, const MultiIndex& gamma) {
  switch (n.kind) {
    case GenKind::EmbedDist: {
      if (dirs.size() >= 2) return 0;
      const SmoothingKernel& ker = dirs.empty() ? base : dirs[0];
      TestFunction tf = gamma.order() == 0 ? ker.at(eps, x) : ker.dx(gamma).at(eps, x);
      return pair(*n.dist, tf);
    }
    case GenKind::EmbedSmooth:
      if (!dirs.empty()) return 0;
      return n.smooth.derivative(gamma).evaluate(x);
    case GenKind::Sum: {
      double r = 0;
      for (auto& c : n.children) r += comp(c.node(), base, dirs, eps, x, gamma);
      return r;
    }
    case GenKind::Scale:
      return n.value * comp(n.children[0].node(), base, dirs, eps, x, gamma);
    case GenKind::Product:
      return prod_comp(n.children, 0, base, dirs, eps, x, gamma);
    case GenKind::Pullback: {
      // pushforward all kernel slots, then iterate the chain rule through mu
      SmoothingKernel pushed_base = pullback_kernel(n.mu_inv, base, base.support_constant());
      std::vector<SmoothingKernel> pushed_dirs;
      for (auto& d : dirs) pushed_dirs.push_back(pullback_kernel(n.mu_inv, d, d.support_constant()));
      const int dim = n.mu->dim();
      std::function<double(const MultiIndex&, const MultiIndex&)> chain =
          [&](const MultiIndex& delta, const MultiIndex& g) -> double {
        if (g.order() == 0)
          return comp(n.children[0].node(), pushed_base, pushed_dirs, eps, n.mu->apply(x), delta);
        int axis = 0;
        while (g.e[axis] == 0) ++axis;
        MultiIndex gp = g;
        gp.e[axis] -= 1;
        double total = 0;
        for (int j = 0; j < dim; ++j) {
          Expr dmu = n.mu->forward()[j].derivative(axis);
          if (dmu.is_zero()) continue;
          for (const MultiIndex& beta : multi_indices_below(gp)) {
            double inner = chain(delta.plus(j), beta);
            if (inner == 0) continue;
            total += binomial(gp, beta) * inner * dmu.derivative(gp.minus(beta)).evaluate(x);
          }
        }
        return total;
      };
      return chain(MultiIndex::zero(gamma.dim), gamma);
    }
    case GenKind::Lie: {
      const VectorField& X = *n.field;
      const GenNode& child = n.children[0].node();
      double total = 0;
      // D_X^x of the composite, expanded with Leibniz over the coefficients
      for (int j = 0; j < X.dim(); ++j) {
        if (X.components[j].is_zero()) continue;
        for (const MultiIndex& beta : multi_indices_below(gamma)) {
          double coef = X.components[j].derivative(beta).evaluate(x);
          if (coef == 0) continue;
          total += binomial(gamma, beta) *
                   coef * comp(child, base, dirs, eps, x, gamma.minus(beta).plus(j));
        }
      }
      // - d1 in the direction (D_X^x + L_X^y) base
      std::vector<SmoothingKernel> extended = dirs;
      extended.push_back(derive_kernel(base, X));
      total -= comp(child, base, extended, eps, x, gamma);
      // - replacement of each direction by its derived kernel
      for (size_t i = 0; i < dirs.size(); ++i) {
        std::vector<SmoothingKernel> replaced = dirs;
        replaced[i] = derive_kernel(dirs[i], X);
        total -= comp(child, base, replaced, eps, x, gamma);
      }
      return total;
    }
    case GenKind::SheafGlue: {
      double total = 0;
      for (size_t j = 0; j < n.cutoffs.size(); ++j) {
        const GenNode& piece = n.children[n.piece_of[j]].node();
        SmoothingKernel weighted_base = kernel_y_weight(n.plateaus[j], base);
        std::vector<SmoothingKernel> weighted_dirs;
        for (auto& d : dirs) weighted_dirs.push_back(kernel_y_weight(n.plateaus[j], d));
        for (const MultiIndex& beta : multi_indices_below(gamma)) {
          double coef = n.cutoffs[j].derivative(beta).evaluate(x);
          if (coef == 0) continue;
          total += binomial(gamma, beta) *
                   coef * comp(piece, weighted_base, weighted_dirs, eps, x, gamma.minus(beta));
        }
      }
      return total;
    }
  }
  return 0;
}

}  // namespace

double composite_derivative(const GenFun& R, const SmoothingKernel& base,
                            const std::vector<SmoothingKernel>& dirs, double eps, const Point& x,
                            const MultiIndex& gamma) {
  if (!R.valid()) throw ConstructionError("composite derivative of an empty generalized function");
  return comp(R.node(), base, dirs, eps, x, gamma);
}

double GenFun::evaluate(const TestFunction& phi, const Point& x) const {
  SmoothingKernel k = constant_kernel(phi, domain_);
  return composite_derivative(*this, k, {}, 0.5, x, MultiIndex::zero(dim()));
}

double GenFun::d1(const TestFunction& phi, const Point& x, const TestFunction& psi) const {
  SmoothingKernel k = constant_kernel(phi, domain_);
  SmoothingKernel dk = constant_kernel(psi, domain_);
  return composite_derivative(*this, k, {dk}, 0.5, x, MultiIndex::zero(dim()));
}

}  // namespace colombeau
