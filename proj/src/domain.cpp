#include "colombeau/domain.hpp"

#include <cmath>

namespace colombeau {

// ---------------------------------------------------------------------------
// Domain

Domain Domain::box(const Box& b, int levels) { return boxes({b}, levels); }

Domain Domain::boxes(std::vector<Box> components, int levels) {
  if (components.empty()) throw DomainError("domain needs at least one component box");
  Domain d;
  d.dim_ = components[0].dim;
  d.levels_ = levels;
  for (auto& c : components) {
    if (!c.bounded() || c.is_empty()) throw DomainError("domain components must be bounded nonempty boxes");
    if (c.dim != d.dim_) throw DomainError("domain components of mixed dimension");
  }
  for (size_t i = 0; i < components.size(); ++i)
    for (size_t j = i + 1; j < components.size(); ++j)
      if (!components[i].intersect(components[j]).is_empty())
        throw DomainError("domain components must be disjoint");
  d.components_ = std::move(components);
  return d;
}

Domain Domain::whole_space(int n) {
  Domain d = box(Box::cube(n, -1e3, 1e3), 16);
  d.whole_ = true;
  return d;
}

std::vector<Box> Domain::exhaustion(int j) const {
  std::vector<Box> r;
  for (const Box& c : components_) {
    double half = 0.5 * c.max_width();
    for (int i = 0; i < dim_; ++i) half = std::min(half, 0.5 * c.iv[i].width());
    double margin = half * std::pow(2.0, -std::min(j, levels_));
    r.push_back(c.shrunk(margin));
  }
  return r;
}

bool Domain::contains(const Point& x) const {
  for (const Box& c : components_)
    if (c.contains(x)) return true;
  return false;
}

bool Domain::contains_box(const Box& b) const {
  for (const Box& c : components_)
    if (c.contains(b)) return true;
  return false;
}

double Domain::boundary_distance(const Point& x) const {
  double best = 0;
  for (const Box& c : components_) {
    if (!c.contains(x)) continue;
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim_; ++i) d = std::min({d, x[i] - c.iv[i].lo, c.iv[i].hi - x[i]});
    best = std::max(best, d);
  }
  return best;
}

double Domain::boundary_distance(const Box& b) const {
  double best = 0;
  for (const Box& c : components_) {
    if (!c.contains(b)) continue;
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim_; ++i) d = std::min({d, b.iv[i].lo - c.iv[i].lo, c.iv[i].hi - b.iv[i].hi});
    best = std::max(best, d);
  }
  return best;
}

bool Domain::contains_domain(const Domain& other) const {
  for (const Box& c : other.components_)
    if (!contains_box(c)) return false;
  return true;
}

Domain Domain::intersect(const Domain& other) const {
  std::vector<Box> parts;
  for (const Box& a : components_)
    for (const Box& b : other.components_) {
      Box c = a.intersect(b);
      if (!c.is_empty() && c.volume() > 0) parts.push_back(c);
    }
  return boxes(std::move(parts), levels_);
}

Box Domain::bounding_box() const {
  Box b = Box::empty(dim_);
  for (const Box& c : components_) b = b.hull(c);
  return b;
}

// ---------------------------------------------------------------------------
// CompactProbe

CompactProbe::CompactProbe(const Box& hull_box, const Domain& domain, int points_per_axis)
    : hull(hull_box), dim(hull_box.dim) {
  margin = domain.boundary_distance(hull_box);
  if (margin <= 0) throw DomainError("probe hull is not compactly contained in the domain");
  // odd counts keep the box center on the grid
  int m = points_per_axis > 0 ? points_per_axis : (dim == 1 ? 9 : 5);
  grid = hull.grid(m);
}

// ---------------------------------------------------------------------------
// Diffeomorphism

namespace {

std::vector<Point> validation_grid(const Domain& d) {
  std::vector<Point> pts;
  for (const Box& c : d.components()) {
    Box inner = c.shrunk(1e-3 * c.max_width());
    for (const Point& p : inner.grid(d.dim() == 1 ? 17 : 7)) pts.push_back(p);
  }
  return pts;
}

}  // namespace

Diffeomorphism::Diffeomorphism(std::vector<Expr> forward, std::vector<Expr> inverse, Domain source,
                               Domain target)
    : forward_(std::move(forward)), inverse_(std::move(inverse)), source_(std::move(source)),
      target_(std::move(target)) {
  int n = source_.dim();
  if (static_cast<int>(forward_.size()) != n || static_cast<int>(inverse_.size()) != n)
    throw ConstructionError("diffeomorphism component count must match the dimension");
  Expr det = det_jacobian();
  for (const Point& x : validation_grid(source_)) {
    Point y = apply(x);
    Point back = apply_inverse(y);
    double err = 0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(back[i] - x[i]));
    if (err > 1e-10)
      throw ConstructionError("diffeomorphism inverse check failed (error " + std::to_string(err) + ")");
    if (det.evaluate(x) == 0) throw ConstructionError("diffeomorphism jacobian is singular on the probe grid");
  }
}

Diffeomorphism Diffeomorphism::identity(const Domain& d) {
  std::vector<Expr> id;
  for (int i = 0; i < d.dim(); ++i) id.push_back(Expr::coordinate(d.dim(), i));
  return Diffeomorphism(id, id, d, d);
}

Diffeomorphism Diffeomorphism::affine(const std::array<double, 4>& A, const std::array<double, 2>& b,
                                      const Domain& source) {
  int n = source.dim();
  double det = n == 1 ? A[0] : A[0] * A[3] - A[1] * A[2];
  if (det == 0) throw ConstructionError("affine diffeomorphism with singular matrix");
  std::vector<Expr> fwd, inv;
  std::array<double, 4> Ainv{1 / A[0], 0, 0, 1};
  std::array<double, 2> binv{-b[0] / A[0], 0};
  if (n == 2) {
    Ainv = {A[3] / det, -A[1] / det, -A[2] / det, A[0] / det};
    binv = {-(Ainv[0] * b[0] + Ainv[1] * b[1]), -(Ainv[2] * b[0] + Ainv[3] * b[1])};
  }
  for (int i = 0; i < n; ++i) {
    PolyN f(n), g(n);
    f.add_term(MultiIndex::zero(n), b[i]);
    g.add_term(MultiIndex::zero(n), binv[i]);
    for (int j = 0; j < n; ++j) {
      double aij = n == 1 ? A[0] : A[2 * i + j];
      double inv_ij = n == 1 ? Ainv[0] : Ainv[2 * i + j];
      f.add_term(MultiIndex::unit(n, j), aij);
      g.add_term(MultiIndex::unit(n, j), inv_ij);
    }
    fwd.push_back(Expr::polynomial(f));
    inv.push_back(Expr::polynomial(g));
  }
  std::vector<Box> image;
  for (const Box& c : source.components()) {
    Box ib(n);
    for (int i = 0; i < n; ++i) {
      Interval acc{b[i], b[i]};
      for (int j = 0; j < n; ++j) acc = acc + c.iv[j].scaled(n == 1 ? A[0] : A[2 * i + j]);
      ib.iv[i] = acc;
    }
    image.push_back(ib);
  }
  return Diffeomorphism(fwd, inv, source, Domain::boxes(image, source.levels()));
}

Diffeomorphism Diffeomorphism::shear(const Expr& g_of_x1, const Domain& source) {
  if (source.dim() != 2) throw ConstructionError("shear diffeomorphism needs dimension 2");
  Expr x0 = Expr::coordinate(2, 0), x1 = Expr::coordinate(2, 1);
  std::vector<Expr> fwd{x0 + g_of_x1, x1};
  std::vector<Expr> inv{x0 - g_of_x1, x1};
  // target: pad axis 0 by the g-range over the source
  Interval gr{0, 0};
  for (const Box& c : source.components()) gr = gr.hull(g_of_x1.range(c));
  std::vector<Box> image;
  for (const Box& c : source.components()) {
    Box ib = c;
    ib.iv[0] = {c.iv[0].lo + gr.lo, c.iv[0].hi + gr.hi};
    image.push_back(ib);
  }
  return Diffeomorphism(fwd, inv, source, Domain::boxes(image, source.levels()));
}

Point Diffeomorphism::apply(const Point& x) const {
  Point y{0, 0};
  for (int i = 0; i < dim(); ++i) y[i] = forward_[i].evaluate(x);
  return y;
}

Point Diffeomorphism::apply_inverse(const Point& y) const {
  Point x{0, 0};
  for (int i = 0; i < dim(); ++i) x[i] = inverse_[i].evaluate(y);
  return x;
}

Box Diffeomorphism::image_box(const Box& b) const {
  Box r(dim());
  for (int i = 0; i < dim(); ++i) r.iv[i] = forward_[i].range(b);
  return r;
}

Expr Diffeomorphism::det_jacobian() const {
  int n = dim();
  if (n == 1) return forward_[0].derivative(0);
  Expr a = forward_[0].derivative(0), b = forward_[0].derivative(1);
  Expr c = forward_[1].derivative(0), d = forward_[1].derivative(1);
  return a * d - b * c;
}

Expr Diffeomorphism::abs_det_jacobian() const {
  Expr det = det_jacobian();
  Point sample = source_.components()[0].center();
  double v = det.evaluate(sample);
  if (v == 0) throw ConstructionError("jacobian determinant vanishes at the source center");
  return v > 0 ? det : Expr::scale(-1, det);
}

Diffeomorphism Diffeomorphism::inverted() const {
  // the defining constructor already validated the pair; swap without rechecking
  Diffeomorphism d;
  d.forward_ = inverse_;
  d.inverse_ = forward_;
  d.source_ = target_;
  d.target_ = source_;
  return d;
}

Diffeomorphism Diffeomorphism::after(const Diffeomorphism& other) const {
  // (this o other)(x) = this(other(x)); source = other.source, target = this.target
  int n = dim();
  std::vector<Expr> fwd, inv;
  for (int i = 0; i < n; ++i) fwd.push_back(Expr::compose(forward_[i], other.forward_));
  for (int i = 0; i < n; ++i) inv.push_back(Expr::compose(other.inverse_[i], inverse_));
  return Diffeomorphism(fwd, inv, other.source_, target_);
}

TestFunction Diffeomorphism::pullback(const TestFunction& phi) const {
  Expr composed = Expr::compose(phi.expr(), forward_);
  Expr weighted = Expr::product({composed, abs_det_jacobian()});
  // support: inverse image of supp phi, bounded via interval arithmetic
  Box pre(dim());
  for (int i = 0; i < dim(); ++i) pre.iv[i] = inverse_[i].range(phi.support());
  return TestFunction(weighted.with_support(pre), pre);
}

// ---------------------------------------------------------------------------
// VectorField

VectorField VectorField::coordinate_field(int n, int axis, const Domain& d) {
  std::vector<Expr> comps;
  for (int i = 0; i < n; ++i) comps.push_back(Expr::constant(n, i == axis ? 1.0 : 0.0));
  return VectorField(std::move(comps), d);
}

Expr VectorField::divergence() const {
  std::vector<Expr> parts;
  for (int i = 0; i < dim(); ++i) parts.push_back(components[i].derivative(i));
  return Expr::sum(parts);
}

TestFunction VectorField::lie_on_test_function(const TestFunction& phi) const {
  std::vector<Expr> parts;
  for (int i = 0; i < dim(); ++i)
    parts.push_back(Expr::product({components[i], phi.derivative(i).expr()}));
  parts.push_back(Expr::product({divergence(), phi.expr()}));
  return TestFunction(Expr::sum(parts), phi.support());
}

}  // namespace colombeau
