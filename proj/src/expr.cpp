#include "colombeau/expr.hpp"

#include <algorithm>
#include <cmath>

#include "colombeau/gauss.hpp"

namespace colombeau {

// ---------------------------------------------------------------------------
// PolyN

void PolyN::add_term(const MultiIndex& a, double v) {
  if (v == 0) return;
  for (auto& [m, c] : terms) {
    if (m == a) {
      c += v;
      return;
    }
  }
  terms.push_back({a, v});
}

PolyN PolyN::operator+(const PolyN& o) const {
  PolyN r = *this;
  for (auto& [a, v] : o.terms) r.add_term(a, v);
  std::erase_if(r.terms, [](const auto& t) { return t.second == 0; });
  return r;
}

PolyN PolyN::operator*(const PolyN& o) const {
  PolyN r(dim);
  for (auto& [a, v] : terms)
    for (auto& [b, w] : o.terms) r.add_term(a.plus(b), v * w);
  return r;
}

PolyN PolyN::scaled(double s) const {
  PolyN r(dim);
  if (s == 0) return r;
  for (auto& [a, v] : terms) r.terms.push_back({a, v * s});
  return r;
}

PolyN PolyN::derivative(int axis) const {
  PolyN r(dim);
  for (auto& [a, v] : terms) {
    if (a.e[axis] == 0) continue;
    MultiIndex m = a;
    m.e[axis] -= 1;
    r.add_term(m, v * a.e[axis]);
  }
  return r;
}

Interval PolyN::range(const Box& b) const {
  Interval r{0, 0};
  for (auto& [a, v] : terms) {
    Interval t{1, 1};
    for (int i = 0; i < dim; ++i) t = t * b.iv[i].ipow(a.e[i]);
    r = r + t.scaled(v);
  }
  return r;
}

// ---------------------------------------------------------------------------
// bump primitive

double bump_value(double t) {
  if (std::abs(t) >= 1) return 0;
  return std::exp(-1.0 / (1.0 - t * t));
}

double bump_mass() {
  // \int_{-1}^{1} exp(-1/(1-t^2)) dt, frozen from a high-precision quadrature.
  return 0.44399381616807944;
}

namespace {

double bump_rational_value(const Poly1& numer, int k, double t) {
  if (std::abs(t) >= 1) return 0;
  double p = numer.is_zero() ? 1.0 : numer.eval(t);
  if (p == 0) return 0;
  double u = 1.0 - t * t;
  // exp(-1/u - k log u) avoids inf * 0 when u is tiny and k > 0
  double arg = -1.0 / u - k * std::log(u);
  if (arg < -740) return 0;
  return p * std::exp(arg);
}

double bump_panel(double lo, double hi) {
  const auto& gl = gauss_legendre_12();
  double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double acc = 0;
  for (int i = 0; i < 12; ++i) acc += gl.weights[i] * bump_value(mid + half * gl.nodes[i]);
  return acc * half;
}

// normalized antiderivative of the bump: 0 at t=-1, 1 at t=+1; cumulative
// integrals cached at 64 breakpoints, single fine panel per evaluation
double smoothstep_value(double t) {
  if (t <= -1) return 0;
  if (t >= 1) return 1;
  constexpr int M = 64;
  static const std::array<double, M + 1> cum = [] {
    std::array<double, M + 1> c{};
    for (int k = 0; k < M; ++k) {
      double lo = -1 + 2.0 * k / M;
      double hi = -1 + 2.0 * (k + 1) / M;
      double part = 0;
      for (int s = 0; s < 3; ++s) part += bump_panel(lo + (hi - lo) * s / 3.0, lo + (hi - lo) * (s + 1) / 3.0);
      c[k + 1] = c[k] + part;
    }
    return c;
  }();
  int k = std::min(static_cast<int>((t + 1) * 0.5 * M), M - 1);
  double tk = -1 + 2.0 * k / M;
  return (cum[k] + bump_panel(tk, t)) / cum[M];
}

// Upper bound of (1-t^2)^{-k} exp(-1/(1-t^2)) over |t| < 1.
double bump_factor_sup(int k) {
  if (k <= 0) return std::exp(-1.0);
  return std::exp(k * (std::log(static_cast<double>(k)) - 1.0));  // (k/e)^k at u = 1/k
}

struct Mat {
  std::array<double, 4> a{1, 0, 0, 1};
  int n = 1;
  double det() const { return n == 1 ? a[0] : a[0] * a[3] - a[1] * a[2]; }
  Mat inverse() const {
    Mat m;
    m.n = n;
    double d = det();
    if (d == 0) throw ConstructionError("singular matrix in affine expression");
    if (n == 1) {
      m.a[0] = 1.0 / a[0];
    } else {
      m.a = {a[3] / d, -a[1] / d, -a[2] / d, a[0] / d};
    }
    return m;
  }
  Point apply(const Point& y, const std::array<double, 2>& b) const {
    if (n == 1) return {a[0] * y[0] + b[0], 0};
    return {a[0] * y[0] + a[1] * y[1] + b[0], a[2] * y[0] + a[3] * y[1] + b[1]};
  }
  bool diagonal() const { return n == 1 || (a[1] == 0 && a[2] == 0); }
};

// Preimage of a box under y -> Ay + b, as a sound bounding box.
Box affine_preimage(const Mat& A, const std::array<double, 2>& b, const Box& target, int dim) {
  if (target.is_empty()) return Box::empty(dim);
  if (A.diagonal()) {
    Box r(dim);
    for (int i = 0; i < dim; ++i) {
      double aii = A.a[i == 0 ? 0 : 3];
      Interval t = target.iv[i];
      Interval pre{(t.lo - b[i]) / aii, (t.hi - b[i]) / aii};
      if (pre.lo > pre.hi) std::swap(pre.lo, pre.hi);
      r.iv[i] = pre;
    }
    return r;
  }
  if (!target.bounded()) return Box::whole(dim);
  // bounding box of the preimage parallelotope from its corners
  Mat inv = A.inverse();
  Box r = Box::empty(dim);
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy) {
      Point z{cx ? target.iv[0].hi : target.iv[0].lo, cy ? target.iv[1].hi : target.iv[1].lo};
      Point y = inv.apply({z[0] - b[0], z[1] - b[1]}, {0, 0});
      Box pt(dim);
      for (int i = 0; i < dim; ++i) pt.iv[i] = {y[i], y[i]};
      r = r.hull(pt);
    }
  return r;
}

// Recognizes child as a single-variable affine function a*y_axis + c.
bool as_univariate_affine(const Expr& e, int* axis, double* a, double* c);

// Recognizes child as sum_i q_i (y_i - c_i)^2 + c0 with all q_i > 0.
bool as_positive_diagonal_quadratic(const Expr& e, std::array<double, 2>* q, std::array<double, 2>* c,
                                    double* c0) {
  const ExprNode& n = e.node();
  if (n.kind != ExprKind::Poly) return false;
  int dim = n.dim;
  // collect coefficients up to degree 2, reject mixed or higher terms
  double a0 = 0;
  std::array<double, 2> lin{0, 0}, quad{0, 0};
  for (auto& [m, v] : n.poly.terms) {
    if (m.order() == 0) {
      a0 = v;
    } else if (m.order() == 1) {
      lin[m.e[0] == 1 ? 0 : 1] += v;
    } else if (m.order() == 2 && (m.e[0] == 2 || m.e[1] == 2)) {
      quad[m.e[0] == 2 ? 0 : 1] += v;
    } else {
      return false;
    }
  }
  for (int i = 0; i < dim; ++i)
    if (quad[i] <= 0) return false;
  double shift = a0;
  for (int i = 0; i < dim; ++i) {
    (*c)[i] = -lin[i] / (2 * quad[i]);
    (*q)[i] = quad[i];
    shift -= quad[i] * (*c)[i] * (*c)[i];
  }
  *c0 = shift;
  return true;
}

bool as_univariate_affine(const Expr& e, int* axis, double* a, double* c) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Coord:
      *axis = n.axis;
      *a = 1;
      *c = 0;
      return true;
    case ExprKind::Scale: {
      if (!as_univariate_affine(n.children[0], axis, a, c)) return false;
      *a *= n.value;
      *c *= n.value;
      return *a != 0;
    }
    case ExprKind::Poly: {
      int ax = -1;
      double lin = 0, cst = 0;
      for (auto& [m, v] : n.poly.terms) {
        if (m.order() == 0) {
          cst = v;
        } else if (m.order() == 1) {
          int i = m.e[0] == 1 ? 0 : 1;
          if (ax >= 0 && ax != i) return false;
          ax = i;
          lin += v;
        } else {
          return false;
        }
      }
      if (ax < 0 || lin == 0) return false;
      *axis = ax;
      *a = lin;
      *c = cst;
      return true;
    }
    case ExprKind::Affine: {
      int ax;
      double ca, cc;
      if (!as_univariate_affine(n.children[0], &ax, &ca, &cc)) return false;
      // child(Ay+b) with child = ca*z_ax + cc
      double row0 = n.A[ax == 0 ? 0 : 2];
      double row1 = n.dim == 2 ? n.A[ax == 0 ? 1 : 3] : 0.0;
      double shift = cc + ca * n.b[ax];
      if (row0 != 0 && row1 != 0) return false;
      if (row0 != 0) {
        *axis = 0;
        *a = ca * row0;
      } else if (row1 != 0) {
        *axis = 1;
        *a = ca * row1;
      } else {
        return false;
      }
      *c = shift;
      return true;
    }
    default:
      return false;
  }
}

// Sound support box for bump(child): encloses {y : |child(y)| < 1}.
Box bump_support(const Expr& child) {
  int dim = child.dim();
  int axis;
  double a, c;
  if (as_univariate_affine(child, &axis, &a, &c)) {
    Box r = Box::whole(dim);
    double lo = (-1 - c) / a, hi = (1 - c) / a;
    if (lo > hi) std::swap(lo, hi);
    r.iv[axis] = {lo, hi};
    return r;
  }
  std::array<double, 2> q, ctr;
  double c0;
  if (as_positive_diagonal_quadratic(child, &q, &ctr, &c0)) {
    double r2 = 1 - c0;
    if (r2 <= 0) return Box::empty(dim);
    Box r(dim);
    for (int i = 0; i < dim; ++i) {
      double h = std::sqrt(r2 / q[i]);
      r.iv[i] = {ctr[i] - h, ctr[i] + h};
    }
    return r;
  }
  return Box::whole(dim);
}

// Sound support box for smoothstep(child): encloses {y : child(y) > -1}.
Box smoothstep_support(const Expr& child) {
  int dim = child.dim();
  int axis;
  double a, c;
  if (as_univariate_affine(child, &axis, &a, &c)) {
    Box r = Box::whole(dim);
    double t = (-1 - c) / a;
    if (a > 0)
      r.iv[axis] = {t, std::numeric_limits<double>::infinity()};
    else
      r.iv[axis] = {-std::numeric_limits<double>::infinity(), t};
    return r;
  }
  return Box::whole(dim);
}

}  // namespace

// ---------------------------------------------------------------------------
// factories

Expr Expr::make(ExprNode n) { return Expr(std::make_shared<const ExprNode>(std::move(n))); }

Expr Expr::constant(int dim, double v) {
  ExprNode n;
  n.kind = ExprKind::Constant;
  n.dim = dim;
  n.value = v;
  n.support = v == 0 ? Box::empty(dim) : Box::whole(dim);
  return make(std::move(n));
}

Expr Expr::coordinate(int dim, int axis) {
  if (axis < 0 || axis >= dim) throw DimensionError("coordinate axis out of range");
  ExprNode n;
  n.kind = ExprKind::Coord;
  n.dim = dim;
  n.axis = axis;
  n.support = Box::whole(dim);
  return make(std::move(n));
}

Expr Expr::polynomial(PolyN p) {
  if (p.terms.empty()) return constant(p.dim, 0);
  if (p.terms.size() == 1 && p.terms[0].first.order() == 0) return constant(p.dim, p.terms[0].second);
  ExprNode n;
  n.kind = ExprKind::Poly;
  n.dim = p.dim;
  n.support = Box::whole(p.dim);
  n.poly = std::move(p);
  return make(std::move(n));
}

Expr Expr::bump(Expr child) { return bump_rational(Poly1{1}, 0, std::move(child)); }

Expr Expr::bump_rational(Poly1 numer, int pole_power, Expr child) {
  if (numer.is_zero()) return constant(child.dim(), 0);
  ExprNode n;
  n.kind = ExprKind::Bump;
  n.dim = child.dim();
  n.power = pole_power;
  n.numer = std::move(numer);
  n.support = bump_support(child);
  n.children = {std::move(child)};
  return make(std::move(n));
}

Expr Expr::smoothstep(Expr child) {
  ExprNode n;
  n.kind = ExprKind::SmoothStep;
  n.dim = child.dim();
  n.support = smoothstep_support(child);
  n.children = {std::move(child)};
  return make(std::move(n));
}

Expr Expr::sum(std::vector<Expr> children) {
  std::vector<Expr> flat;
  double cst = 0;
  int dim = children.empty() ? 1 : children[0].dim();
  for (auto& c : children) {
    if (c.dim() != dim) throw DimensionError("sum of expressions of different dimensions");
    if (c.is_zero()) continue;
    double v;
    if (c.is_constant(&v)) {
      cst += v;
    } else if (c.node().kind == ExprKind::Sum) {
      for (auto& g : c.node().children) flat.push_back(g);
    } else {
      flat.push_back(c);
    }
  }
  if (cst != 0) flat.push_back(constant(dim, cst));
  if (flat.empty()) return constant(dim, 0);
  if (flat.size() == 1) return flat[0];
  ExprNode n;
  n.kind = ExprKind::Sum;
  n.dim = dim;
  n.support = Box::empty(dim);
  for (auto& c : flat) n.support = n.support.hull(c.support());
  n.children = std::move(flat);
  return make(std::move(n));
}

Expr Expr::product(std::vector<Expr> children) {
  std::vector<Expr> flat;
  double factor = 1;
  int dim = children.empty() ? 1 : children[0].dim();
  for (auto& c : children) {
    if (c.dim() != dim) throw DimensionError("product of expressions of different dimensions");
    if (c.is_zero()) return constant(dim, 0);
    double v;
    if (c.is_constant(&v)) {
      factor *= v;
    } else if (c.node().kind == ExprKind::Scale) {
      factor *= c.node().value;
      flat.push_back(c.node().children[0]);
    } else if (c.node().kind == ExprKind::Product) {
      for (auto& g : c.node().children) flat.push_back(g);
    } else {
      flat.push_back(c);
    }
  }
  if (flat.empty()) return constant(dim, factor);
  Expr core;
  if (flat.size() == 1) {
    core = flat[0];
  } else {
    ExprNode n;
    n.kind = ExprKind::Product;
    n.dim = dim;
    n.support = Box::whole(dim);
    for (auto& c : flat) n.support = n.support.intersect(c.support());
    n.children = std::move(flat);
    core = make(std::move(n));
  }
  return factor == 1 ? core : scale(factor, core);
}

Expr Expr::scale(double c, Expr child) {
  if (c == 0 || child.is_zero()) return constant(child.dim(), 0);
  if (c == 1) return child;
  double v;
  if (child.is_constant(&v)) return constant(child.dim(), c * v);
  if (child.node().kind == ExprKind::Scale) {
    return scale(c * child.node().value, child.node().children[0]);
  }
  ExprNode n;
  n.kind = ExprKind::Scale;
  n.dim = child.dim();
  n.value = c;
  n.support = child.support();
  n.children = {std::move(child)};
  return make(std::move(n));
}

Expr Expr::ipow(Expr child, int k) {
  if (k < 0) throw ConstructionError("integer power must be nonnegative");
  if (k == 0) return constant(child.dim(), 1);
  if (k == 1) return child;
  ExprNode n;
  n.kind = ExprKind::IPow;
  n.dim = child.dim();
  n.power = k;
  n.support = child.support();
  n.children = {std::move(child)};
  return make(std::move(n));
}

Expr Expr::affine(std::array<double, 4> A, std::array<double, 2> b, Expr child) {
  Mat m;
  m.n = child.dim();
  m.a = A;
  if (m.det() == 0) throw ConstructionError("affine precomposition with singular matrix");
  bool identity = b[0] == 0 && b[1] == 0 && A[0] == 1 && (m.n == 1 || (A[1] == 0 && A[2] == 0 && A[3] == 1));
  if (identity) return child;
  ExprNode n;
  n.kind = ExprKind::Affine;
  n.dim = child.dim();
  n.A = A;
  n.b = b;
  n.support = affine_preimage(m, b, child.support(), child.dim());
  n.children = {std::move(child)};
  return make(std::move(n));
}

Expr Expr::compose(Expr child, std::vector<Expr> args) {
  if (static_cast<int>(args.size()) != child.dim())
    throw DimensionError("compose: argument count must match inner dimension");
  int dim = args[0].dim();
  for (auto& a : args)
    if (a.dim() != dim) throw DimensionError("compose: arguments of different dimensions");
  ExprNode n;
  n.kind = ExprKind::Compose;
  n.dim = dim;
  n.support = Box::whole(dim);
  n.children = {std::move(child)};
  for (auto& a : args) n.children.push_back(std::move(a));
  return make(std::move(n));
}

Expr Expr::with_support(const Box& support) const {
  ExprNode n = *node_;
  n.support = support;
  return make(std::move(n));
}

bool Expr::is_zero() const {
  return node_->kind == ExprKind::Constant && node_->value == 0;
}

bool Expr::is_constant(double* out) const {
  if (node_->kind != ExprKind::Constant) return false;
  if (out) *out = node_->value;
  return true;
}

size_t Expr::node_count() const {
  size_t c = 1;
  for (auto& ch : node_->children) c += ch.node_count();
  return c;
}

// ---------------------------------------------------------------------------
// evaluation

double Expr::evaluate(const Point& y) const {
  const ExprNode& n = *node_;
  if (!n.support.contains(y)) return 0;
  switch (n.kind) {
    case ExprKind::Constant:
      return n.value;
    case ExprKind::Coord:
      return y[n.axis];
    case ExprKind::Poly:
      return n.poly.eval(y);
    case ExprKind::Affine: {
      Mat m;
      m.n = n.dim;
      m.a = n.A;
      return n.children[0].evaluate(m.apply(y, n.b));
    }
    case ExprKind::Bump:
      return bump_rational_value(n.numer, n.power, n.children[0].evaluate(y));
    case ExprKind::SmoothStep:
      return smoothstep_value(n.children[0].evaluate(y));
    case ExprKind::Sum: {
      double r = 0;
      for (auto& c : n.children) r += c.evaluate(y);
      return r;
    }
    case ExprKind::Product: {
      double r = 1;
      for (auto& c : n.children) {
        r *= c.evaluate(y);
        if (r == 0) return 0;
      }
      return r;
    }
    case ExprKind::Scale:
      return n.value * n.children[0].evaluate(y);
    case ExprKind::IPow: {
      double v = n.children[0].evaluate(y);
      double r = 1;
      for (int i = 0; i < n.power; ++i) r *= v;
      return r;
    }
    case ExprKind::Compose: {
      Point z{0, 0};
      for (size_t i = 1; i < n.children.size(); ++i) z[i - 1] = n.children[i].evaluate(y);
      return n.children[0].evaluate(z);
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// differentiation

Expr Expr::derivative(int axis) const {
  const ExprNode& n = *node_;
  switch (n.kind) {
    case ExprKind::Constant:
      return constant(n.dim, 0);
    case ExprKind::Coord:
      return constant(n.dim, n.axis == axis ? 1 : 0);
    case ExprKind::Poly:
      return polynomial(n.poly.derivative(axis));
    case ExprKind::Affine: {
      // d/dy_i child(Ay+b) = sum_j A_{ji} (d_j child)(Ay+b)
      std::vector<Expr> parts;
      for (int j = 0; j < n.dim; ++j) {
        double aji = n.dim == 1 ? n.A[0] : n.A[2 * j + axis];
        if (aji == 0) continue;
        parts.push_back(scale(aji, affine(n.A, n.b, n.children[0].derivative(j))));
      }
      return sum(std::move(parts));
    }
    case ExprKind::Bump: {
      // d/dt [p(t)(1-t^2)^{-k} e^{-1/(1-t^2)}]
      //   = [p'(t)(1-t^2)^2 + 2kt p(t)(1-t^2) - 2t p(t)] (1-t^2)^{-k-2} e^{-1/(1-t^2)}
      const Poly1& p = n.numer;
      Poly1 one_minus_t2{1, 0, -1};
      Poly1 two_t{0, 2};
      Poly1 q = p.derivative() * one_minus_t2 * one_minus_t2 + two_t * p * one_minus_t2.scaled(n.power) +
                two_t.scaled(-1) * p;
      Expr outer = bump_rational(q, n.power + 2, n.children[0]);
      return product({std::move(outer), n.children[0].derivative(axis)});
    }
    case ExprKind::SmoothStep: {
      Expr outer = scale(1.0 / bump_mass(), bump(n.children[0]));
      return product({std::move(outer), n.children[0].derivative(axis)});
    }
    case ExprKind::Sum: {
      std::vector<Expr> parts;
      for (auto& c : n.children) parts.push_back(c.derivative(axis));
      return sum(std::move(parts));
    }
    case ExprKind::Product: {
      std::vector<Expr> parts;
      for (size_t j = 0; j < n.children.size(); ++j) {
        std::vector<Expr> factors = n.children;
        factors[j] = n.children[j].derivative(axis);
        parts.push_back(product(std::move(factors)));
      }
      return sum(std::move(parts));
    }
    case ExprKind::Scale:
      return scale(n.value, n.children[0].derivative(axis));
    case ExprKind::IPow:
      return product(
          {constant(n.dim, n.power), ipow(n.children[0], n.power - 1), n.children[0].derivative(axis)});
    case ExprKind::Compose: {
      std::vector<Expr> args(n.children.begin() + 1, n.children.end());
      std::vector<Expr> parts;
      for (size_t j = 1; j < n.children.size(); ++j) {
        Expr inner = compose(n.children[0].derivative(static_cast<int>(j - 1)), args);
        parts.push_back(product({std::move(inner), n.children[j].derivative(axis)}));
      }
      return sum(std::move(parts));
    }
  }
  return constant(n.dim, 0);
}

Expr Expr::derivative(const MultiIndex& alpha) const {
  Expr e = *this;
  for (int i = 0; i < alpha.dim; ++i)
    for (int k = 0; k < alpha.e[i]; ++k) e = e.derivative(i);
  return e;
}

// ---------------------------------------------------------------------------
// interval ranges

Interval Expr::range(const Box& box) const {
  const ExprNode& n = *node_;
  switch (n.kind) {
    case ExprKind::Constant:
      return {n.value, n.value};
    case ExprKind::Coord:
      return box.iv[n.axis];
    case ExprKind::Poly:
      return n.poly.range(box);
    case ExprKind::Affine: {
      Box image(n.dim);
      for (int i = 0; i < n.dim; ++i) {
        Interval acc{n.b[i], n.b[i]};
        for (int j = 0; j < n.dim; ++j) {
          double aij = n.dim == 1 ? n.A[0] : n.A[2 * i + j];
          acc = acc + box.iv[j].scaled(aij);
        }
        image.iv[i] = acc;
      }
      return n.children[0].range(image);
    }
    case ExprKind::Bump: {
      Interval t = n.children[0].range(box).intersect({-1, 1});
      if (t.is_empty()) return {0, 0};
      Interval pr = n.numer.range(t);
      Interval factor{0, bump_factor_sup(n.power)};
      Interval r = pr * factor;
      return r.hull({0, 0});
    }
    case ExprKind::SmoothStep: {
      Interval t = n.children[0].range(box);
      if (t.hi <= -1) return {0, 0};
      if (t.lo >= 1) return {1, 1};
      return {0, 1};
    }
    case ExprKind::Sum: {
      Interval r{0, 0};
      for (auto& c : n.children) r = r + c.range(box);
      return r;
    }
    case ExprKind::Product: {
      Interval r{1, 1};
      for (auto& c : n.children) r = r * c.range(box);
      return r;
    }
    case ExprKind::Scale:
      return n.children[0].range(box).scaled(n.value);
    case ExprKind::IPow:
      return n.children[0].range(box).ipow(n.power);
    case ExprKind::Compose: {
      Box inner(static_cast<int>(n.children.size()) - 1);
      for (size_t i = 1; i < n.children.size(); ++i) inner.iv[i - 1] = n.children[i].range(box);
      return n.children[0].range(inner);
    }
  }
  return Interval::whole();
}

// ---------------------------------------------------------------------------
// TestFunction

TestFunction::TestFunction(Expr e) : expr_(std::move(e)), support_(expr_.support()) {
  if (!support_.bounded())
    throw ConstructionError("test function must have a bounded support box");
}

TestFunction::TestFunction(Expr e, const Box& support) : expr_(std::move(e)), support_(support) {
  if (!support_.bounded())
    throw ConstructionError("test function must have a bounded support box");
}

TestFunction TestFunction::derivative(const MultiIndex& alpha) const {
  Expr d = expr_.derivative(alpha);
  return {d, support_.intersect(d.support())};
}

TestFunction TestFunction::affine_precompose(const std::array<double, 4>& A,
                                             const std::array<double, 2>& b) const {
  Expr e = colombeau::affine_precompose(expr_, A, b);
  return {e, e.support()};
}

TestFunction TestFunction::times(const Expr& f) const {
  Expr e = Expr::product({expr_, f});
  return {e, support_.intersect(f.support())};
}

double TestFunction::sup_abs(int samples_per_axis) const {
  double best = 0;
  for (const Point& y : support_.grid(samples_per_axis)) best = std::max(best, std::abs(evaluate(y)));
  return best;
}

Expr affine_precompose(const Expr& e, const std::array<double, 4>& A, const std::array<double, 2>& b) {
  return Expr::affine(A, b, e);
}

}  // namespace colombeau
