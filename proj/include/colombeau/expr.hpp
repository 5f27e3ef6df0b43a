#pragma once

#include <map>
#include <memory>
#include <vector>

#include "colombeau/box.hpp"
#include "colombeau/errors.hpp"
#include "colombeau/multi_index.hpp"

namespace colombeau {

/// Dense univariate polynomial, coefficient of t^k at index k.
struct Poly1 {
  std::vector<double> c;

  Poly1() = default;
  Poly1(std::initializer_list<double> v) : c(v) { trim(); }
  static Poly1 constant(double v) { return v == 0 ? Poly1{} : Poly1{v}; }

  bool is_zero() const { return c.empty(); }
  int degree() const { return static_cast<int>(c.size()) - 1; }
  double eval(double t) const {
    double r = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * t + *it;
    return r;
  }
  Poly1 derivative() const {
    Poly1 d;
    for (size_t k = 1; k < c.size(); ++k) d.c.push_back(k * c[k]);
    d.trim();
    return d;
  }
  Poly1 operator+(const Poly1& o) const {
    Poly1 r;
    r.c.resize(std::max(c.size(), o.c.size()), 0.0);
    for (size_t k = 0; k < c.size(); ++k) r.c[k] += c[k];
    for (size_t k = 0; k < o.c.size(); ++k) r.c[k] += o.c[k];
    r.trim();
    return r;
  }
  Poly1 operator*(const Poly1& o) const {
    if (is_zero() || o.is_zero()) return {};
    Poly1 r;
    r.c.assign(c.size() + o.c.size() - 1, 0.0);
    for (size_t i = 0; i < c.size(); ++i)
      for (size_t j = 0; j < o.c.size(); ++j) r.c[i + j] += c[i] * o.c[j];
    r.trim();
    return r;
  }
  Poly1 scaled(double s) const {
    Poly1 r = *this;
    for (auto& x : r.c) x *= s;
    if (s == 0) r.c.clear();
    return r;
  }
  Interval range(Interval t) const {
    Interval r{0, 0};
    Interval acc{1, 1};
    for (size_t k = 0; k < c.size(); ++k) {
      if (k > 0) acc = acc * t;
      r = r + acc.scaled(c[k]);
    }
    return r;
  }

 private:
  void trim() {
    while (!c.empty() && c.back() == 0) c.pop_back();
  }
};

/// Sparse multivariate polynomial over coordinates of a fixed dimension.
struct PolyN {
  int dim = 1;
  std::vector<std::pair<MultiIndex, double>> terms;  // sorted by (order, lexicographic)

  PolyN() = default;
  explicit PolyN(int n) : dim(n) {}
  static PolyN constant(int n, double v) {
    PolyN p(n);
    if (v != 0) p.terms.push_back({MultiIndex::zero(n), v});
    return p;
  }
  static PolyN monomial_term(int n, const MultiIndex& a, double v) {
    PolyN p(n);
    if (v != 0) p.terms.push_back({a, v});
    return p;
  }

  bool is_zero() const { return terms.empty(); }
  int total_degree() const {
    int d = 0;
    for (auto& [a, v] : terms) d = std::max(d, a.order());
    return d;
  }
  double eval(const Point& y) const {
    double r = 0;
    for (auto& [a, v] : terms) r += v * monomial(y, a);
    return r;
  }
  void add_term(const MultiIndex& a, double v);
  PolyN operator+(const PolyN& o) const;
  PolyN operator*(const PolyN& o) const;
  PolyN scaled(double s) const;
  PolyN derivative(int axis) const;
  Interval range(const Box& b) const;
};

enum class ExprKind {
  Constant,    // value
  Coord,       // axis
  Poly,        // poly
  Affine,      // child(A y + b)
  Bump,        // numer(t) * (1-t^2)^{-pole_power} * exp(-1/(1-t^2)) at t = child(y), 0 for |t| >= 1
  SmoothStep,  // 0 for t <= -1, 1 for t >= 1, normalized bump antiderivative between
  Sum,
  Product,
  Scale,     // value * child
  IPow,      // child^power, power >= 0
  Compose,   // child(args[0](y), ..., args[m-1](y)); child has dim m
};

class Expr;
using ExprPtr = std::shared_ptr<const struct ExprNode>;

struct ExprNode {
  ExprKind kind;
  int dim = 1;
  double value = 0;  // Constant / Scale
  int axis = 0;      // Coord
  int power = 0;     // IPow exponent / Bump pole power
  Poly1 numer;       // Bump numerator
  PolyN poly;        // Poly
  std::array<double, 4> A{1, 0, 0, 1};  // Affine matrix, row-major
  std::array<double, 2> b{0, 0};        // Affine shift
  std::vector<Expr> children;           // child / children / Compose args (child first)
  Box support;                          // sound overestimate of {y : value != 0}
};

/// Immutable closed-form smooth expression on R^dim.
///
/// The class is closed under differentiation: the single non-polynomial
/// primitives are the bump b(t) = exp(-1/(1-t^2)) (with a rational
/// prefactor numer(t)/(1-t^2)^k accumulated by differentiation) and its
/// normalized antiderivative (SmoothStep), whose derivative is again a
/// bump. All values and derivatives extend by 0 across |t| = 1.
class Expr {
 public:
  Expr() = default;

  static Expr constant(int dim, double v);
  static Expr coordinate(int dim, int axis);
  static Expr polynomial(PolyN p);
  static Expr bump(Expr child);  // b(child)
  static Expr bump_rational(Poly1 numer, int pole_power, Expr child);
  static Expr smoothstep(Expr child);
  static Expr sum(std::vector<Expr> children);
  static Expr product(std::vector<Expr> children);
  static Expr scale(double c, Expr child);
  static Expr ipow(Expr child, int k);
  /// child(A y + b); A square dim x dim, row-major, invertible.
  static Expr affine(std::array<double, 4> A, std::array<double, 2> b, Expr child);
  /// child(args(y)); child has dim == args.size(), args share a common dim.
  static Expr compose(Expr child, std::vector<Expr> args);

  bool valid() const { return node_ != nullptr; }
  const ExprNode& node() const { return *node_; }
  int dim() const { return node_->dim; }
  const Box& support() const { return node_->support; }
  bool is_zero() const;
  bool is_constant(double* out = nullptr) const;

  double evaluate(const Point& y) const;
  double operator()(double t) const {
    if (dim() != 1) throw DimensionError("scalar call on non-1d expression");
    return evaluate({t, 0});
  }
  Expr derivative(int axis) const;
  Expr derivative(const MultiIndex& alpha) const;
  /// Conservative enclosure of values over the box.
  Interval range(const Box& box) const;
  /// Same expression with a caller-supplied (sound) support box.
  Expr with_support(const Box& support) const;

  size_t node_count() const;

 private:
  explicit Expr(ExprPtr n) : node_(std::move(n)) {}
  static Expr make(ExprNode n);
  ExprPtr node_;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::sum({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::sum({a, Expr::scale(-1, b)}); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::product({a, b}); }
inline Expr operator*(double c, const Expr& a) { return Expr::scale(c, a); }

/// Value of the model bump b(t) = exp(-1/(1-t^2)) for |t| < 1, else 0.
double bump_value(double t);
/// Integral of b over [-1, 1].
double bump_mass();

/// Compactly supported smooth function: expression plus bounded support box.
class TestFunction {
 public:
  TestFunction() = default;
  explicit TestFunction(Expr e);
  TestFunction(Expr e, const Box& support);  // support must be sound and bounded

  int dim() const { return expr_.dim(); }
  const Expr& expr() const { return expr_; }
  const Box& support() const { return support_; }

  double evaluate(const Point& y) const {
    if (!support_.contains(y)) return 0;
    return expr_.evaluate(y);
  }
  double operator()(double t) const { return evaluate({t, 0}); }

  TestFunction derivative(const MultiIndex& alpha) const;
  TestFunction derivative(int axis) const { return derivative(MultiIndex::unit(dim(), axis)); }
  /// phi(A y + b) with the exact preimage support box.
  TestFunction affine_precompose(const std::array<double, 4>& A, const std::array<double, 2>& b) const;
  TestFunction scaled(double c) const { return {Expr::scale(c, expr_), support_}; }
  /// Multiplication by a smooth expression (support shrinks to the intersection).
  TestFunction times(const Expr& f) const;
  TestFunction plus(const TestFunction& o) const {
    return {Expr::sum({expr_, o.expr_}), support_.hull(o.support_)};
  }

  double sup_abs(int samples_per_axis = 65) const;

 private:
  Expr expr_;
  Box support_;
};

/// affine_precompose on raw expressions: e(A y + b), exact preimage support.
Expr affine_precompose(const Expr& e, const std::array<double, 4>& A, const std::array<double, 2>& b);

}  // namespace colombeau
