#pragma once

#include <memory>
#include <vector>

#include "colombeau/expr.hpp"

namespace colombeau {

/// Open region given as a finite union of disjoint open axis-aligned boxes,
/// with a compact exhaustion K_1 cc K_2 cc ... whose union is the region.
class Domain {
 public:
  Domain() = default;

  static Domain box(const Box& b, int levels = 16);
  static Domain boxes(std::vector<Box> components, int levels = 16);
  /// Large-box stand-in for R^n.
  static Domain whole_space(int n);

  int dim() const { return dim_; }
  const std::vector<Box>& components() const { return components_; }
  int levels() const { return levels_; }
  bool is_whole_space() const { return whole_; }

  /// j-th exhaustion set (1-based) as one compact box per component.
  std::vector<Box> exhaustion(int j) const;
  bool contains(const Point& x) const;
  bool contains_box(const Box& b) const;
  /// Distance from a point inside the region to its boundary (0 if outside).
  double boundary_distance(const Point& x) const;
  double boundary_distance(const Box& b) const;
  /// True when other's region is contained in this region.
  bool contains_domain(const Domain& other) const;
  Domain intersect(const Domain& other) const;
  Box bounding_box() const;

 private:
  int dim_ = 1;
  std::vector<Box> components_;
  int levels_ = 16;
  bool whole_ = false;
};

/// Compact box K cc domain plus a finite sample grid used to approximate
/// "uniformly for x in K".
struct CompactProbe {
  Box hull;
  std::vector<Point> grid;
  double margin = 0;  // distance from hull to the domain boundary
  int dim = 1;

  CompactProbe() = default;
  CompactProbe(const Box& hull_box, const Domain& domain, int points_per_axis = 0);
};

/// Diffeomorphism with closed-form forward and inverse component expressions.
class Diffeomorphism {
 public:
  Diffeomorphism() = default;
  /// Throws ConstructionError unless inverse(forward(x)) = x to 1e-10 and
  /// det(Dmu) != 0 on a probe grid of the source.
  Diffeomorphism(std::vector<Expr> forward, std::vector<Expr> inverse, Domain source, Domain target);

  static Diffeomorphism identity(const Domain& d);
  static Diffeomorphism affine(const std::array<double, 4>& A, const std::array<double, 2>& b,
                               const Domain& source);
  /// n = 2 shear (x0 + g(x1), x1); g any smooth 1-d-in-x1 expression.
  static Diffeomorphism shear(const Expr& g_of_x1, const Domain& source);

  int dim() const { return source_.dim(); }
  const Domain& source() const { return source_; }
  const Domain& target() const { return target_; }
  const std::vector<Expr>& forward() const { return forward_; }
  const std::vector<Expr>& inverse() const { return inverse_; }

  Point apply(const Point& x) const;
  Point apply_inverse(const Point& y) const;
  /// Interval image of a box under the forward map (sound enclosure).
  Box image_box(const Box& b) const;

  Expr det_jacobian() const;       // symbolic det of D(forward)
  Expr abs_det_jacobian() const;   // sign fixed from a sample point of the source
  Diffeomorphism inverted() const;
  /// this after other: (this o other)
  Diffeomorphism after(const Diffeomorphism& other) const;

  /// mu^* phi for phi on the target: phi(mu y) |det Dmu(y)|.
  TestFunction pullback(const TestFunction& phi) const;
  /// mu_* phi = (mu^{-1})^* phi for phi on the source.
  TestFunction pushforward(const TestFunction& phi) const { return inverted().pullback(phi); }

 private:
  std::vector<Expr> forward_, inverse_;
  Domain source_, target_;
};

/// Smooth vector field with closed-form components.
struct VectorField {
  std::vector<Expr> components;
  Domain domain;

  VectorField() = default;
  VectorField(std::vector<Expr> comps, Domain d) : components(std::move(comps)), domain(std::move(d)) {}
  static VectorField coordinate_field(int n, int axis, const Domain& d);

  int dim() const { return domain.dim(); }
  Expr divergence() const;
  double component(int i, const Point& x) const { return components[i].evaluate(x); }
  /// L_X phi = D_X phi + Div X * phi on test functions.
  TestFunction lie_on_test_function(const TestFunction& phi) const;
};

}  // namespace colombeau
