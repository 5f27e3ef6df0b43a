#pragma once

#include <memory>
#include <optional>

#include "colombeau/domain.hpp"
#include "colombeau/kernels.hpp"

namespace colombeau {

enum class DistKind {
  Delta,
  DeltaDerivative,
  Heaviside,
  LocallyIntegrable,
  PrincipalValue,  // PV of 1/x, one dimension
  LinearCombination,
  LieDerivative,  // classical L_X u, paired as -<u, L_X phi>
};

/// Coordinate half-space y_axis >= threshold (or <= when !positive).
struct HalfSpace {
  int axis = 0;
  double threshold = 0;
  bool positive = true;
};

/// Tagged finite-order distribution with a computable pairing.
class Distribution {
 public:
  static Distribution delta(int n, const Point& a);
  static Distribution delta_derivative(const MultiIndex& alpha, const Point& a);
  static Distribution heaviside(int n = 1, int axis = 0, double threshold = 0);
  static Distribution locally_integrable(Expr density, std::optional<HalfSpace> region = {});
  static Distribution principal_value_1_over_x();
  static Distribution linear_combination(std::vector<std::pair<double, Distribution>> terms);
  static Distribution lie_derivative(const VectorField& X, Distribution u);

  DistKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Point& point() const { return point_; }
  const MultiIndex& alpha() const { return alpha_; }
  const HalfSpace& halfspace() const { return half_; }
  const Expr& density() const { return density_; }
  bool has_region() const { return has_region_; }
  const std::vector<std::pair<double, std::shared_ptr<const Distribution>>>& terms() const {
    return terms_;
  }
  const VectorField& field() const { return *field_; }
  const Distribution& child() const { return *child_; }

 private:
  DistKind kind_ = DistKind::Delta;
  int dim_ = 1;
  Point point_{0, 0};
  MultiIndex alpha_{1};
  HalfSpace half_;
  bool has_region_ = false;
  Expr density_;
  std::vector<std::pair<double, std::shared_ptr<const Distribution>>> terms_;
  std::shared_ptr<const VectorField> field_;
  std::shared_ptr<const Distribution> child_;
};

/// <u, phi>; throws QuadratureError when the pairing integral fails.
double pair(const Distribution& u, const TestFunction& phi);

enum class GenKind { EmbedDist, EmbedSmooth, Sum, Product, Scale, Pullback, Lie, SheafGlue };

struct GenNode;
using GenNodePtr = std::shared_ptr<const GenNode>;

/// Element of the basic space: an expression tree over embedded
/// distributions and smooth functions, closed under sums, products,
/// diffeomorphism pullback and Lie derivatives. Evaluation and the Gateaux
/// derivative in the test-function slot are exact (rule-based).
class GenFun {
 public:
  GenFun() = default;

  static GenFun iota(Distribution u, Domain domain);
  static GenFun sigma(Expr f, Domain domain);
  static GenFun sum(std::vector<GenFun> children);
  static GenFun product(std::vector<GenFun> children);
  static GenFun scale(double c, GenFun child);
  /// mu^* R for R on the target domain; the result lives on mu's source.
  static GenFun pullback(const Diffeomorphism& mu, GenFun R);
  /// Lie derivative node; nesting depth is capped at 3.
  static GenFun lie_derivative(const VectorField& X, GenFun R);
  /// T(omega, x) = sum_j chi_j(x) piece_{of(j)}(theta_j omega, x).
  static GenFun sheaf_glue(std::vector<GenFun> pieces, std::vector<Domain> cover,
                           std::vector<Expr> cutoffs, std::vector<Expr> plateaus,
                           std::vector<int> piece_of);

  GenFun restrict(const Domain& sub) const;

  bool valid() const { return node_ != nullptr; }
  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  const GenNode& node() const { return *node_; }
  int lie_depth() const;

  double evaluate(const TestFunction& phi, const Point& x) const;
  /// First Gateaux derivative in the test-function slot, direction psi.
  double d1(const TestFunction& phi, const Point& x, const TestFunction& psi) const;

  /// Internal node wrapper used by the factory functions.
  static GenFun make(GenNodePtr node, Domain d);

 private:
  GenNodePtr node_;
  Domain domain_;
};

inline GenFun operator+(const GenFun& a, const GenFun& b) { return GenFun::sum({a, b}); }
inline GenFun operator-(const GenFun& a, const GenFun& b) {
  return GenFun::sum({a, GenFun::scale(-1, b)});
}
inline GenFun operator*(const GenFun& a, const GenFun& b) { return GenFun::product({a, b}); }

/// partial_x^gamma of x -> (d_1^k R)(base_{eps,x}, x)(dirs_{eps,x}...), all
/// derivatives exact via the node rule table (the Gateaux directions are
/// themselves smoothing kernels so x-differentiation closes).
double composite_derivative(const GenFun& R, const SmoothingKernel& base,
                            const std::vector<SmoothingKernel>& dirs, double eps, const Point& x,
                            const MultiIndex& gamma);

/// R(k_{eps,x}, x) (gamma = 0, no directions).
inline double evaluate_with_kernel(const GenFun& R, const SmoothingKernel& k, double eps,
                                   const Point& x) {
  return composite_derivative(R, k, {}, eps, x, MultiIndex::zero(R.dim()));
}

}  // namespace colombeau
