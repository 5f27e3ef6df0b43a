#pragma once

#include <map>
#include <memory>
#include <optional>

#include "colombeau/domain.hpp"
#include "colombeau/mollifier.hpp"
#include "colombeau/report.hpp"

namespace colombeau {

/// Smooth partition of unity on the eps interval subordinate to
/// [eps_{j+1}, eps_{j-1}] (eps_0 = 2), built from smoothstep rises.
struct LambdaPartition {
  std::vector<double> eps_seq;  // 1 > eps_1 > ... > eps_J > 0
  std::vector<Expr> lambdas;    // lambdas[j-1] = lambda_j, 1-d expressions in eps

  int size() const { return static_cast<int>(eps_seq.size()); }
  double eps_min() const { return eps_seq.back(); }
  double lambda(int j, double eps) const { return lambdas[j - 1].evaluate({eps, 0}); }
};

/// Builds the partition; requires a strictly decreasing positive prefix
/// below 1. All five defining properties hold on [eps_J, 1].
LambdaPartition lambda_partition(const std::vector<double>& eps_seq);

/// eps_j = first * ratio^{j-1}, descending, J terms (satisfies eps_j < 1/j).
std::vector<double> geometric_eps_seq(int J, double first = 0.5, double ratio = 0.5);

struct KernelNode;
using KernelNodePtr = std::shared_ptr<const KernelNode>;

/// Smoothing kernel (eps, x) -> test function with closed-form dependence on
/// (eps, x), so x- and y-derivatives are again kernels of the same class.
class SmoothingKernel {
 public:
  SmoothingKernel() = default;

  TestFunction at(double eps, const Point& x) const;
  double evaluate(double eps, const Point& x, const Point& y) const { return at(eps, x).evaluate(y); }

  SmoothingKernel dx(int axis) const;
  SmoothingKernel dy(int axis) const;
  /// (d_x + d_y) applied once along an axis.
  SmoothingKernel dxy(int axis) const;
  SmoothingKernel dx(const MultiIndex& alpha) const;
  SmoothingKernel dy(const MultiIndex& beta) const;
  SmoothingKernel dxy(const MultiIndex& alpha) const;

  int dim() const { return dim_; }
  int order() const { return order_; }
  double support_constant() const { return support_constant_; }
  const Domain& domain() const { return domain_; }
  double eps_min() const { return eps_min_; }
  double eps_max() const { return eps_max_; }
  /// Kernel belongs to the vanishing-limit (LSK3') class.
  bool vanishing_class() const { return vanishing_class_; }
  /// Scale below which the kernel agrees with its underlying model kernel on
  /// the recorded probe hull (0 when not applicable).
  double agreement_eps() const { return agreement_eps_; }

  void require_valid_eps(double eps) const;

  // metadata-preserving constructors used by the builders below
  static SmoothingKernel wrap(KernelNodePtr node, int dim, int order, double support_constant,
                              Domain domain, double eps_min = 0, double eps_max = 1,
                              bool vanishing_class = false, double agreement_eps = 0);
  const KernelNodePtr& node() const { return node_; }

 private:
  KernelNodePtr node_;
  int dim_ = 1;
  int order_ = 0;
  double support_constant_ = 1;
  Domain domain_;
  double eps_min_ = 0;
  double eps_max_ = 1;
  bool vanishing_class_ = false;
  double agreement_eps_ = 0;
};

/// eps^{-n} phi((y - x)/eps) on (a box stand-in for) R^n.
SmoothingKernel model_kernel(const Mollifier& m);

/// A test function viewed as a kernel constant in (eps, x).
SmoothingKernel constant_kernel(const TestFunction& phi, const Domain& domain);

SmoothingKernel kernel_sum(const std::vector<SmoothingKernel>& parts);
SmoothingKernel kernel_scale(double c, const SmoothingKernel& k);
/// w(y) * kernel for a smooth weight.
SmoothingKernel kernel_y_weight(const Expr& w, const SmoothingKernel& k);

/// sum_j lambda_j(eps) chi_j(y) k_{eps,x}(y) with plateau cutoffs chi_j == 1
/// on K_j, supp chi_j inside K_{j+1}.
SmoothingKernel glue_to_domain(const SmoothingKernel& k, const Domain& d, const LambdaPartition& lp);

/// Scale below which a glued kernel equals its base kernel on the probe hull
/// (the recorded eps_0(K) of the gluing construction).
double glue_agreement_eps(const Domain& d, const LambdaPartition& lp, double support_constant,
                          const Box& probe_hull);

/// lambda(eps) chi(x) k + (1 - lambda(eps) chi(x)) background; agrees with k
/// for eps < eps_0/2 and x in the probe hull.
SmoothingKernel restrict_extend(const SmoothingKernel& k, const CompactProbe& K, const Domain& V,
                                const SmoothingKernel& background);

/// (D_X^x + D_X^y + Div X) k, an element of the vanishing-limit class.
SmoothingKernel derive_kernel(const SmoothingKernel& k, const VectorField& X);

/// (mu^* k)_{eps,x}(y) = k_{eps, mu x}(mu y) |det Dmu(y)|; preserves the order.
SmoothingKernel pullback_kernel(const Diffeomorphism& mu, const SmoothingKernel& k);
/// Variant with a precomputed support constant (skips the Lipschitz probe).
SmoothingKernel pullback_kernel(std::shared_ptr<const Diffeomorphism> mu, const SmoothingKernel& k,
                                double support_constant);

/// Kernel taking the prescribed values (phi_0)_{eps_j, x_j} at (eps_j, x_j).
SmoothingKernel lsk7_build(const SmoothingKernel& phi0,
                           const std::map<MultiIndex, SmoothingKernel,
                                          bool (*)(const MultiIndex&, const MultiIndex&)>& phis,
                           const MultiIndex& delta, const std::vector<double>& eps_seq,
                           const std::vector<Point>& x_seq, const LambdaPartition& lp);
/// Convenience ordering for the lsk7 map.
bool multi_index_less(const MultiIndex& a, const MultiIndex& b);

enum class LskCheck { LSK1, LSK2, LSK3, LSK3Prime };

struct LskParams {
  MultiIndex alpha{1};
  MultiIndex beta{1};
  Expr f;                  // LSK3/LSK3' moment function
  double slope_tol = 0;    // 0: default per check (0.15 for LSK2, 0.2 otherwise)
  int sup_samples = 0;     // 0: default per dimension
  bool two_sided = false;  // demand |slope - target| <= tol (exact scaling laws)
};

/// Numerical verifier for the defining kernel conditions; returns the fitted
/// eps-asymptotics with one row per (eps, probe point) in `sweep_log`.
AsymptoticReport check_lsk(const SmoothingKernel& k, LskCheck which, const CompactProbe& K,
                           const LskParams& params, const std::vector<double>& eps,
                           std::vector<SweepSample>* sweep_log = nullptr);

}  // namespace colombeau
