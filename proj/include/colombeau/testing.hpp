#pragma once

#include "colombeau/genfun.hpp"
#include "colombeau/kernels.hpp"
#include "colombeau/report.hpp"

namespace colombeau {

/// Adversarial stand-in for the universal kernel quantifier: finitely many
/// structurally different kernels, grouped by declared order.
struct KernelBattery {
  std::vector<SmoothingKernel> kernels;
  std::vector<std::string> names;

  void add(SmoothingKernel k, std::string name) {
    kernels.push_back(std::move(k));
    names.push_back(std::move(name));
  }
  std::vector<int> orders() const;
  std::vector<size_t> of_order(int q) const;
};

/// Standard battery: model kernels from two mollifier shapes plus one glued,
/// one pullback and one lsk7 kernel per order.
KernelBattery standard_battery(int n, const std::vector<int>& orders);

/// partial_x^alpha of x -> R(k_{eps,x}, x) over the probe grid for every eps.
std::vector<SweepSample> sweep(const GenFun& R, const SmoothingKernel& k, const CompactProbe& K,
                               const MultiIndex& alpha, const std::vector<double>& eps);

/// Nested central-difference path for cross-checking the exact chain rule.
double sweep_value_finite_difference(const GenFun& R, const SmoothingKernel& k, double eps,
                                     const Point& x, const MultiIndex& alpha, double h = 1e-5);

/// Reduces sweep samples to (eps, sup over probe) pairs.
std::vector<std::pair<double, double>> reduce_sweep(const std::vector<SweepSample>& samples);

struct OrderFit {
  int q = 0;
  std::vector<AsymptoticReport> reports;  // one per kernel of this order
  double min_slope = 0;
  bool all_finite = true;
};

struct ModeratenessResult {
  struct PerAlpha {
    MultiIndex alpha{1};
    std::vector<OrderFit> fits;
    int chosen_q = -1;  // order witnessing the finite bound
    int N = 0;
    Verdict verdict = Verdict::Fail;
  };
  std::vector<PerAlpha> per_alpha;
  int worst_N = 0;
  bool pass = false;
};

/// Receives every raw sweep (kernel name, alpha, samples) for CSV logging.
using SweepLogger =
    std::function<void(const std::string&, const MultiIndex&, const std::vector<SweepSample>&)>;

/// Moderateness: for every |alpha| <= alpha_max some declared order q gives a
/// finite fitted N across all battery kernels of that order; N = ceil(-slope).
ModeratenessResult moderateness_test(const GenFun& R, const KernelBattery& battery,
                                     const CompactProbe& K, int alpha_max,
                                     const std::vector<double>& eps, double slope_tol = kSlopeTol,
                                     const SweepLogger& log = {});

struct NegligibilityResult {
  struct PerTarget {
    int m = 0;
    MultiIndex alpha{1};
    std::vector<OrderFit> fits;
    int chosen_q = -1;
    Verdict verdict = Verdict::Fail;
  };
  std::vector<PerTarget> per_target;
  bool pass = false;
};

/// Negligibility at rates m in m_targets; with use_alpha0_only the caller
/// asserts moderateness and only alpha = 0 sweeps run, otherwise alpha runs
/// to alpha_max.
NegligibilityResult negligibility_test(const GenFun& R, const KernelBattery& battery,
                                       const CompactProbe& K, const std::vector<int>& m_targets,
                                       bool use_alpha0_only, const std::vector<double>& eps,
                                       double slope_tol = kSlopeTol, int alpha_max = 1,
                                       const SweepLogger& log = {});

struct AssociationResult {
  struct PerKernel {
    std::string kernel;
    int q = 0;
    std::vector<std::pair<double, double>> I;  // (eps, I(eps)), eps descending
    double limit = 0;
    double divergence_order = 0;  // order s when diverging
    double r_squared = 1;
    Verdict verdict = Verdict::Inconclusive;
    std::string detail;
  };
  std::vector<PerKernel> per_kernel;
  Verdict verdict = Verdict::Inconclusive;
  double limit = 0;             // from the highest-order passing kernel group
  double divergence_order = 0;  // consensus divergence order when failing
};

/// Weak-limit test of R - S against psi: Richardson-extrapolates
/// I(eps) = int (R-S)(k_{eps,x}, x) psi(x) dx to eps = 0.
AssociationResult association_test(const GenFun& R, const GenFun& S, const TestFunction& psi,
                                   const KernelBattery& battery, const std::vector<double>& eps,
                                   double assoc_tol = 0);

}  // namespace colombeau
