#pragma once

#include <limits>
#include <string>
#include <vector>

#include "colombeau/expr.hpp"

namespace colombeau {

inline constexpr double kSlopeTol = 0.2;

struct SweepSample {
  double epsilon = 0;
  Point x{0, 0};
  double value = 0;
};

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    default: return "inconclusive";
  }
}

/// Least-squares log-log fit of an eps sweep against a claimed exponent.
struct AsymptoticReport {
  std::vector<std::pair<double, double>> samples;  // (eps, sup over the probe)
  double slope = 0;
  double intercept = 0;
  double r_squared = 1;
  double target = 0;
  double tolerance = kSlopeTol;
  Verdict verdict = Verdict::Pass;
  bool exact_zero = false;  // all sweep values vanished; strongest possible pass
  bool two_sided = false;   // |slope - target| <= tol instead of slope >= target - tol

  // metadata carried into JSON reports
  std::string check;
  std::string subject;
  MultiIndex alpha{1};
  MultiIndex beta{1};
  int order_q = 0;
  double extra = 0;  // check-specific scalar (e.g. LSK1 max support ratio)

  bool passed() const { return verdict == Verdict::Pass; }
};

/// Fits log|sup| vs log eps. Growth claims use the signed exponent with a
/// one-sided pass rule (slope >= target - tol); two_sided demands
/// |slope - target| <= tol. Sweeps that are identically zero short-circuit
/// to a pass with slope = +inf.
AsymptoticReport fit_order(const std::vector<std::pair<double, double>>& samples, double target,
                           double tolerance = kSlopeTol, bool two_sided = false);

/// Log-spaced grid, descending from eps_max to eps_min.
std::vector<double> eps_grid(double eps_min = std::pow(10.0, -2.5),
                             double eps_max = std::pow(10.0, -0.5), int points = 12);

/// max |phi| over a sample grid of the support plus one local refinement pass.
double sup_abs_refined(const TestFunction& phi, int samples_per_axis = 0);

/// Fixed worker budget (COLOMBEAU_WORKERS, flag override, else hardware).
int worker_budget();
void set_worker_budget(int workers);
/// Deterministic parallel map over [0, count): results land in caller slots.
void parallel_for_index(size_t count, const std::function<void(size_t)>& fn);

}  // namespace colombeau
