#pragma once

#include <functional>

#include "colombeau/box.hpp"
#include "colombeau/expr.hpp"

namespace colombeau {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_level = 0;  // 0: pick per dimension (12 in 1-d, 7 in 2-d)
  int min_level = 1;  // refuse to stop before this many dyadic refinements
};

struct QuadratureResult {
  double value = 0;
  double error_estimate = 0;  // last successive difference between refinement levels
  long panels_visited = 0;
  bool converged = true;
};

/// Panel-composite 12-point Gauss-Legendre over a bounded box, refined
/// dyadically until two successive levels agree to tolerance. Throws
/// QuadratureError on non-convergence.
QuadratureResult integrate(const std::function<double(const Point&)>& f, const Box& box, int dim,
                           const QuadratureOptions& opts = {});

/// Integrates an expression over box intersected with its support box; a
/// disjoint box yields exactly 0 with no panels visited.
QuadratureResult integrate(const Expr& e, const Box& box, const QuadratureOptions& opts = {});

inline QuadratureResult integrate(const TestFunction& phi, const QuadratureOptions& opts = {}) {
  return integrate(phi.expr(), phi.support(), opts);
}

}  // namespace colombeau
