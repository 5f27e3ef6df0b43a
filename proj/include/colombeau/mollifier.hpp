#pragma once

#include <vector>

#include "colombeau/expr.hpp"

namespace colombeau {

inline constexpr double kMomentTol = 1e-8;

struct MomentReport {
  std::vector<std::pair<MultiIndex, double>> moments;  // all |beta| <= q + 2
  int order = 0;

  /// Largest deviation from the target (1 for beta = 0, 0 for 1 <= |beta| <= q).
  double worst_violation() const;
};

/// phi in D(R^n) with integral 1 and vanishing moments of orders 1..q,
/// supported in the closed unit ball. Built as p(y) B(y) with B a bump
/// and p a polynomial of total degree <= q solving the moment system.
class Mollifier {
 public:
  Mollifier() = default;
  Mollifier(TestFunction phi, int q, int n, bool symmetric,
            std::vector<std::pair<MultiIndex, double>> coeffs)
      : phi_(std::move(phi)), q_(q), n_(n), symmetric_(symmetric), coeffs_(std::move(coeffs)) {}

  const TestFunction& phi() const { return phi_; }
  int order() const { return q_; }
  int dim() const { return n_; }
  bool symmetric() const { return symmetric_; }
  const std::vector<std::pair<MultiIndex, double>>& coeffs() const { return coeffs_; }
  /// Euclidean support radius about the origin.
  double support_radius() const { return phi_.support().radius_about({0, 0}); }

 private:
  TestFunction phi_;
  int q_ = 0;
  int n_ = 1;
  bool symmetric_ = false;
  std::vector<std::pair<MultiIndex, double>> coeffs_;
};

/// Solves the moment system M a = e0 over the monomial basis (even total
/// degrees only when symmetric). Throws ConstructionError when q > 6, the
/// matrix is ill-conditioned, or the built mollifier violates its own
/// moment invariants. `width` shrinks the bump support to a ball of that
/// radius and `center` shifts it along the first axis (|center| + width
/// must stay <= 1); both give structurally different battery shapes.
Mollifier build_mollifier(int q, int n, bool symmetric, double width = 1.0, double center = 0.0);

/// Moments int y^beta phi for all |beta| <= q + 2 (diagnostic overshoot).
MomentReport verify_moments(const Mollifier& m);

}  // namespace colombeau
