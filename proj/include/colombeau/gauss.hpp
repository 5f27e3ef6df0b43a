#pragma once

#include <array>
#include <cmath>

namespace colombeau {

struct GaussLegendre12 {
  std::array<double, 12> nodes{};    // on [-1, 1]
  std::array<double, 12> weights{};  // sum to 2
};

/// 12-point Gauss-Legendre rule, nodes/weights computed once by Newton iteration.
inline const GaussLegendre12& gauss_legendre_12() {
  static const GaussLegendre12 rule = [] {
    GaussLegendre12 r;
    const int n = 12;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      double w = 2.0 / ((1 - x * x) * dp * dp);
      r.nodes[i] = -x;
      r.nodes[n - 1 - i] = x;
      r.weights[i] = w;
      r.weights[n - 1 - i] = w;
    }
    return r;
  }();
  return rule;
}

}  // namespace colombeau
