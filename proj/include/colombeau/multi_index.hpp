#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace colombeau {

// Spatial dimension is 1 or 2 throughout the library.
inline constexpr int kMaxDim = 2;

using Point = std::array<double, kMaxDim>;

/// Multi-index in up to kMaxDim variables; entries beyond dim are zero.
struct MultiIndex {
  std::array<int, kMaxDim> e{0, 0};
  int dim = 1;

  MultiIndex() = default;
  explicit MultiIndex(int n) : dim(n) { check_dim(n); }
  MultiIndex(int n, std::initializer_list<int> v) : dim(n) {
    check_dim(n);
    int i = 0;
    for (int x : v) {
      if (i >= n) throw std::invalid_argument("multi-index has too many entries");
      if (x < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
      e[i++] = x;
    }
  }
  static MultiIndex zero(int n) { return MultiIndex(n); }
  static MultiIndex unit(int n, int axis) {
    MultiIndex m(n);
    if (axis < 0 || axis >= n) throw std::invalid_argument("axis out of range");
    m.e[axis] = 1;
    return m;
  }

  int order() const { return e[0] + e[1]; }
  int operator[](int i) const { return e[i]; }
  int& operator[](int i) { return e[i]; }

  bool operator==(const MultiIndex& o) const { return dim == o.dim && e == o.e; }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }
  // componentwise partial order
  bool leq(const MultiIndex& o) const {
    for (int i = 0; i < dim; ++i)
      if (e[i] > o.e[i]) return false;
    return true;
  }

  MultiIndex plus(const MultiIndex& o) const {
    MultiIndex r(dim);
    for (int i = 0; i < dim; ++i) r.e[i] = e[i] + o.e[i];
    return r;
  }
  MultiIndex plus(int axis) const {
    MultiIndex r = *this;
    r.e[axis] += 1;
    return r;
  }
  MultiIndex minus(const MultiIndex& o) const {
    MultiIndex r(dim);
    for (int i = 0; i < dim; ++i) {
      r.e[i] = e[i] - o.e[i];
      if (r.e[i] < 0) throw std::invalid_argument("multi-index subtraction out of range");
    }
    return r;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim; ++i) s += (i ? "," : "") + std::to_string(e[i]);
    return s + ")";
  }

 private:
  static void check_dim(int n) {
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("dimension must be 1 or 2");
  }
};

inline double factorial(int k) {
  double r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

inline double factorial(const MultiIndex& a) {
  double r = 1;
  for (int i = 0; i < a.dim; ++i) r *= factorial(a.e[i]);
  return r;
}

/// Product of componentwise binomial coefficients C(a, b).
inline double binomial(const MultiIndex& a, const MultiIndex& b) {
  double r = 1;
  for (int i = 0; i < a.dim; ++i) r *= binomial(a.e[i], b.e[i]);
  return r;
}

/// x^a componentwise power.
inline double monomial(const Point& x, const MultiIndex& a) {
  double r = 1;
  for (int i = 0; i < a.dim; ++i)
    for (int k = 0; k < a.e[i]; ++k) r *= x[i];
  return r;
}

/// All b with b <= a componentwise (lexicographic enumeration).
inline std::vector<MultiIndex> multi_indices_below(const MultiIndex& a) {
  std::vector<MultiIndex> out;
  if (a.dim == 1) {
    for (int i = 0; i <= a.e[0]; ++i) out.push_back(MultiIndex(1, {i}));
  } else {
    for (int i = 0; i <= a.e[0]; ++i)
      for (int j = 0; j <= a.e[1]; ++j) out.push_back(MultiIndex(2, {i, j}));
  }
  return out;
}

/// All multi-indices with |a| <= m, ordered by total order then lexicographically.
inline std::vector<MultiIndex> multi_indices_up_to_order(int dim, int m) {
  std::vector<MultiIndex> out;
  for (int total = 0; total <= m; ++total) {
    if (dim == 1) {
      out.push_back(MultiIndex(1, {total}));
    } else {
      for (int i = total; i >= 0; --i) out.push_back(MultiIndex(2, {i, total - i}));
    }
  }
  return out;
}

}  // namespace colombeau
