#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "colombeau/multi_index.hpp"

namespace colombeau {

/// Closed interval [lo, hi]; may be empty (lo > hi) or unbounded (infinite ends).
struct Interval {
  double lo = 0, hi = 0;

  static Interval whole() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  static Interval empty() { return {1, -1}; }
  bool is_empty() const { return lo > hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  double width() const { return is_empty() ? 0 : hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }

  Interval intersect(const Interval& o) const { return {std::max(lo, o.lo), std::min(hi, o.hi)}; }
  Interval hull(const Interval& o) const {
    if (is_empty()) return o;
    if (o.is_empty()) return *this;
    return {std::min(lo, o.lo), std::max(hi, o.hi)};
  }

  // interval arithmetic (conservative enclosures)
  Interval operator+(const Interval& o) const { return {lo + o.lo, hi + o.hi}; }
  Interval operator-(const Interval& o) const { return {lo - o.hi, hi - o.lo}; }
  Interval operator*(const Interval& o) const {
    double c[4] = {lo * o.lo, lo * o.hi, hi * o.lo, hi * o.hi};
    return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
  }
  Interval scaled(double c) const { return c >= 0 ? Interval{c * lo, c * hi} : Interval{c * hi, c * lo}; }
  Interval ipow(int k) const {
    if (k == 0) return {1, 1};
    Interval r = *this;
    for (int i = 1; i < k; ++i) r = r * (*this);
    if (k % 2 == 0 && lo < 0 && hi > 0) r.lo = 0;  // even powers are nonnegative
    return r;
  }
};

/// Axis-aligned box in dim coordinates; ends may be infinite.
struct Box {
  std::array<Interval, kMaxDim> iv;
  int dim = 1;

  Box() = default;
  explicit Box(int n) : dim(n) {
    for (int i = 0; i < n; ++i) iv[i] = Interval::whole();
  }
  Box(int n, std::initializer_list<double> lo, std::initializer_list<double> hi) : dim(n) {
    auto l = lo.begin();
    auto h = hi.begin();
    for (int i = 0; i < n; ++i) iv[i] = {*l++, *h++};
  }
  static Box whole(int n) { return Box(n); }
  static Box empty(int n) {
    Box b(n);
    for (int i = 0; i < n; ++i) b.iv[i] = Interval::empty();
    return b;
  }
  static Box cube(int n, double lo, double hi) {
    Box b(n);
    for (int i = 0; i < n; ++i) b.iv[i] = {lo, hi};
    return b;
  }

  bool is_empty() const {
    for (int i = 0; i < dim; ++i)
      if (iv[i].is_empty()) return true;
    return false;
  }
  bool bounded() const {
    for (int i = 0; i < dim; ++i)
      if (!iv[i].bounded()) return false;
    return true;
  }
  bool contains(const Point& y) const {
    for (int i = 0; i < dim; ++i)
      if (!iv[i].contains(y[i])) return false;
    return true;
  }
  bool contains(const Box& o) const {
    for (int i = 0; i < dim; ++i)
      if (!o.iv[i].is_empty() && (o.iv[i].lo < iv[i].lo || o.iv[i].hi > iv[i].hi)) return false;
    return true;
  }
  /// Strict containment with positive margin on every axis.
  bool contains_strictly(const Box& o, double margin = 0) const {
    for (int i = 0; i < dim; ++i)
      if (o.iv[i].lo - margin <= iv[i].lo || o.iv[i].hi + margin >= iv[i].hi) return false;
    return true;
  }

  Box intersect(const Box& o) const {
    Box b(dim);
    for (int i = 0; i < dim; ++i) b.iv[i] = iv[i].intersect(o.iv[i]);
    return b;
  }
  Box hull(const Box& o) const {
    Box b(dim);
    for (int i = 0; i < dim; ++i) b.iv[i] = iv[i].hull(o.iv[i]);
    return b;
  }
  Box shrunk(double margin) const {
    Box b(dim);
    for (int i = 0; i < dim; ++i) b.iv[i] = {iv[i].lo + margin, iv[i].hi - margin};
    return b;
  }
  Box padded(double margin) const { return shrunk(-margin); }

  Point center() const {
    Point c{0, 0};
    for (int i = 0; i < dim; ++i) c[i] = 0.5 * (iv[i].lo + iv[i].hi);
    return c;
  }
  /// Euclidean radius of the smallest ball centered at x containing the box.
  double radius_about(const Point& x) const {
    double r2 = 0;
    for (int i = 0; i < dim; ++i) {
      double d = std::max(std::abs(iv[i].lo - x[i]), std::abs(iv[i].hi - x[i]));
      r2 += d * d;
    }
    return std::sqrt(r2);
  }
  double max_width() const {
    double w = 0;
    for (int i = 0; i < dim; ++i) w = std::max(w, iv[i].width());
    return w;
  }
  double volume() const {
    double v = 1;
    for (int i = 0; i < dim; ++i) v *= iv[i].width();
    return v;
  }

  /// Uniform tensor grid including both endpoints (per-axis point count >= 2).
  std::vector<Point> grid(int points_per_axis) const {
    std::vector<Point> g;
    int m = std::max(points_per_axis, 2);
    auto coord = [&](int i, int k) { return iv[i].lo + (iv[i].hi - iv[i].lo) * k / (m - 1); };
    if (dim == 1) {
      for (int k = 0; k < m; ++k) g.push_back({coord(0, k), 0});
    } else {
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) g.push_back({coord(0, k), coord(1, l)});
    }
    return g;
  }
};

}  // namespace colombeau
