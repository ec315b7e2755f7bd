#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace agglogic {

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
  [[nodiscard]] double width() const { return hi - lo; }
  [[nodiscard]] double magnitude() const {
    return std::max(std::fabs(lo), std::fabs(hi));
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval hull(Interval a, Interval b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval hull(Interval a, double x) { return hull(a, Interval{x, x}); }

}  // namespace agglogic
