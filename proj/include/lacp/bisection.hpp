#pragma once

#include "lacp/error.hpp"

#include <cmath>
#include <string>

namespace lacp {

struct Bracket {
  double lo = 0.0;
  double hi = 1.0;
};

inline constexpr int kMaxBracketDoublings = 200;

/// Solves f(a) = target for a nondecreasing f on [0, inf) by bisection.
///
/// The bracket is widened geometrically until f(lo) <= target <= f(hi): hi is
/// doubled, lo is halved and finally pinned to 0. More than
/// kMaxBracketDoublings widenings on either side raises NoRootError.
/// Iteration stops once hi - lo <= tol or the midpoint no longer moves.
template <class F>
double bisect_increasing(F&& f, double target, Bracket bracket, double tol) {
  if (!std::isfinite(target)) throw NoRootError("bisection: non-finite target");
  double lo = bracket.lo < 0.0 ? 0.0 : bracket.lo;
  double hi = bracket.hi > lo ? bracket.hi : lo + 1.0;

  int widen = 0;
  while (!(f(hi) >= target)) {
    if (++widen > kMaxBracketDoublings) {
      throw NoRootError("bisection: no root after " + std::to_string(kMaxBracketDoublings) + " bracket doublings");
    }
    lo = hi;
    hi *= 2.0;
  }
  widen = 0;
  while (f(lo) > target) {
    if (lo == 0.0 || ++widen > kMaxBracketDoublings) {
      throw NoRootError("bisection: target lies below f(0)");
    }
    hi = lo;
    lo = widen == kMaxBracketDoublings ? 0.0 : lo * 0.5;
  }

  while (hi - lo > tol) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

}  // namespace lacp
