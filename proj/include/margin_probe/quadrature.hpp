#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace margin_probe::quadrature {

/// An integration segment; the integrand is multiplied by `scale` on it.
struct Segment {
  double lo;
  double hi;
  double scale = 1.0;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
  bool converged = false;
};

namespace detail {

struct Interval {
  double lo, hi, scale, value, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

template <typename F>
Interval gk15(F& f, double lo, double hi, double scale) {
  using boost::math::quadrature::gauss;
  using boost::math::quadrature::gauss_kronrod;
  const auto& xk = gauss_kronrod<double, 15>::abscissa();
  const auto& wk = gauss_kronrod<double, 15>::weights();
  const auto& wg = gauss<double, 7>::weights();
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double f0 = f(c);
  double kronrod = wk[0] * f0;
  double gauss_sum = wg[0] * f0;
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double pair = f(c - h * xk[i]) + f(c + h * xk[i]);
    kronrod += wk[i] * pair;
    // Gauss-7 nodes are the even-indexed Kronrod nodes.
    if (i % 2 == 0) gauss_sum += wg[i / 2] * pair;
  }
  const double value = scale * h * kronrod;
  const double error = std::abs(scale * h * (kronrod - gauss_sum));
  return {lo, hi, scale, value, error};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration over a set of segments:
/// the interval with the largest error estimate is bisected until the summed
/// error drops below max(abs_tol, rel_tol * |value|) or the interval budget is
/// spent. Reentrant: all state is local.
template <typename F>
Result integrate(F&& f, const std::vector<Segment>& segments, double rel_tol, double abs_tol,
                 std::size_t max_intervals) {
  std::priority_queue<detail::Interval> heap;
  Result r;
  for (const auto& s : segments) {
    if (!(s.hi > s.lo) || s.scale == 0.0) continue;
    auto iv = detail::gk15(f, s.lo, s.hi, s.scale);
    r.value += iv.value;
    r.error += iv.error;
    heap.push(iv);
  }
  r.intervals = heap.size();
  double frozen_error = 0.0;
  while (!heap.empty()) {
    if (r.error <= std::max(abs_tol, rel_tol * std::abs(r.value))) {
      r.converged = true;
      break;
    }
    if (r.intervals >= max_intervals) break;
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi) ||
        (worst.hi - worst.lo) <= 1e-14 * std::max(std::abs(worst.lo), std::abs(worst.hi))) {
      // Cannot be refined further in double precision; keep its contribution.
      frozen_error += worst.error;
      r.error -= worst.error;
      continue;
    }
    const auto left = detail::gk15(f, worst.lo, mid, worst.scale);
    const auto right = detail::gk15(f, mid, worst.hi, worst.scale);
    r.value += left.value + right.value - worst.value;
    r.error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++r.intervals;
  }
  if (heap.empty()) r.converged = true;
  // Recompute the sums from the leaves to shed accumulated cancellation error.
  double value = 0.0, error = frozen_error;
  auto leaves = std::move(heap);
  while (!leaves.empty()) {
    value += leaves.top().value;
    error += leaves.top().error;
    leaves.pop();
  }
  r.value = value;
  r.error = error;
  if (frozen_error > std::max(abs_tol, rel_tol * std::abs(r.value))) r.converged = false;
  return r;
}

}  // namespace margin_probe::quadrature
