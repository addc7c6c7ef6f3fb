// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_QUADRATURE_HPP
#define BEABLE_QUADRATURE_HPP

#include <cmath>
#include <cstdint>
#include <utility>

namespace beable {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
  bool depth_capped = false;
};

/// Recursive adaptive Simpson quadrature. The relative tolerance is taken
/// against a caller-supplied scale (typically the running total), with an
/// absolute floor; panels that hit the depth cap are accepted and flagged.
class AdaptiveSimpson {
 public:
  AdaptiveSimpson(double rel_tol, double abs_floor, int max_depth = 32)
      : rel_tol_(rel_tol), abs_floor_(abs_floor), max_depth_(max_depth) {}

  template <class F>
  QuadratureResult integrate(F&& f, double a, double b, double scale_hint = 0.0) const {
    QuadratureResult res;
    if (!(b > a)) return res;
    double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    res.evaluations = 3;
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double tol = std::max(abs_floor_, rel_tol_ * std::max(std::abs(whole), scale_hint));
    res.value = refine(f, a, b, fa, fm, fb, whole, tol, max_depth_, res);
    return res;
  }

 private:
  template <class F>
  double refine(F&& f, double a, double b, double fa, double fm, double fb, double whole,
                double tol, int depth, QuadratureResult& res) const {
    double m = 0.5 * (a + b);
    double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
    res.evaluations += 2;
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
      if (depth <= 0 && std::abs(delta) > 15.0 * tol) res.depth_capped = true;
      res.error_estimate += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, res) +
           refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, res);
  }

  double rel_tol_;
  double abs_floor_;
  int max_depth_;
};

}  // namespace beable

#endif
