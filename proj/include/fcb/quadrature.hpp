#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace fcb {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
};

namespace detail {

template <class F>
void simpson_step(const F& f, double a, double fa, double m, double fm, double b, double fb,
                  double whole, double tol, int depth, QuadratureResult& out) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  out.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    out.value += left + right + delta / 15.0;
    out.error += std::abs(delta) / 15.0;
    return;
  }
  simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, out);
  simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

/// Adaptive composite Simpson rule with Richardson correction. The interval is
/// first split into `panels` pieces so that narrow features are not missed.
template <class F>
QuadratureResult adaptive_simpson(const F& f, double a, double b, double abs_tol, int panels = 16,
                                  int max_depth = 40) {
  if (!(b >= a)) throw std::invalid_argument("adaptive_simpson: reversed interval");
  QuadratureResult out;
  if (b == a) return out;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double hi = (p + 1 == panels) ? b : lo + width;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo);
    const double fmid = f(mid);
    const double fhi = f(hi);
    out.evaluations += 3;
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    detail::simpson_step(f, lo, flo, mid, fmid, hi, fhi, whole, abs_tol / panels, max_depth, out);
  }
  return out;
}

}  // namespace fcb
