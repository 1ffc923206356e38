#include "fhn/numerics.hpp"

namespace fhn {

namespace {

double simpson_recurse(const std::function<double(double)>& fn, double a,
                       double c, double b, double fa, double fc, double fb,
                       double whole, double tol, int depth) {
  const double d = 0.5 * (a + c);
  const double e = 0.5 * (c + b);
  const double fd = fn(d);
  const double fe = fn(e);
  const double h = b - a;
  const double left = (h / 12.0) * (fa + 4.0 * fd + fc);
  const double right = (h / 12.0) * (fc + 4.0 * fe + fb);
  const double err = (left + right - whole) / 15.0;
  if (std::abs(err) <= tol || depth <= 0) {
    return left + right + err;
  }
  return simpson_recurse(fn, a, d, c, fa, fd, fc, left, 0.5 * tol, depth - 1) +
         simpson_recurse(fn, c, e, b, fc, fe, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& fn, double a,
                        double b, double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  const double c = 0.5 * (a + b);
  const double fa = fn(a);
  const double fb = fn(b);
  const double fc = fn(c);
  const double whole = ((b - a) / 6.0) * (fa + 4.0 * fc + fb);
  return simpson_recurse(fn, a, c, b, fa, fc, fb, whole, abs_tol, max_depth);
}

double bisect(const std::function<double(double)>& g, double lo, double hi,
              double width_tol, int max_iter) {
  double g_lo = g(lo);
  for (int i = 0; i < max_iter && (hi - lo) > width_tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if (g_mid == 0.0) return mid;
    if ((g_mid < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double golden_section_min(const std::function<double(double)>& fn, double lo,
                          double hi, double x_tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c);
  double fd = fn(d);
  while (b - a > x_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace fhn
