#pragma once

// Test oracles for the 2x2 chi-square statistics, written independently of
// the library: the textbook shortcut formula, a critical value from Simpson
// integration of the normal density, and min_signif by direct search.

#include <algorithm>
#include <cmath>
#include <optional>

namespace oracle {

// N(ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)); rows are classes, columns hit/miss.
inline double shortcut(double a, double b, double c, double d) {
  const double den = (a + b) * (c + d) * (a + c) * (b + d);
  if (den == 0) return 0.0;
  const double n = a + b + c + d;
  return n * (a * d - b * c) * (a * d - b * c) / den;
}

// P(|Z| > z) by Simpson integration of the normal density.
inline double two_sided_normal_tail(double z) {
  const int steps = 20000;
  const double h = z / steps;
  auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
  double s = pdf(0) + pdf(z);
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  return 1.0 - 2.0 * (s * h / 3.0);
}

// A chi-square(1) variable is Z^2, so the critical value is the square of
// the two-sided normal quantile.
inline double critical_by_normal_quantile(double alpha) {
  double lo = 0, hi = 10;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (two_sided_normal_tail(mid) > alpha ? lo : hi) = mid;
  }
  return lo * lo;
}

// Best statistic of a pattern found in k labeled graphs, all of one class.
inline double pure_best(int k, int nc, int nm) {
  double b = 0;
  if (k <= nc) b = std::max(b, shortcut(k, nc - k, 0, nm));
  if (k <= nm) b = std::max(b, shortcut(0, nc, k, nm - k));
  return b;
}

// Smallest k = 1, 2, ... whose pure pattern reaches the critical value.
inline std::optional<int> min_signif_incremental(int nc, int nm, double alpha) {
  const double crit = critical_by_normal_quantile(alpha);
  for (int k = 1; k <= std::max(nc, nm); ++k)
    if (pure_best(k, nc, nm) >= crit) return k;
  return std::nullopt;
}

}  // namespace oracle
