#pragma once

// 2x2 contingency statistics for a pattern over labeled graphs.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "apiguard/error.hpp"

namespace apiguard {

// Hits and misses of a pattern among Correct- and Misuse-labeled graphs.
struct SupportStats {
  std::int64_t correct_hits = 0;
  std::int64_t correct_misses = 0;
  std::int64_t misuse_hits = 0;
  std::int64_t misuse_misses = 0;

  std::int64_t correct_total() const { return correct_hits + correct_misses; }
  std::int64_t misuse_total() const { return misuse_hits + misuse_misses; }
  std::int64_t hits() const { return correct_hits + misuse_hits; }

  friend bool operator==(const SupportStats&, const SupportStats&) = default;
};

// Pearson's statistic over the table {C, M} x {hit, miss}, no continuity
// correction. Zero when any row or column marginal is zero.
inline double chi_square(const SupportStats& s) {
  const double o[2][2] = {{static_cast<double>(s.correct_hits), static_cast<double>(s.correct_misses)},
                          {static_cast<double>(s.misuse_hits), static_cast<double>(s.misuse_misses)}};
  const double rows[2] = {o[0][0] + o[0][1], o[1][0] + o[1][1]};
  const double cols[2] = {o[0][0] + o[1][0], o[0][1] + o[1][1]};
  const double n = rows[0] + rows[1];
  if (rows[0] == 0 || rows[1] == 0 || cols[0] == 0 || cols[1] == 0) return 0.0;
  double chi2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = rows[i] * cols[j] / n;
      const double d = o[i][j] - e;
      chi2 += d * d / e;
    }
  }
  return chi2;
}

// Best statistic any supergraph can reach: its hits can only shrink, and the
// most informative outcome keeps one class's hits while the other drops to 0.
inline double significance_upper_bound(const SupportStats& s) {
  const std::int64_t nc = s.correct_total(), nm = s.misuse_total();
  const double keep_correct = chi_square({s.correct_hits, nc - s.correct_hits, 0, nm});
  const double keep_misuse = chi_square({0, nc, s.misuse_hits, nm - s.misuse_hits});
  return std::max(keep_correct, keep_misuse);
}

// Upper tail of the chi-square distribution with one degree of freedom.
inline double chi_square_sf_df1(double x) { return x <= 0 ? 1.0 : std::erfc(std::sqrt(x / 2.0)); }

// Critical value at level alpha, one degree of freedom (3.8415 for 0.05).
inline double chi_square_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("significance level must be in (0, 1)");
  double lo = 0.0, hi = 1.0;
  while (chi_square_sf_df1(hi) > alpha) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi_square_sf_df1(mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace apiguard
