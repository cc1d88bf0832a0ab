#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "apiguard/stats.hpp"
#include "oracles/stats_oracle.hpp"

using namespace apiguard;
using Catch::Approx;

using oracle::critical_by_normal_quantile;
using oracle::shortcut;

TEST_CASE("chi-square of independent and degenerate tables is zero", "[stats]") {
  CHECK(chi_square({10, 10, 10, 10}) == 0.0);
  CHECK(chi_square({0, 20, 0, 20}) == 0.0);
  CHECK(chi_square({5, 5, 0, 0}) == 0.0);
  CHECK(chi_square({0, 0, 0, 0}) == 0.0);
}

TEST_CASE("chi-square matches the 2x2 shortcut formula", "[stats]") {
  CHECK(chi_square({30, 10, 2, 18}) == Approx(22.634).margin(1e-3));
  CHECK(chi_square({30, 10, 2, 18}) == Approx(shortcut(30, 10, 2, 18)).epsilon(1e-12));
  CHECK(chi_square({10, 0, 0, 10}) == Approx(20.0).epsilon(1e-12));
  for (int a = 0; a <= 7; ++a)
    for (int b = 0; b <= 7; ++b)
      for (int c = 0; c <= 7; ++c)
        for (int d = 0; d <= 7; ++d)
          REQUIRE(chi_square({a, b, c, d}) == Approx(shortcut(a, b, c, d)).margin(1e-9));
}

TEST_CASE("chi-square is symmetric under swapping the classes", "[stats]") {
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; b <= 6; ++b)
      for (int c = 0; c <= 6; ++c)
        for (int d = 0; d <= 6; ++d) {
          const double x = chi_square({a, b, c, d});
          REQUIRE(x >= 0.0);
          REQUIRE(x == Approx(chi_square({c, d, a, b})).margin(1e-12));
          // Zero exactly when the hit rates agree or a marginal vanishes.
          const bool equal_rates = (a + b) > 0 && (c + d) > 0 && a * (c + d) == c * (a + b);
          const bool empty_margin = a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0;
          REQUIRE((x < 1e-12) == (equal_rates || empty_margin));
        }
}

TEST_CASE("upper bound takes the better single-class outcome", "[stats]") {
  CHECK(significance_upper_bound({0, 40, 0, 20}) == 0.0);
  const double m_case = shortcut(0, 40, 5, 15);
  const double c_case = shortcut(5, 35, 0, 20);
  CHECK(m_case > c_case);
  CHECK(significance_upper_bound({5, 35, 5, 15}) == Approx(10.909).margin(1e-3));
  CHECK(significance_upper_bound({5, 35, 5, 15}) == Approx(m_case).epsilon(1e-12));
}

TEST_CASE("upper bound dominates every supergraph outcome", "[stats]") {
  for (int nc = 0; nc <= 10; ++nc)
    for (int nm = 0; nm <= 10; ++nm)
      for (int ch = 0; ch <= nc; ++ch)
        for (int mh = 0; mh <= nm; ++mh) {
          const double bound = significance_upper_bound({ch, nc - ch, mh, nm - mh});
          for (int ch2 = 0; ch2 <= ch; ++ch2)
            for (int mh2 = 0; mh2 <= mh; ++mh2)
              REQUIRE(bound + 1e-9 >= shortcut(ch2, nc - ch2, mh2, nm - mh2));
        }
}

TEST_CASE("critical value agrees with the normal-quantile oracle", "[stats]") {
  CHECK(chi_square_critical(0.05) == Approx(3.8415).margin(1e-4));
  for (double alpha : {0.5, 0.1, 0.05, 0.01, 0.001})
    CHECK(chi_square_critical(alpha) == Approx(critical_by_normal_quantile(alpha)).epsilon(1e-7));
  CHECK_THROWS_AS(chi_square_critical(0.0), Error);
  CHECK_THROWS_AS(chi_square_critical(1.0), Error);
}
