#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "walshflow/rng.hpp"
#include "walshflow/stats.hpp"

using namespace walshflow;

namespace {
constexpr double kI02_quarter = 0.60856638171295480840;  // I_0.2(1/4, 3/4), 40-digit mpmath betainc

double normal_cdf(double z) { return 0.5 * boost::math::erfc(-z / std::sqrt(2.0)); }
}  // namespace

TEST_CASE("mc_estimate by hand") {
  const std::vector<double> ones{1, 1, 1, 1};
  const MCEstimate a = mc_estimate(ones);
  CHECK(a.mean == 1.0);
  CHECK(a.stderr() == 0.0);
  CHECK(a.n == 4);
  const std::vector<double> two{0, 2};
  const MCEstimate b = mc_estimate(two);
  CHECK(b.mean == 1.0);
  CHECK(b.stderr() == doctest::Approx(1.0));
  const std::vector<double> one{3.0};
  CHECK_THROWS_AS(mc_estimate(one), std::invalid_argument);
}

TEST_CASE("mean of normals within three standard errors for nearly every seed") {
  int ok = 0;
  const int seeds = 200;
  std::vector<double> z(100000);
  for (int s = 0; s < seeds; ++s) {
    RngStream rng(100 + s, 0);
    for (double& v : z) v = rng.normal();
    const MCEstimate m = mc_estimate(z);
    ok += std::abs(m.mean) < 3.0 * m.stderr();
  }
  CHECK(ok >= 0.99 * seeds);
}

TEST_CASE("ks_against_cdf small cases") {
  auto cdf = [](double x) { return normal_cdf(x); };
  const std::vector<double> empty;
  CHECK_THROWS(ks_against_cdf(empty, cdf));
  const std::vector<double> same(10, 0.3);
  CHECK(ks_against_cdf(same, cdf).statistic >= 0.5);
  const std::vector<double> med{0.0};
  CHECK(ks_against_cdf(med, cdf).statistic == doctest::Approx(0.5));
}

TEST_CASE("ks statistic under the null stays below 1.95/sqrt(n)") {
  const int seeds = 100;
  const std::size_t n = 100000;
  int ok = 0;
  std::vector<double> z(n);
  double pv_mean = 0.0;
  for (int s = 0; s < seeds; ++s) {
    RngStream rng(200 + s, 0);
    for (double& v : z) v = rng.normal();
    const KSResult r = ks_against_cdf(z, normal_cdf);
    ok += r.statistic < 1.95 / std::sqrt(double(n));
    pv_mean += r.p_value / seeds;
    CHECK(r.n == n);
  }
  CHECK(ok >= 99);
  CHECK(pv_mean == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("ks is invariant under monotone maps") {
  RngStream rng(7, 0);
  std::vector<double> z(5000), e(5000);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = rng.normal();
    e[i] = std::exp(z[i]);
  }
  const double a = ks_against_cdf(z, normal_cdf).statistic;
  const double b = ks_against_cdf(e, [](double y) { return y > 0 ? normal_cdf(std::log(y)) : 0.0; }).statistic;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("two-sample ks") {
  RngStream rng(8, 0);
  std::vector<double> a(20000), b(20000), c(20000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (auto& v : c) v = rng.normal() + 0.1;
  CHECK(ks_two_sample(a, b).p_value > 0.001);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("Kolmogorov survival function") {
  // reference values of the limiting Kolmogorov distribution
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-10));
  CHECK(kolmogorov_sf(1.95) == doctest::Approx(0.00099591084288358).epsilon(1e-9));
  CHECK(kolmogorov_sf(2.5) == doctest::Approx(7.453306344157342e-06).epsilon(1e-8));
  CHECK(kolmogorov_sf(0.0) == 1.0);
}

TEST_CASE("incomplete beta values") {
  for (double x : {0.0, 0.1, 0.5, 0.77, 1.0}) CHECK(reg_incomplete_beta(1, 1, x) == doctest::Approx(x).epsilon(1e-14));
  for (double a : {0.25, 1.0, 3.5, 40.0}) CHECK(reg_incomplete_beta(a, a, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(reg_incomplete_beta(0.25, 0.75, 0.2) == doctest::Approx(kI02_quarter).epsilon(1e-10));
  CHECK_THROWS(reg_incomplete_beta(0.0, 1.0, 0.5));
  CHECK_THROWS(reg_incomplete_beta(1.0, -1.0, 0.5));
  CHECK_THROWS(reg_incomplete_beta(1.0, 1.0, 1.5));
}

TEST_CASE("incomplete beta symmetry and agreement with boost on random triples") {
  RngStream rng(9, 0);
  for (int i = 0; i < 2000; ++i) {
    const double a = std::exp(4 * rng.uniform() - 2.5);
    const double b = std::exp(4 * rng.uniform() - 2.5);
    const double x = rng.uniform();
    const double v = reg_incomplete_beta(a, b, x);
    CHECK(v + reg_incomplete_beta(b, a, 1 - x) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(v == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
  }
}

TEST_CASE("median and quantile") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(quantile({0, 10}, 0.25) == doctest::Approx(2.5));
  CHECK(quantile({5, 1, 9}, 0.0) == 1.0);
  CHECK(quantile({5, 1, 9}, 1.0) == 9.0);
}
