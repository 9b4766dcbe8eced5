#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "walshflow/halfline.hpp"
#include "walshflow/stats.hpp"

using namespace walshflow;
using boost::math::quadrature::gauss_kronrod;

namespace {
// reference values from 30-digit quadrature / closed forms
constexpr double kMeanAbsNormal = 0.79788456080286535588;   // sqrt(2/pi)
constexpr double kSurvive_t1_r05 = 0.38292492254802620728;  // erf(0.5/sqrt 2)
constexpr double kSurvive_t03_r12 = 0.97154026308368942297;
constexpr double kExpMinus20 = 2.0611536224385578280e-9;

double integrate(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}
}  // namespace

TEST_CASE("sample_bm validates and starts at zero") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(sample_bm(0, 0.1, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_bm(10, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_bm(10, -1.0, rng), std::invalid_argument);
  const BrownianGrid b = sample_bm(10, 0.1, rng);
  CHECK(b.values.size() == 11);
  CHECK(b.values[0] == 0.0);
  CHECK(b.steps() == 10);
}

TEST_CASE("terminal value is standard normal after scaling") {
  const int reps = 10000;
  const std::size_t K = 50;
  const double dt = 1.0 / K;
  std::vector<double> z;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(2, r);
    z.push_back(sample_bm(K, dt, rng).values.back());
  }
  const MCEstimate m = mc_estimate(z);
  CHECK(std::abs(m.mean) < 3e-2);
  double var = 0.0;
  for (double v : z) var += (v - m.mean) * (v - m.mean);
  var /= reps - 1;
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("levy_reflect by hand") {
  const ReflectedGrid g = levy_reflect(BrownianGrid{1.0, {0.0, -1.0, 1.0}});
  CHECK(g.R == std::vector<double>{0.0, 0.0, 2.0});
  CHECK(g.L == std::vector<double>{0.0, 1.0, 1.0});
  const ReflectedGrid up = levy_reflect(BrownianGrid{0.5, {0.0, 0.2, 0.2, 1.0}});
  CHECK(up.L == std::vector<double>{0.0, 0.0, 0.0, 0.0});
  CHECK(up.R == std::vector<double>{0.0, 0.2, 0.2, 1.0});
}

TEST_CASE("levy_reflect increments and local-time support") {
  for (int s = 0; s < 50; ++s) {
    RngStream rng(3, s);
    const BrownianGrid b = sample_bm(400, 0.01, rng);
    const ReflectedGrid g = levy_reflect(b);
    CHECK(g.L[0] == 0.0);
    for (std::size_t k = 1; k < b.values.size(); ++k) {
      CHECK(g.R[k] >= 0.0);
      CHECK(g.L[k] >= g.L[k - 1]);
      CHECK(g.R[k] - g.R[k - 1] == doctest::Approx((b.values[k] - b.values[k - 1]) + (g.L[k] - g.L[k - 1])).epsilon(1e-12));
      if (g.L[k] > g.L[k - 1]) CHECK(g.R[k] == 0.0);
    }
  }
}

TEST_CASE("mean local time at time one") {
  const int reps = 20000;
  std::vector<double> L;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(4, r);
    L.push_back(levy_reflect(sample_bm(2000, 1.0 / 2000, rng)).L.back());
  }
  const MCEstimate m = mc_estimate(L);
  // grid minimum sits above the true one by about 0.5826 sqrt(dt)
  const double bias = 0.5826 * std::sqrt(1.0 / 2000);
  CHECK(std::abs(m.mean + bias - kMeanAbsNormal) < 3.0 * m.stderr() + 0.2 * bias);
}

TEST_CASE("heat kernels") {
  CHECK_THROWS_AS(heat_kernels(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(heat_kernels(1.0, -1.0, 1.0), std::invalid_argument);
  for (double rho : {0.0, 0.3, 2.0}) CHECK(heat_kernels(0.7, 0.0, rho).q_zero == 0.0);
  for (double r : {0.0, 0.4, 3.0}) {
    const double mass = integrate([&](double u) { return heat_kernels(0.5, r, u).q_plus; }, 0.0, r + 40.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  }
  const double s1 = integrate([](double u) { return heat_kernels(1.0, 0.5, u).q_zero; }, 0.0, 45.0);
  CHECK(s1 == doctest::Approx(kSurvive_t1_r05).epsilon(1e-10));
  const double s2 = integrate([](double u) { return heat_kernels(0.3, 1.2, u).q_zero; }, 0.0, 30.0);
  CHECK(s2 == doctest::Approx(kSurvive_t03_r12).epsilon(1e-10));
}

TEST_CASE("q_zero / q_plus is a probability below one off the origin") {
  RngStream rng(5, 0);
  for (int i = 0; i < 10000; ++i) {
    const double t = 0.01 + 3 * rng.uniform(), r = 1e-6 + 4 * rng.uniform(), rho = 6 * rng.uniform();
    const HeatKernels k = heat_kernels(t, r, rho);
    CHECK(k.q_zero >= 0.0);
    CHECK(k.q_zero <= k.q_plus);
    // strict only where the image term survives rounding
    if (k.q_plus > 0.0 && std::exp(-2.0 * r * rho / t) > 1e-12) CHECK(k.q_zero / k.q_plus < 1.0);
  }
}

TEST_CASE("Chapman-Kolmogorov for the reflected kernel") {
  for (double rho : {0.1, 0.9, 2.0}) {
    const double s = 0.3, t = 0.5, r = 0.7;
    const double lhs =
        integrate([&](double u) { return heat_kernels(s, r, u).q_plus * heat_kernels(t, u, rho).q_plus; }, 0.0, 15.0);
    CHECK(lhs == doctest::Approx(heat_kernels(s + t, r, rho).q_plus).epsilon(1e-6));
  }
}

TEST_CASE("bridge crossing probability") {
  CHECK_THROWS_AS(bridge_crossing_prob(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bridge_crossing_prob(1.0, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bridge_crossing_prob(1.0, 1.0, 0.0), std::invalid_argument);
  const double dt = 0.37;
  CHECK(bridge_crossing_prob(std::sqrt(dt / 2), std::sqrt(dt / 2), dt) == doctest::Approx(std::exp(-1.0)));
  CHECK(bridge_crossing_prob(1e-12, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(bridge_crossing_prob(1.0, 1.0, 0.1) == doctest::Approx(kExpMinus20).epsilon(1e-12));
}

TEST_CASE("bridge crossing matches fine-grid bridges") {
  // bridge from a to b over dt built from a random walk; grid detection
  // undercounts and approaches the formula as the grid refines
  const double a = 0.2, b = 0.2, dt = 0.1;
  const double exact = bridge_crossing_prob(a, b, dt);
  std::vector<double> est;
  for (int m : {64, 512}) {
    RngStream rng(6, m);
    const int reps = 100000;
    int hits = 0;
    std::vector<double> w(m + 1);
    for (int r = 0; r < reps; ++r) {
      w[0] = 0.0;
      const double h = dt / m;
      for (int k = 1; k <= m; ++k) w[k] = w[k - 1] + std::sqrt(h) * rng.normal();
      bool hit = false;
      for (int k = 0; k <= m && !hit; ++k) {
        const double s = k * h;
        hit = a + w[k] - (s / dt) * (w[m] - (b - a)) <= 0.0;
      }
      hits += hit;
    }
    est.push_back(double(hits) / reps);
  }
  CHECK(est[0] < est[1]);
  CHECK(est[1] < exact + 0.005);
  CHECK(exact - est[1] < 0.03);
}
