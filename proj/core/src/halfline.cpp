#include "walshflow/halfline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace walshflow {

BrownianGrid sample_bm(std::size_t steps, double dt, RngStream& rng) {
  if (steps < 1) throw std::invalid_argument("sample_bm: steps must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("sample_bm: dt must be > 0");
  BrownianGrid g;
  g.dt = dt;
  g.values.resize(steps + 1);
  g.values[0] = 0.0;
  const double s = std::sqrt(dt);
  for (std::size_t k = 1; k <= steps; ++k) g.values[k] = g.values[k - 1] + s * rng.normal();
  return g;
}

ReflectedGrid levy_reflect(const BrownianGrid& b) {
  ReflectedGrid out;
  out.dt = b.dt;
  const std::size_t n = b.values.size();
  out.R.resize(n);
  out.L.resize(n);
  double m = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    m = std::min(m, b.values[k]);
    out.L[k] = -m;
    out.R[k] = b.values[k] - m;
  }
  return out;
}

double gauss_density(double t, double z) {
  return std::exp(-0.5 * z * z / t) / std::sqrt(2.0 * std::numbers::pi * t);
}

HeatKernels heat_kernels(double t, double r, double rho) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernels: t must be > 0");
  if (r < 0.0 || rho < 0.0) throw std::invalid_argument("heat_kernels: r, rho must be >= 0");
  const double a = gauss_density(t, rho - r);
  const double b = gauss_density(t, rho + r);
  return {a + b, std::max(0.0, a - b)};
}

double bridge_crossing_prob(double a, double b, double dt) {
  if (!(a > 0.0) || !(b > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("bridge_crossing_prob: arguments must be > 0");
  return std::exp(-2.0 * a * b / dt);
}

}  // namespace walshflow
