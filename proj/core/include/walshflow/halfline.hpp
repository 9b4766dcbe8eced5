#pragma once

#include <cstddef>
#include <vector>

#include "walshflow/rng.hpp"

namespace walshflow {

struct BrownianGrid {
  double dt = 0.0;
  std::vector<double> values;  // B_0 = 0
  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
};

struct ReflectedGrid {
  double dt = 0.0;
  std::vector<double> R;
  std::vector<double> L;
};

struct HeatKernels {
  double q_plus;
  double q_zero;
};

BrownianGrid sample_bm(std::size_t steps, double dt, RngStream& rng);

// Levy's identity: R = B - min B, L = -min B (min over the running prefix, including B_0 = 0).
ReflectedGrid levy_reflect(const BrownianGrid& b);

// Reflected (q_plus) and killed (q_zero) half-line transition densities.
HeatKernels heat_kernels(double t, double r, double rho);

// Probability that a Brownian bridge from a to b over time dt touches 0.
double bridge_crossing_prob(double a, double b, double dt);

// Centered Gaussian density with variance t.
double gauss_density(double t, double z);

}  // namespace walshflow
