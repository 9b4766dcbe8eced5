#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace walshflow {

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  double stderr() const { return stderr_; }
};

struct KSResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

MCEstimate mc_estimate(std::span<const double> samples);

// One-sample Kolmogorov-Smirnov against a continuous reference cdf.
KSResult ks_against_cdf(std::span<const double> samples, const std::function<double(double)>& cdf);

// Two-sample KS statistic; p-value from the asymptotic law with effective n.
KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

// Regularized incomplete beta I_x(a, b).
double reg_incomplete_beta(double a, double b, double x);

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

}  // namespace walshflow
