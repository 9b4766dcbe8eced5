#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "walshflow/graph.hpp"
#include "walshflow/halfline.hpp"
#include "walshflow/rng.hpp"

namespace walshflow {

struct WalshPath {
  double dt = 0.0;
  std::vector<GraphPoint> points;
  std::vector<double> radial_localtime;
  // ray owning the step that starts at each grid index; at the origin this is the freshly drawn ray
  std::vector<int> rays;
  std::optional<BrownianGrid> driver;  // B^X, coupled mode only
};

// One exact draw from the Walsh transition kernel over time dt.
GraphPoint wbm_exact_step(const StarGraph& g, const GraphPoint& x, double dt, RngStream& rng);

struct WalshOptions {
  // L from the sampled minimum of each step's driver bridge instead of the grid
  // minimum, so (|X|, L) has the reflected law at grid times; the ray is redrawn
  // whenever the bridge reaches 0 inside a step
  bool refine = false;
};

// Walsh path built from a stored driver: |X| = |x0| + B + L (grid Levy reflection),
// with the ray redrawn from (p_i) at every grid index where |X| is 0.
WalshPath wbm_coupled_path(const StarGraph& g, const GraphPoint& x0, double T, double dt, RngStream& rng,
                           const WalshOptions& opt = {});

// Same construction from a given driver grid.
WalshPath wbm_path_from_driver(const StarGraph& g, const GraphPoint& x0, const BrownianGrid& driver, RngStream& rng,
                               const WalshOptions& opt = {});

// P_t f(x) by adaptive Gauss-Kronrod quadrature of the reflected and killed kernels.
double semigroup_apply(const StarGraph& g, const DomainFunction& f, double t, const GraphPoint& x);

struct FreidlinSheuSeries {
  // f(X_k) - f(X_0) - sum f'(X_j) dB_j - 1/2 sum f''(X_j) dt - f'(0) L_k
  std::vector<double> residual;
  // residual plus the stochastic sum: the martingale part of f(X)
  std::vector<double> martingale;
  // dt * sum_{j<k} f'(X_j)^2, the predicted quadratic variation of the martingale part
  std::vector<double> bracket;
};

FreidlinSheuSeries freidlin_sheu_residual(const WalshPath& path, const DomainFunction& f);

// CSV with columns t,edge,coord,localtime,driver (edge -1 marks the origin).
void write_walsh_csv(std::ostream& os, const WalshPath& path);

}  // namespace walshflow
