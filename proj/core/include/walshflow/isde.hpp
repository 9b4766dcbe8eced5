#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "walshflow/graph.hpp"
#include "walshflow/halfline.hpp"
#include "walshflow/rng.hpp"

namespace walshflow {

// Forward solution (X, W) of the interface SDE on a star graph.
struct IsdeSolution {
  double dt = 0.0;
  std::vector<GraphPoint> x_path;
  std::vector<BrownianGrid> W;  // one per ray
  std::vector<BrownianGrid> V;  // auxiliary noises
  BrownianGrid driver;          // B^X
  std::vector<double> localtime;
};

// X a coupled Walsh path, V fresh, dW^i = 1{X in E_i} dB^X + 1{X not in E_i} dV^i (left point).
IsdeSolution isde_forward(const StarGraph& g, const GraphPoint& x0, double T, double dt, RngStream& rng);

// Two-ray star: ray 0 is the positive half-line with parameter p = probs[0].
// Euler scheme for dY = beta 1{Y>0} dW^0 - 1{Y<=0} dW^1, beta = (1-p)/p, mapped back
// through Y = beta X on X >= 0 and Y = X on X < 0.
std::vector<GraphPoint> isde_n2_from_noise(const StarGraph& g2, const GraphPoint& x0, const BrownianGrid& w0,
                                           const BrownianGrid& w1);

// Signed coordinate on a two-ray star (ray 0 positive).
double signed_coord(const GraphPoint& x);

struct N2Pair {
  std::vector<GraphPoint> first, second;
  std::optional<std::size_t> merge_index;  // first grid index where the runs are snapped together
};

// Two runs of the N=2 scheme with the same noise. When the difference of the
// transformed coordinates changes sign or vanishes, the second run is snapped onto the first.
N2Pair isde_n2_pair(const StarGraph& g2, const GraphPoint& x, const GraphPoint& y, const BrownianGrid& w0,
                    const BrownianGrid& w1);

struct NPointOptions {
  // step h = dt * s^2 with s the pivot radius or the nearest non-pivot radius,
  // whichever is larger; plain dt steps when off
  bool adaptive = true;
  // bridge test for non-pivot points crossing the origin between grid points
  bool refine = true;
  // coalescence tolerance at the origin; 0 means 2 sqrt(dt)
  double tol_c = 0.0;
  bool keep_path = false;
  // stop after this many pivot transfers (0: no limit)
  std::size_t max_events = 0;
  // stop once every point has coalesced into one
  bool stop_when_coalesced = true;
  std::size_t max_steps = 500'000'000;
};

struct CoalescedPair {
  std::size_t i, j;
  double time;
  friend bool operator==(const CoalescedPair&, const CoalescedPair&) = default;
};

struct NPointPath {
  double dt = 0.0;
  std::size_t n = 0;
  std::vector<double> t;
  std::vector<GraphPoint> traj;  // row-major, n points per grid index
  std::vector<int> pivot;                      // pivot index per grid index (-1: none)
  std::vector<std::size_t> tau_events;         // grid indices of pivot transfers
  std::vector<CoalescedPair> coalesced_pairs;
  std::vector<std::vector<double>> W;          // W[i][k], shared ray noises on the grid
  // end state, always filled
  std::vector<GraphPoint> final_points;
  double final_time = 0.0;
  std::size_t steps = 0;
  std::vector<int> event_rays;                 // ray of the non-pivot after each transfer
  std::vector<double> event_pivot_radius;      // pivot radius at each transfer
  bool all_coalesced = false;

  const GraphPoint& at(std::size_t k, std::size_t i) const { return traj[k * n + i]; }
};

NPointPath npoint_motion(const StarGraph& g, const std::vector<GraphPoint>& starts, double T, double dt,
                         RngStream& rng, const NPointOptions& opt = {});

struct CoalescenceResult {
  bool coalesced = false;
  double time = 0.0;  // meaningful only when coalesced
};

CoalescenceResult coalescence_time(const StarGraph& g, const GraphPoint& x, const GraphPoint& y, double dt,
                                   RngStream& rng, double Tmax, const NPointOptions& opt = {});

struct TimeChangedPair {
  std::vector<double> A;        // A(t_k), time spent on different rays
  std::vector<std::size_t> gamma;  // grid index of the right-inverse, per retained sample
  std::vector<double> U, V;     // (U^r, V^r) on the time-changed clock
  std::vector<double> clock;    // A value of each retained sample
  std::vector<std::size_t> leg_end;  // index into U/V where leg n ends (S_{n+1})
  std::vector<int> rays;        // i_n
  std::vector<double> thetas;   // Theta_n
  std::vector<double> exit_values;  // reflecting coordinate at the end of each leg
};

TimeChangedPair two_point_to_quadrant(const StarGraph& g, const NPointPath& path);

struct FilteredKernelEstimate {
  std::vector<GraphPoint> endpoints;
  double dispersion = 0.0;
  std::vector<double> radial_edges;          // histogram bin edges
  std::vector<std::vector<std::size_t>> counts;  // counts[ray][bin], last bin open-ended
  std::size_t at_origin = 0;
};

FilteredKernelEstimate filtered_kernel(const StarGraph& g, const GraphPoint& x0, double T, double dt, std::size_t m,
                                       RngStream& rng);

// A point following the given ray noises: on ray i it moves by dW^i, from the
// origin it enters a ray drawn from (p_i).
std::vector<GraphPoint> follow_noise(const StarGraph& g, const GraphPoint& x0, const std::vector<BrownianGrid>& W,
                                     RngStream& rng);

struct MetricIsdeSolution {
  std::vector<double> t;
  std::vector<GraphPoint> x_path;
  std::vector<std::vector<double>> W;  // per edge, on the (nonuniform) grid
  std::vector<double> driver;
  std::vector<double> localtime;
};

struct MetricOptions {
  double clamp = 6.0;
};

MetricIsdeSolution metric_isde_forward(const MetricGraph& g, const GraphPoint& x0, double T, double dt,
                                       RngStream& rng, const MetricOptions& opt = {});

void write_npoint_csv(std::ostream& os, const NPointPath& path);

}  // namespace walshflow
