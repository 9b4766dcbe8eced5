#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "walshflow/rng.hpp"

namespace walshflow {

struct LegOptions {
  // Bridge corrections: the local time follows the sampled minimum of each
  // step's Brownian bridge for Y, and X may exit between grid points on steps
  // where L is flat. Without refine, L is the grid running minimum and the exit
  // is a grid sign change.
  bool refine = true;
  bool keep_path = false;
  std::size_t max_steps = 100'000'000;
  // step h = max(dt |Z|^2, (d / step_ratio)^2), d the distance to the exit
  // axis {X = 0} (to the nearer axis without refine); with adaptive off every
  // step is dt
  double step_ratio = 3.0;
  bool adaptive = true;
};

// One half-plane leg: dX = dB1 - tan(theta) dL, dY = dB2 + dL, started at (x, 0), stopped when X hits 0.
struct OrbmLeg {
  double theta = 0.0;
  double x = 0.0;
  double dt = 0.0;
  // grid path, filled when keep_path is set; B1/B2 are the drivers so that
  // Y = B2 + L and X = x + B1 - tan(theta) L hold entrywise up to rounding
  std::vector<double> t, X, Y, L, B1, B2;
  std::size_t S_index = 0;
  double S = 0.0;
  double Y_S = 0.0;
  double L_at_S = 0.0;
  double sup_abs = 0.0;
  double inf_abs = 0.0;
  bool bridge_exit = false;
  std::size_t steps = 0;
};

OrbmLeg orbm_leg(double theta, double x, double dt, RngStream& rng, const LegOptions& opt);
OrbmLeg orbm_leg(double theta, double x, double dt, RngStream& rng, bool refine = true);

// P(Y_S <= y) under the leg law.
double ys_cdf(double theta, double x, double y);
// E[Y_S^b]
double ys_moment(double theta, double b, double x);
// E[log Y_S]
double ys_log_mean(double theta, double x);
// E[(log(Y_S / x))^2]
double ys_log_second_moment(double theta);

enum class Side { Up, Down };

double tail_constant(double theta, double b, Side side);
// bound on P(sup|Z| > a) (Up) or P(inf|Z| < a) (Down)
double tail_bound(double theta, double x, double a, double b, Side side);

struct AngleHistory {
  std::size_t n;                // index of the leg about to start
  std::span<const double> U;    // U_0..U_n
  std::span<const double> thetas;  // Theta_0..Theta_{n-1}
};

class AngleSource {
 public:
  using Callback = std::function<double(const AngleHistory&, RngStream&)>;

  static AngleSource fixed(double theta1, double theta2);
  static AngleSource adaptive(double lo, double hi, Callback cb);

  double next(const AngleHistory& h, RngStream& rng) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  AngleSource() = default;
  double lo_ = 0.0, hi_ = 0.0;
  double t1_ = 0.0, t2_ = 0.0;
  Callback cb_;
};

// Uniform draw in [lo, hi] for each leg, independent of the history.
AngleSource uniform_angles(double lo, double hi);

enum class QuadrantStatus { Terminated, MaxLegsExhausted };

struct QuadrantOptions {
  LegOptions leg;
  bool keep_legs = false;
};

struct QuadrantProcess {
  std::vector<OrbmLeg> legs;     // unit-scale legs, only when keep_legs
  std::vector<double> thetas;
  std::vector<double> U;         // U_0 = x, U_{n+1} = Y_S of leg n
  std::vector<double> leg_L;     // boundary local time of each leg
  std::vector<double> leg_time;
  std::optional<double> sigma0_time;
  double L_total = 0.0;
  double eps_stop = 0.0;
  QuadrantStatus status = QuadrantStatus::Terminated;
};

QuadrantProcess quadrant_process(const AngleSource& source, double x, double dt, double eps_stop,
                                 std::size_t max_legs, RngStream& rng, const QuadrantOptions& opt = {});

// L_total restricted to the legs run before U first drops below eps (eps >= the process's eps_stop).
double local_time_until(const QuadrantProcess& q, double eps);

// Expected total boundary local time at the corner; +inf when tan(theta1) tan(theta2) <= 1.
double expected_boundary_local_time(double theta1, double theta2, double x);

// CSV t,X,Y,L of a leg kept with keep_path.
void write_leg_csv(std::ostream& os, const OrbmLeg& leg);
// CSV n,theta,U,L,time, one row per leg of a process.
void write_quadrant_csv(std::ostream& os, const QuadrantProcess& q);

}  // namespace walshflow
