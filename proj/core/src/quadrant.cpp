#include "walshflow/quadrant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "walshflow/errors.hpp"
#include "walshflow/graph.hpp"
#include "walshflow/halfline.hpp"
#include "walshflow/stats.hpp"

namespace walshflow {

namespace {

constexpr double kPi = std::numbers::pi;

void check_theta(double theta, const char* what) {
  if (!(theta > 0.0 && theta < kPi / 2)) throw std::invalid_argument(std::string(what) + ": theta must lie in (0, pi/2)");
}

}  // namespace

OrbmLeg orbm_leg(double theta, double x, double dt, RngStream& rng, bool refine) {
  LegOptions opt;
  opt.refine = refine;
  return orbm_leg(theta, x, dt, rng, opt);
}

namespace {

// Leg integrator. A coarse step whose Brownian bridge could touch an axis is
// split by sampling bridge midpoints until it reaches the fine step dt |Z|^2,
// so the driving noise keeps its exact law at every resolution.
struct LegRun {
  const LegOptions& opt;
  RngStream& rng;
  OrbmLeg& leg;
  double dt, tn;
  double t = 0.0, X = 0.0, Y = 0.0, L = 0.0, b1 = 0.0, b2 = 0.0;
  double sup2 = 0.0, inf2 = 0.0;
  std::size_t k = 0;
  bool stopped = false;

  static constexpr double kTouch = 1e-7;
  static constexpr double kSafe = 6.0;

  void record() {
    if (!opt.keep_path) return;
    leg.t.push_back(t);
    leg.X.push_back(X);
    leg.Y.push_back(Y);
    leg.L.push_back(L);
    leg.B1.push_back(b1);
    leg.B2.push_back(b2);
  }

  double fine_step() const { return dt * (X * X + Y * Y); }

  double coarse_step() const {
    const double hf = opt.adaptive ? fine_step() : dt;
    if (!opt.adaptive) return hf;
    // with refine the reflection is exact at any step, only the exit axis matters
    const double d = (opt.refine ? X : std::min(X, Y)) / opt.step_ratio;
    return std::max(hf, d * d);
  }

  static double touch_prob(double a, double b, double h) {
    if (a <= 0.0 || b <= 0.0) return 1.0;
    return std::exp(-2.0 * a * b / h);
  }

  void advance(double h, double db1, double db2) {
    if (opt.adaptive && h > 2.0 * fine_step()) {
      const double py = touch_prob(Y, Y + db2, h);
      bool split = touch_prob(X, X + db1, h) > kTouch;
      if (opt.refine) {
        // a reflection inside the step pushes X down by tan(theta) dL, which
        // the exit test does not see; keep such steps small against X
        const double cap = X / (kSafe * (1.0 + tn));
        split = split || (py > kTouch && h > cap * cap);
      } else {
        split = split || py > kTouch;
      }
      if (split) {
        const double s = std::sqrt(h / 4.0);
        const double m1 = 0.5 * db1 + s * rng.normal();
        const double m2 = 0.5 * db2 + s * rng.normal();
        advance(0.5 * h, m1, m2);
        if (!stopped) advance(0.5 * h, db1 - m1, db2 - m2);
        return;
      }
    }
    commit(h, db1, db2);
  }

  void commit(double h, double db1, double db2) {
    if (++k > opt.max_steps) throw LegOverflow("orbm_leg: step cap reached before X hit 0");
    b1 += db1;
    b2 += db2;
    // L = -min B2: over the grid, or with refine over the bridge between grid
    // points; the state is updated incrementally to keep relative precision
    // near the corner
    double Yn = Y + db2;
    double dl = 0.0;
    if (opt.refine) {
      // minimum of the Brownian bridge from Y to Yn over h; it is below 0
      // exactly when u < exp(-2 Y Yn / h)
      const double e = Yn > 0.0 ? 2.0 * Y * Yn / h : 0.0;
      if (e < 60.0) {
        const double u = rng.uniform_pos();
        if (Yn <= 0.0 || u < std::exp(-e)) {
          const double m = 0.5 * (Y + Yn - std::sqrt(db2 * db2 - 2.0 * h * std::log(u)));
          if (m < 0.0) {
            dl = -m;
            Yn += dl;
          }
        }
      }
    } else if (Yn < 0.0) {
      dl = -Yn;
      Yn = 0.0;
    }
    L += dl;
    const double Xn = X + db1 - tn * dl;
    t += h;
    bool stop = Xn <= 0.0;
    if (!stop && opt.refine && dl == 0.0) {
      const double e = 2.0 * X * Xn / h;
      if (e < 60.0 && rng.uniform() < std::exp(-e)) {
        stop = true;
        leg.bridge_exit = true;
      }
    }
    X = Xn;
    Y = Yn;
    record();
    if (stop) {
      // the exit point (0, Y_S) belongs to the leg
      sup2 = std::max(sup2, Y * Y);
      inf2 = std::min(inf2, Y * Y);
      stopped = true;
      return;
    }
    const double r2 = X * X + Y * Y;
    sup2 = std::max(sup2, r2);
    inf2 = std::min(inf2, r2);
  }
};

}  // namespace

OrbmLeg orbm_leg(double theta, double x, double dt, RngStream& rng, const LegOptions& opt) {
  check_theta(theta, "orbm_leg");
  if (!(x > 0.0)) throw std::invalid_argument("orbm_leg: x must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("orbm_leg: dt must be > 0");

  OrbmLeg leg;
  leg.theta = theta;
  leg.x = x;
  leg.dt = dt;
  LegRun run{opt, rng, leg, dt, std::tan(theta)};
  run.X = x;
  run.sup2 = run.inf2 = x * x;
  run.record();
  while (!run.stopped) {
    const double h = run.coarse_step();
    const double s = std::sqrt(h);
    const double db1 = s * rng.normal();
    const double db2 = s * rng.normal();
    run.advance(h, db1, db2);
  }
  leg.steps = run.k;
  leg.S_index = run.k;
  leg.S = run.t;
  leg.Y_S = run.Y;
  leg.L_at_S = run.L;
  leg.sup_abs = std::sqrt(run.sup2);
  leg.inf_abs = std::sqrt(run.inf2);
  return leg;
}

double ys_cdf(double theta, double x, double y) {
  check_theta(theta, "ys_cdf");
  if (!(x > 0.0)) throw std::invalid_argument("ys_cdf: x must be > 0");
  if (y < 0.0) throw std::invalid_argument("ys_cdf: y must be >= 0");
  if (y == 0.0) return 0.0;
  if (std::isinf(y)) return 1.0;
  const double r = y / x;
  const double r2 = r * r;
  const double w = r2 / (1.0 + r2);
  return reg_incomplete_beta(0.5 - theta / kPi, 0.5 + theta / kPi, w);
}

double ys_moment(double theta, double b, double x) {
  check_theta(theta, "ys_moment");
  if (!(x > 0.0)) throw std::invalid_argument("ys_moment: x must be > 0");
  const double lo = -1.0 + 2.0 * theta / kPi, hi = 1.0 + 2.0 * theta / kPi;
  if (!(b > lo && b < hi)) throw std::invalid_argument("ys_moment: b outside the range where the moment is finite");
  return std::pow(x, b) * std::cos(theta) / std::cos(theta - b * kPi / 2.0);
}

double ys_log_mean(double theta, double x) {
  check_theta(theta, "ys_log_mean");
  if (!(x > 0.0)) throw std::invalid_argument("ys_log_mean: x must be > 0");
  return std::log(x) - kPi / 2.0 * std::tan(theta);
}

double ys_log_second_moment(double theta) {
  check_theta(theta, "ys_log_second_moment");
  const double tn = std::tan(theta);
  return kPi * kPi / 4.0 * (1.0 + 2.0 * tn * tn);
}

double tail_constant(double theta, double b, Side side) {
  check_theta(theta, "tail_constant");
  if (side == Side::Up) {
    if (!(b > 0.0 && b < 1.0 + 2.0 * theta / kPi)) throw std::invalid_argument("tail_constant: b out of range");
    if (b <= 4.0 * theta / kPi) return 1.0;
    return std::cos(theta) / std::cos(b * kPi / 2.0 - theta);
  }
  if (!(b > 0.0 && b < 1.0 - 2.0 * theta / kPi)) throw std::invalid_argument("tail_constant: b out of range");
  return std::cos(theta) / std::cos(b * kPi / 2.0 + theta);
}

double tail_bound(double theta, double x, double a, double b, Side side) {
  if (!(x > 0.0) || !(a > 0.0)) throw std::invalid_argument("tail_bound: x and a must be > 0");
  if (side == Side::Up && !(a > x)) throw std::invalid_argument("tail_bound: up side needs a > x");
  if (side == Side::Down && !(a < x)) throw std::invalid_argument("tail_bound: down side needs a < x");
  const double c = tail_constant(theta, b, side);
  return side == Side::Up ? c * std::pow(x / a, b) : c * std::pow(a / x, b);
}

AngleSource AngleSource::fixed(double theta1, double theta2) {
  check_theta(theta1, "AngleSource");
  check_theta(theta2, "AngleSource");
  AngleSource s;
  s.t1_ = theta1;
  s.t2_ = theta2;
  s.lo_ = std::min(theta1, theta2);
  s.hi_ = std::max(theta1, theta2);
  return s;
}

AngleSource AngleSource::adaptive(double lo, double hi, Callback cb) {
  check_theta(lo, "AngleSource");
  check_theta(hi, "AngleSource");
  if (lo > hi) throw std::invalid_argument("AngleSource: empty angle range");
  if (!cb) throw std::invalid_argument("AngleSource: missing callback");
  AngleSource s;
  s.lo_ = lo;
  s.hi_ = hi;
  s.cb_ = std::move(cb);
  return s;
}

double AngleSource::next(const AngleHistory& h, RngStream& rng) const {
  if (!cb_) return h.n % 2 == 0 ? t1_ : t2_;
  return std::clamp(cb_(h, rng), lo_, hi_);
}

AngleSource uniform_angles(double lo, double hi) {
  return AngleSource::adaptive(lo, hi, [lo, hi](const AngleHistory&, RngStream& rng) {
    return lo + (hi - lo) * rng.uniform();
  });
}

QuadrantProcess quadrant_process(const AngleSource& source, double x, double dt, double eps_stop,
                                 std::size_t max_legs, RngStream& rng, const QuadrantOptions& opt) {
  if (!(x > 0.0)) throw std::invalid_argument("quadrant_process: x must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("quadrant_process: dt must be > 0");
  if (!(eps_stop > 0.0 && eps_stop < x)) throw std::invalid_argument("quadrant_process: eps_stop must lie in (0, x)");
  if (max_legs < 1) throw std::invalid_argument("quadrant_process: max_legs must be >= 1");

  QuadrantProcess q;
  q.eps_stop = eps_stop;
  q.U.push_back(x);
  double time = 0.0;
  while (true) {
    const std::size_t n = q.thetas.size();
    if (n >= max_legs) {
      q.status = QuadrantStatus::MaxLegsExhausted;
      break;
    }
    const double th = source.next({n, q.U, q.thetas}, rng);
    q.thetas.push_back(th);
    const double u = q.U.back();
    // every leg is run at unit scale and mapped back by Brownian scaling,
    // so the grid is uniformly fine relative to the leg's size
    OrbmLeg leg = orbm_leg(th, 1.0, dt, rng, opt.leg);
    const double l = u * leg.L_at_S;
    const double dur = u * u * leg.S;
    q.leg_L.push_back(l);
    q.leg_time.push_back(dur);
    q.L_total += l;
    time += dur;
    q.U.push_back(u * leg.Y_S);
    if (opt.keep_legs) q.legs.push_back(std::move(leg));
    if (q.U.back() < eps_stop) {
      q.status = QuadrantStatus::Terminated;
      q.sigma0_time = time;
      break;
    }
  }
  return q;
}

double local_time_until(const QuadrantProcess& q, double eps) {
  double s = 0.0;
  for (std::size_t n = 0; n < q.leg_L.size(); ++n) {
    s += q.leg_L[n];
    if (q.U[n + 1] < eps) break;
  }
  return s;
}

double expected_boundary_local_time(double theta1, double theta2, double x) {
  check_theta(theta1, "expected_boundary_local_time");
  check_theta(theta2, "expected_boundary_local_time");
  const double prod = std::tan(theta1) * std::tan(theta2);
  if (prod <= 1.0) return kInf;
  return x * (std::tan(theta2) + 1.0) / (prod - 1.0);
}

void write_leg_csv(std::ostream& os, const OrbmLeg& leg) {
  const auto old = os.precision(17);
  os << "t,X,Y,L\n";
  for (std::size_t k = 0; k < leg.t.size(); ++k)
    os << leg.t[k] << ',' << leg.X[k] << ',' << leg.Y[k] << ',' << leg.L[k] << '\n';
  os.precision(old);
}

void write_quadrant_csv(std::ostream& os, const QuadrantProcess& q) {
  const auto old = os.precision(17);
  os << "n,theta,U,L,time\n";
  for (std::size_t n = 0; n < q.leg_L.size(); ++n)
    os << n << ',' << q.thetas[n] << ',' << q.U[n] << ',' << q.leg_L[n] << ',' << q.leg_time[n] << '\n';
  os.precision(old);
}

}  // namespace walshflow
