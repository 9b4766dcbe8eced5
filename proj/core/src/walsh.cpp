#include "walshflow/walsh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "walshflow/errors.hpp"

namespace walshflow {

GraphPoint wbm_exact_step(const StarGraph& g, const GraphPoint& x, double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("wbm_exact_step: dt must be > 0");
  const double r = radius(x);
  const double rho = std::abs(r + std::sqrt(dt) * rng.normal());
  if (rho == 0.0) return StarGraph::origin();
  if (!x.is_vertex()) {
    const HeatKernels k = heat_kernels(dt, r, rho);
    if (rng.uniform() * k.q_plus < k.q_zero) return g.point(x.edge, rho);
  }
  return g.point(static_cast<int>(rng.categorical(g.probs)), rho);
}

WalshPath wbm_path_from_driver(const StarGraph& g, const GraphPoint& x0, const BrownianGrid& driver, RngStream& rng,
                               const WalshOptions& opt) {
  WalshPath w;
  w.dt = driver.dt;
  const std::size_t n = driver.values.size();
  w.points.resize(n);
  w.radial_localtime.resize(n);
  w.rays.resize(n);
  const double r0 = radius(x0);
  int ray = x0.is_vertex() ? -1 : x0.edge;
  double L = 0.0;
  if (opt.refine) {
    double r = r0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) {
        const double db = driver.values[k] - driver.values[k - 1];
        const double rn = r + db;
        // bridge from r to rn over dt dips below 0 with probability exp(-2 r rn / dt)
        const double e = rn > 0.0 ? 2.0 * r * rn / w.dt : 0.0;
        double m = 1.0;
        if (e < 60.0) {
          const double u = rng.uniform_pos();
          if (rn <= 0.0 || u < std::exp(-e)) m = 0.5 * (r + rn - std::sqrt(db * db - 2.0 * w.dt * std::log(u)));
        }
        if (m < 0.0) {
          L -= m;
          r = rn - m;
          ray = -1;  // a new excursion started inside the step
        } else {
          r = rn;
        }
      }
      w.radial_localtime[k] = L;
      if (ray < 0) ray = static_cast<int>(rng.categorical(g.probs));
      w.points[k] = r > 0.0 ? GraphPoint{ray, r, kNoVertex} : StarGraph::origin();
      w.rays[k] = ray;
    }
    w.driver = driver;
    return w;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double b = driver.values[k];
    L = std::max(L, -(r0 + b));
    const double r = r0 + b + L;
    w.radial_localtime[k] = L;
    if (r <= 0.0) {
      w.points[k] = StarGraph::origin();
      ray = static_cast<int>(rng.categorical(g.probs));
    } else {
      w.points[k] = GraphPoint{ray, r, kNoVertex};
    }
    w.rays[k] = ray;
  }
  w.driver = driver;
  return w;
}

WalshPath wbm_coupled_path(const StarGraph& g, const GraphPoint& x0, double T, double dt, RngStream& rng,
                           const WalshOptions& opt) {
  if (!(dt > 0.0) || !(T > dt)) throw std::invalid_argument("wbm_coupled_path: need T > dt > 0");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  BrownianGrid b = sample_bm(steps, dt, rng);
  return wbm_path_from_driver(g, x0, b, rng, opt);
}

double semigroup_apply(const StarGraph& g, const DomainFunction& f, double t, const GraphPoint& x) {
  if (!(t > 0.0)) throw std::invalid_argument("semigroup_apply: t must be > 0");
  using boost::math::quadrature::gauss_kronrod;
  const double r = radius(x);
  const double s = std::sqrt(t);
  auto fbar = [&](double rho) {
    double v = 0.0;
    for (int i = 0; i < g.n_rays; ++i) v += g.probs[i] * f.on_edge(i, rho);
    return v;
  };
  auto integrand = [&](double rho) {
    const HeatKernels k = heat_kernels(t, r, rho);
    const double fb = fbar(rho);
    double v = k.q_plus * fb;
    if (!x.is_vertex() && k.q_zero > 0.0) v += k.q_zero * (f.on_edge(x.edge, rho) - fb);
    return v;
  };
  // the mass sits within ~40 standard deviations of r and of its image -r
  const double hi = r + 40.0 * s;
  const double lo = std::max(0.0, r - 40.0 * s);
  double total = 0.0;
  if (lo > 0.0) {
    total += gauss_kronrod<double, 61>::integrate(integrand, 0.0, lo, 15, 1e-13);
  }
  const double mid = std::clamp(r, lo, hi);
  if (mid > lo) total += gauss_kronrod<double, 61>::integrate(integrand, lo, mid, 15, 1e-13);
  total += gauss_kronrod<double, 61>::integrate(integrand, mid, hi, 15, 1e-13);
  return total;
}

FreidlinSheuSeries freidlin_sheu_residual(const WalshPath& path, const DomainFunction& f) {
  if (!path.driver) throw MissingDriver("freidlin_sheu_residual: path has no driver");
  const auto& B = path.driver->values;
  const std::size_t n = path.points.size();
  if (B.size() != n) throw std::invalid_argument("freidlin_sheu_residual: driver and path lengths differ");
  const double dt = path.dt;
  const double fp0 = skew_derivative(f, 0);
  FreidlinSheuSeries out;
  out.residual.resize(n);
  out.martingale.resize(n);
  out.bracket.resize(n);
  const double f0 = f.value(path.points[0]);
  double ito = 0.0, drift = 0.0, qv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      const GraphPoint& xj = path.points[k - 1];
      const double d1 = f.d1(xj);
      ito += d1 * (B[k] - B[k - 1]);
      drift += 0.5 * f.d2(xj) * dt;
      qv += d1 * d1 * dt;
    }
    const double m = f.value(path.points[k]) - f0 - drift - fp0 * path.radial_localtime[k];
    out.martingale[k] = m;
    out.residual[k] = m - ito;
    out.bracket[k] = qv;
  }
  return out;
}

void write_walsh_csv(std::ostream& os, const WalshPath& path) {
  const auto old = os.precision(17);
  os << "t,edge,coord,localtime,driver\n";
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    const GraphPoint& p = path.points[k];
    os << static_cast<double>(k) * path.dt << ',' << (p.is_vertex() ? -1 : p.edge) << ',' << radius(p) << ','
       << path.radial_localtime[k] << ',';
    if (path.driver) os << path.driver->values[k];
    os << '\n';
  }
  os.precision(old);
}

}  // namespace walshflow
