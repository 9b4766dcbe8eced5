#include "walshflow/isde.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "walshflow/errors.hpp"
#include "walshflow/walsh.hpp"

namespace walshflow {

namespace {

std::size_t grid_steps(double T, double dt, const char* who) {
  if (!(dt > 0.0) || !(T > dt)) throw std::invalid_argument(std::string(who) + ": need T > dt > 0");
  return static_cast<std::size_t>(std::llround(T / dt));
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
};

}  // namespace

IsdeSolution isde_forward(const StarGraph& g, const GraphPoint& x0, double T, double dt, RngStream& rng) {
  const std::size_t steps = grid_steps(T, dt, "isde_forward");
  WalshPath x = wbm_path_from_driver(g, x0, sample_bm(steps, dt, rng), rng);
  IsdeSolution s;
  s.dt = dt;
  s.driver = std::move(*x.driver);
  for (int i = 0; i < g.n_rays; ++i) s.V.push_back(sample_bm(steps, dt, rng));
  for (int i = 0; i < g.n_rays; ++i) {
    BrownianGrid w{dt, std::vector<double>(steps + 1, 0.0)};
    const auto& b = s.driver.values;
    const auto& v = s.V[i].values;
    for (std::size_t k = 0; k < steps; ++k) {
      const double inc = x.rays[k] == i ? b[k + 1] - b[k] : v[k + 1] - v[k];
      w.values[k + 1] = w.values[k] + inc;
    }
    s.W.push_back(std::move(w));
  }
  s.x_path = std::move(x.points);
  s.localtime = std::move(x.radial_localtime);
  return s;
}

double signed_coord(const GraphPoint& x) {
  if (x.is_vertex()) return 0.0;
  return x.edge == 0 ? x.coord : -x.coord;
}

namespace {

void check_n2(const StarGraph& g2, const BrownianGrid& w0, const BrownianGrid& w1) {
  if (g2.n_rays != 2) throw std::invalid_argument("isde_n2_from_noise: star must have two rays");
  if (w0.values.size() != w1.values.size() || w0.values.empty())
    throw std::invalid_argument("isde_n2_from_noise: noise grids differ in length");
}

std::vector<double> n2_transformed(const StarGraph& g2, const GraphPoint& x0, const BrownianGrid& w0,
                                   const BrownianGrid& w1) {
  const double beta = (1.0 - g2.probs[0]) / g2.probs[0];
  const std::size_t n = w0.values.size();
  std::vector<double> y(n);
  const double x = signed_coord(x0);
  y[0] = x > 0.0 ? beta * x : x;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double d0 = w0.values[k + 1] - w0.values[k];
    const double d1 = w1.values[k + 1] - w1.values[k];
    y[k + 1] = y[k] > 0.0 ? y[k] + beta * d0 : y[k] - d1;
  }
  return y;
}

GraphPoint n2_point(const StarGraph& g2, double y) {
  const double beta = (1.0 - g2.probs[0]) / g2.probs[0];
  if (y > 0.0) return g2.point(0, y / beta);
  if (y < 0.0) return g2.point(1, -y);
  return StarGraph::origin();
}

}  // namespace

std::vector<GraphPoint> isde_n2_from_noise(const StarGraph& g2, const GraphPoint& x0, const BrownianGrid& w0,
                                           const BrownianGrid& w1) {
  check_n2(g2, w0, w1);
  const auto y = n2_transformed(g2, x0, w0, w1);
  std::vector<GraphPoint> out(y.size());
  std::transform(y.begin(), y.end(), out.begin(), [&](double v) { return n2_point(g2, v); });
  return out;
}

N2Pair isde_n2_pair(const StarGraph& g2, const GraphPoint& x, const GraphPoint& y, const BrownianGrid& w0,
                    const BrownianGrid& w1) {
  check_n2(g2, w0, w1);
  auto a = n2_transformed(g2, x, w0, w1);
  auto b = n2_transformed(g2, y, w0, w1);
  N2Pair out;
  const double s0 = a[0] - b[0];
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    if (!out.merge_index && (d == 0.0 || (d > 0.0) != (s0 > 0.0))) out.merge_index = k;
    if (out.merge_index) b[k] = a[k];
  }
  out.first.resize(a.size());
  out.second.resize(b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    out.first[k] = n2_point(g2, a[k]);
    out.second[k] = n2_point(g2, b[k]);
  }
  return out;
}

NPointPath npoint_motion(const StarGraph& g, const std::vector<GraphPoint>& starts, double T, double dt,
                         RngStream& rng, const NPointOptions& opt) {
  if (starts.empty()) throw std::invalid_argument("npoint_motion: no starting points");
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("npoint_motion: need T > 0 and dt > 0");
  const double tol = opt.tol_c > 0.0 ? opt.tol_c : 2.0 * std::sqrt(dt);
  const std::size_t n = starts.size();
  const int N = g.n_rays;

  NPointPath path;
  path.dt = dt;
  path.n = n;
  UnionFind uf(n);
  std::vector<int> ray(n, -1);
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!starts[i].is_vertex()) {
      if (starts[i].edge < 0 || starts[i].edge >= N) throw std::invalid_argument("npoint_motion: bad ray");
      ray[i] = starts[i].edge;
      r[i] = starts[i].coord;
    }
  }
  std::size_t clusters = n;
  double t = 0.0;

  auto merge = [&](std::size_t a, std::size_t b) {
    a = uf.find(a);
    b = uf.find(b);
    if (a == b) return a;
    for (std::size_t i = 0; i < n; ++i) {
      if (uf.find(i) != a) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (uf.find(j) == b) path.coalesced_pairs.push_back({std::min(i, j), std::max(i, j), t});
    }
    const std::size_t root = std::min(a, b);
    uf.parent[std::max(a, b)] = root;
    --clusters;
    return root;
  };

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (starts[i] == starts[j]) merge(i, j);

  int piv = -1;
  for (std::size_t i = 0; i < n && piv < 0; ++i)
    if (uf.find(i) == i && r[i] == 0.0) piv = static_cast<int>(i);
  // several clusters at the origin at time 0 are coincident
  for (std::size_t i = 0; i < n; ++i)
    if (piv >= 0 && uf.find(i) == i && r[i] == 0.0) piv = static_cast<int>(merge(static_cast<std::size_t>(piv), i));

  std::vector<double> wcum(N, 0.0);
  if (opt.keep_path) path.W.assign(N, {});

  auto record = [&](bool tau) {
    if (tau) path.tau_events.push_back(path.t.size());
    if (!opt.keep_path) return;
    path.t.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = uf.find(i);
      path.traj.push_back(r[c] > 0.0 ? GraphPoint{ray[c], r[c], kNoVertex} : StarGraph::origin());
    }
    path.pivot.push_back(piv);
    for (int i = 0; i < N; ++i) path.W[i].push_back(wcum[i]);
  };
  record(false);

  std::vector<double> dW(N);
  std::vector<std::size_t> hitters;
  std::size_t events = 0;
  while (t < T) {
    if (n > 1 && clusters == 1 && opt.stop_when_coalesced) break;
    if (opt.max_events > 0 && events >= opt.max_events) break;
    if (path.steps >= opt.max_steps) throw LegOverflow("npoint_motion: step budget exhausted");

    double h = dt;
    if (opt.adaptive && clusters > 1) {
      double near = kInf;
      for (std::size_t c = 0; c < n; ++c)
        if (uf.find(c) == c && static_cast<int>(c) != piv) near = std::min(near, r[c]);
      const double s = std::max(piv >= 0 ? r[piv] : 0.0, near);
      h = dt * s * s;
    }
    const double sh = std::sqrt(h);
    const double dB = sh * rng.normal();
    for (int i = 0; i < N; ++i) dW[i] = sh * rng.normal();
    if (piv >= 0) {
      if (r[piv] == 0.0) ray[piv] = static_cast<int>(rng.categorical(g.probs));
      dW[ray[piv]] = dB;
    }
    for (int i = 0; i < N; ++i) wcum[i] += dW[i];

    hitters.clear();
    for (std::size_t c = 0; c < n; ++c) {
      if (uf.find(c) != c || static_cast<int>(c) == piv) continue;
      const double rn = r[c] + dW[ray[c]];
      bool hit = rn <= 0.0;
      if (!hit && opt.refine) {
        const double e = 2.0 * r[c] * rn / h;
        hit = e < 60.0 && rng.uniform() < std::exp(-e);
      }
      if (hit) {
        hitters.push_back(c);
        r[c] = 0.0;
      } else {
        r[c] = rn;
      }
    }
    if (piv >= 0) r[piv] = std::max(0.0, r[piv] + dB);
    t += h;
    ++path.steps;

    if (hitters.empty()) {
      record(false);
      continue;
    }
    ++events;
    const int old = piv;
    const double old_r = old >= 0 ? r[old] : 0.0;
    const int old_ray = old >= 0 ? ray[old] : -1;
    std::size_t np = hitters.front();
    for (std::size_t k = 1; k < hitters.size(); ++k) np = merge(np, hitters[k]);
    for (std::size_t c = 0; c < n; ++c) {
      if (uf.find(c) != c || c == uf.find(np)) continue;
      if (r[c] < tol) np = merge(np, c);
    }
    np = uf.find(np);
    r[np] = 0.0;
    ray[np] = -1;
    const bool old_alive = old >= 0 && uf.find(static_cast<std::size_t>(old)) != np;
    path.event_rays.push_back(old_alive ? old_ray : -1);
    path.event_pivot_radius.push_back(old_r);
    piv = static_cast<int>(np);
    record(true);
  }
  if (!opt.keep_path) path.tau_events.clear();
  path.final_time = t;
  path.all_coalesced = n > 1 && clusters == 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = uf.find(i);
    path.final_points.push_back(r[c] > 0.0 ? GraphPoint{ray[c], r[c], kNoVertex} : StarGraph::origin());
  }
  return path;
}

CoalescenceResult coalescence_time(const StarGraph& g, const GraphPoint& x, const GraphPoint& y, double dt,
                                   RngStream& rng, double Tmax, const NPointOptions& opt) {
  if (x == y) return {true, 0.0};
  NPointOptions o = opt;
  o.stop_when_coalesced = true;
  o.keep_path = false;
  o.max_events = 0;
  const NPointPath p = npoint_motion(g, {x, y}, Tmax, dt, rng, o);
  if (!p.all_coalesced) return {false, 0.0};
  return {true, p.coalesced_pairs.front().time};
}

TimeChangedPair two_point_to_quadrant(const StarGraph& g, const NPointPath& path) {
  if (path.n != 2 || path.t.empty()) throw std::invalid_argument("two_point_to_quadrant: need a recorded two-point path");
  const GraphPoint& p0 = path.at(0, 0);
  const GraphPoint& p1 = path.at(0, 1);
  if (p0.is_vertex() == p1.is_vertex())
    throw std::invalid_argument("two_point_to_quadrant: exactly one point must start at the origin");
  const std::size_t a = p0.is_vertex() ? 1 : 0;

  TimeChangedPair q;
  const std::size_t K = path.t.size();
  q.A.assign(K, 0.0);
  std::size_t next_tau = 0;
  int leg_ray = -1;
  for (std::size_t k = 0; k < K; ++k) {
    const int pv = path.pivot[k];
    const bool is_tau = next_tau < path.tau_events.size() && path.tau_events[next_tau] == k;
    if (is_tau) ++next_tau;
    if (pv < 0) break;
    const std::size_t np = 1 - static_cast<std::size_t>(pv);
    const GraphPoint& x = path.at(k, np);
    const GraphPoint& y = path.at(k, static_cast<std::size_t>(pv));
    if (is_tau) {
      q.leg_end.push_back(q.U.size());
      q.exit_values.push_back(path.event_pivot_radius[q.leg_end.size() - 1]);
      if (x.is_vertex()) break;  // coalesced
    }
    if (k == 0 || is_tau) {
      leg_ray = x.edge;
      q.rays.push_back(leg_ray);
      const double p = g.probs[leg_ray];
      q.thetas.push_back(std::atan(p / (1.0 - p)));
    }
    const bool same = !y.is_vertex() && y.edge == leg_ray;
    if (!same) {
      const double refl = radius(y);
      q.U.push_back(np == a ? radius(x) : refl);
      q.V.push_back(np == a ? refl : radius(x));
      q.clock.push_back(q.A[k]);
      q.gamma.push_back(k);
    }
    if (k + 1 < K) q.A[k + 1] = q.A[k] + (same ? 0.0 : path.t[k + 1] - path.t[k]);
  }
  return q;
}

std::vector<GraphPoint> follow_noise(const StarGraph& g, const GraphPoint& x0, const std::vector<BrownianGrid>& W,
                                     RngStream& rng) {
  if (static_cast<int>(W.size()) != g.n_rays || W.empty()) throw std::invalid_argument("follow_noise: need one grid per ray");
  const std::size_t n = W[0].values.size();
  std::vector<GraphPoint> out(n);
  int ray = x0.is_vertex() ? -1 : x0.edge;
  double r = radius(x0);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      r = std::max(0.0, r + W[ray].values[k] - W[ray].values[k - 1]);
    }
    if (r <= 0.0) {
      out[k] = StarGraph::origin();
      ray = static_cast<int>(rng.categorical(g.probs));
    } else {
      out[k] = GraphPoint{ray, r, kNoVertex};
    }
  }
  return out;
}

FilteredKernelEstimate filtered_kernel(const StarGraph& g, const GraphPoint& x0, double T, double dt, std::size_t m,
                                       RngStream& rng) {
  if (m < 2) throw std::invalid_argument("filtered_kernel: need m >= 2");
  RngStream s0 = rng.substream(0);
  IsdeSolution sol = isde_forward(g, x0, T, dt, s0);
  FilteredKernelEstimate est;
  est.endpoints.push_back(sol.x_path.back());
  for (std::size_t j = 1; j < m; ++j) {
    RngStream sj = rng.substream(j);
    est.endpoints.push_back(follow_noise(g, x0, sol.W, sj).back());
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      est.dispersion = std::max(est.dispersion, distance(g, est.endpoints[i], est.endpoints[j]));
  const std::size_t bins = 16;
  const double width = 4.0 * std::sqrt(T) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) est.radial_edges.push_back(width * static_cast<double>(b));
  est.counts.assign(g.n_rays, std::vector<std::size_t>(bins, 0));
  for (const GraphPoint& p : est.endpoints) {
    if (p.is_vertex()) {
      ++est.at_origin;
      continue;
    }
    const auto b = std::min(bins - 1, static_cast<std::size_t>(p.coord / width));
    ++est.counts[p.edge][b];
  }
  return est;
}

MetricIsdeSolution metric_isde_forward(const MetricGraph& g, const GraphPoint& x0, double T, double dt,
                                       RngStream& rng, const MetricOptions& opt) {
  if (!(dt > 0.0) || !(T > dt)) throw std::invalid_argument("metric_isde_forward: need T > dt > 0");
  if (!(opt.clamp > 0.0)) throw std::invalid_argument("metric_isde_forward: clamp must be > 0");
  const auto& edges = g.edges();
  const std::size_t E = edges.size();
  GraphPoint x = x0.is_vertex() ? x0 : g.point(x0.edge, x0.coord);
  if (x.is_vertex() && (x.vertex < 0 || x.vertex >= static_cast<int>(g.n_vertices())))
    throw std::invalid_argument("metric_isde_forward: bad start vertex");

  MetricIsdeSolution s;
  s.W.assign(E, {0.0});
  s.t.push_back(0.0);
  s.x_path.push_back(x);
  s.driver.push_back(0.0);
  s.localtime.push_back(0.0);
  double t = 0.0, B = 0.0, L = 0.0;
  std::vector<double> dV(E);
  const double eps = 1e-12 * T;
  while (t < T - eps) {
    double far = kInf;
    if (x.is_vertex()) {
      for (const IncidentEdge& ie : g.incident(x.vertex)) far = std::min(far, edges[ie.edge].length);
    } else {
      const double len = edges[x.edge].length;
      far = std::max(x.coord, len - x.coord);
    }
    double h = std::min(dt, T - t);
    while (opt.clamp * std::sqrt(h) >= far) h *= 0.5;
    const double sh = std::sqrt(h);
    const double dB = sh * rng.normal();
    for (std::size_t e = 0; e < E; ++e) dV[e] = sh * rng.normal();

    if (x.is_vertex()) {
      const auto& inc = g.incident(x.vertex);
      std::vector<double> w(inc.size());
      std::transform(inc.begin(), inc.end(), w.begin(), [](const IncidentEdge& ie) { return ie.p; });
      const IncidentEdge& ie = inc[rng.categorical(w)];
      const double len = edges[ie.edge].length;
      dV[ie.edge] = ie.out ? dB : -dB;  // drawn edge takes the driver, oriented along its coordinate
      if (dB <= 0.0) {
        L -= dB;
      } else if (dB >= len) {
        x = GraphPoint::at_vertex(ie.out ? edges[ie.edge].to : edges[ie.edge].from);
      } else {
        x = GraphPoint{ie.edge, ie.out ? dB : len - dB, kNoVertex};
      }
    } else {
      const Edge& e = edges[x.edge];
      dV[x.edge] = dB;
      const double c = x.coord + dB;
      if (c <= 0.0) {
        L -= c;
        x = GraphPoint::at_vertex(e.from);
      } else if (c >= e.length) {
        L += c - e.length;
        x = GraphPoint::at_vertex(e.to);
      } else {
        x.coord = c;
      }
    }
    for (std::size_t e = 0; e < E; ++e) s.W[e].push_back(s.W[e].back() + dV[e]);
    t += h;
    B += dB;
    s.t.push_back(t);
    s.x_path.push_back(x);
    s.driver.push_back(B);
    s.localtime.push_back(L);
  }
  return s;
}

void write_npoint_csv(std::ostream& os, const NPointPath& path) {
  const auto old = os.precision(17);
  os << 't';
  for (std::size_t i = 1; i <= path.n; ++i) os << ",point_" << i << "_edge,point_" << i << "_coord";
  os << ",pivot_index,tau_flags\n";
  std::size_t next_tau = 0;
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    os << path.t[k];
    for (std::size_t i = 0; i < path.n; ++i) {
      const GraphPoint& p = path.at(k, i);
      os << ',' << (p.is_vertex() ? -1 : p.edge) << ',' << radius(p);
    }
    const bool tau = next_tau < path.tau_events.size() && path.tau_events[next_tau] == k;
    if (tau) ++next_tau;
    os << ',' << path.pivot[k] << ',' << (tau ? 1 : 0) << '\n';
  }
  os.precision(old);
}

}  // namespace walshflow
