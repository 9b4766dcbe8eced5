#include "walshflow_tools/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "walshflow/errors.hpp"
#include "walshflow/graph.hpp"
#include "walshflow/isde.hpp"
#include "walshflow/quadrant.hpp"
#include "walshflow/stats.hpp"
#include "walshflow/walsh.hpp"

namespace walshflow::experiments {

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::string> kNames{"orbm-leg", "quadrant",       "walsh-kernel",    "isde",
                                      "two-point", "coalesce", "filtered-kernel", "metric-isde"};

std::string tag(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << v;
  return os.str();
}

json est(const MCEstimate& m) { return {{"mean", m.mean}, {"stderr", m.stderr()}, {"n", m.n}}; }

json ks(const KSResult& k) { return {{"statistic", k.statistic}, {"p_value", k.p_value}, {"n", k.n}}; }

double fraction(const std::vector<double>& v, auto pred) {
  return static_cast<double>(std::count_if(v.begin(), v.end(), pred)) / static_cast<double>(v.size());
}

StarGraph star_of(const Config& c) {
  try {
    return make_star(static_cast<int>(c.probs.size()), c.probs);
  } catch (const std::invalid_argument& e) {
    throw InvalidConfig(e.what());
  }
}

GraphPoint star_start(const Config& c, const StarGraph& g) {
  if (c.x0_edge < 0) return StarGraph::origin();
  if (c.x0_edge >= g.n_rays) throw InvalidConfig("x0 edge out of range");
  return g.point(c.x0_edge, c.x);
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidConfig("cannot open csv output " + path);
  f.imbue(std::locale::classic());
  return f;
}

// signed coordinate that orders points of a star: rays in blocks, origin first
double star_key(const GraphPoint& p) { return p.is_vertex() ? -1.0 : p.edge + (1.0 - std::exp(-p.coord)); }

// -------------------------------------------------------------------------
Report run_orbm_leg(const Config& c) {
  const std::size_t n = c.paths;
  std::vector<double> ys(n), sup(n), inf(n);
  LegOptions opt;
  opt.refine = c.refine;
  parallel_for(n, c.threads, [&](std::size_t i) {
    RngStream rng(c.seed, i);
    const OrbmLeg l = orbm_leg(c.theta, c.x, c.dt, rng, opt);
    ys[i] = l.Y_S;
    sup[i] = l.sup_abs;
    inf[i] = l.inf_abs;
  });
  const double th = c.theta, x = c.x;
  Report r;
  std::vector<double> lg(n), lg2(n);
  for (std::size_t i = 0; i < n; ++i) {
    lg[i] = std::log(ys[i]);
    lg2[i] = std::pow(std::log(ys[i] / x), 2);
  }
  const MCEstimate m1 = mc_estimate(ys), ml = mc_estimate(lg), ml2 = mc_estimate(lg2);
  const double t1 = ys_moment(th, 1.0, x), tl = ys_log_mean(th, x), tl2 = ys_log_second_moment(th);
  r.estimates["Y_S_mean"] = est(m1);
  r.estimates["Y_S_mean"]["target"] = t1;
  r.estimates["log_Y_S_mean"] = est(ml);
  r.estimates["log_Y_S_mean"]["target"] = tl;
  r.estimates["log_ratio_second_moment"] = est(ml2);
  r.estimates["log_ratio_second_moment"]["target"] = tl2;
  r.estimates["Y_S_median"] = median(ys);

  const KSResult k = ks_against_cdf(ys, [&](double y) { return ys_cdf(th, x, y); });
  r.ks_results["Y_S_squared_vs_beta_prime"] = ks(k);
  r.check("ks_below_0.02", k.statistic < 0.02, {{"value", k.statistic}, {"limit", 0.02}});
  const double tol1 = std::max(3.0 * m1.stderr(), 0.02 * t1);
  r.check("Y_S_mean", std::abs(m1.mean - t1) <= tol1, {{"value", m1.mean}, {"target", t1}, {"tolerance", tol1}});
  const double toll = std::max(3.0 * ml.stderr(), 0.02 * std::abs(tl));
  r.check("log_Y_S_mean", std::abs(ml.mean - tl) <= toll, {{"value", ml.mean}, {"target", tl}, {"tolerance", toll}});
  r.check("log_ratio_second_moment", std::abs(ml2.mean - tl2) <= 0.03 * tl2,
          {{"value", ml2.mean}, {"target", tl2}, {"tolerance", 0.03 * tl2}});

  // tail bounds with two admissible exponents per side
  const double up = 1.0 + 2.0 * th / kPi, down = 1.0 - 2.0 * th / kPi;
  const double nn = static_cast<double>(n);
  for (double a : {2.0, 4.0, 8.0}) {
    const double p = fraction(sup, [&](double s) { return s > a * x; });
    const double sd = std::sqrt(p * (1.0 - p) / nn);
    for (double b : {2.0 * up / 3.0, 5.0 * up / 6.0}) {
      const double bound = tail_bound(th, x, a * x, b, Side::Up);
      r.check("tail_sup_a=" + tag(a) + "_b=" + tag(b), p <= bound + 3.0 * sd,
              {{"empirical", p}, {"bound", bound}, {"mc_sigma", sd}});
    }
  }
  for (double a : {0.5, 0.25, 0.125}) {
    const double p = fraction(inf, [&](double s) { return s < a * x; });
    const double sd = std::sqrt(p * (1.0 - p) / nn);
    for (double b : {2.0 * down / 3.0, 5.0 * down / 6.0}) {
      const double bound = tail_bound(th, x, a * x, b, Side::Down);
      r.check("tail_inf_a=" + tag(a) + "_b=" + tag(b), p <= bound + 3.0 * sd,
              {{"empirical", p}, {"bound", bound}, {"mc_sigma", sd}});
    }
  }
  if (!c.csv.empty()) {
    auto f = open_csv(c.csv);
    LegOptions o = opt;
    o.keep_path = true;
    RngStream rng(c.seed, 0);
    write_leg_csv(f, orbm_leg(th, x, c.dt, rng, o));
  }
  return r;
}

// -------------------------------------------------------------------------
Report run_quadrant(const Config& c) {
  std::vector<double> eps = c.eps;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const double eps_min = eps.back();
  const AngleSource src =
      c.random_angles ? uniform_angles(c.angle_lo, c.angle_hi) : AngleSource::fixed(c.theta1, c.theta2);
  const std::size_t n = c.paths;
  std::vector<std::vector<double>> L(eps.size(), std::vector<double>(n));
  std::vector<double> term(n), legs(n), sigma(n);
  // per-leg unit-scale local time and exit ratio, split by leg parity
  std::vector<std::array<double, 4>> leg_sums(n);
  std::vector<std::array<double, 2>> leg_counts(n);
  parallel_for(n, c.threads, [&](std::size_t i) {
    RngStream rng(c.seed, i);
    const QuadrantProcess q = quadrant_process(src, c.x, c.dt, eps_min, c.max_legs, rng);
    for (std::size_t e = 0; e < eps.size(); ++e) L[e][i] = local_time_until(q, eps[e]);
    term[i] = q.status == QuadrantStatus::Terminated ? 1.0 : 0.0;
    legs[i] = static_cast<double>(q.thetas.size());
    sigma[i] = q.sigma0_time ? *q.sigma0_time : std::numeric_limits<double>::infinity();
    leg_sums[i] = {0.0, 0.0, 0.0, 0.0};
    leg_counts[i] = {0.0, 0.0};
    for (std::size_t k = 0; k < q.leg_L.size(); ++k) {
      const std::size_t par = k % 2;
      leg_sums[i][2 * par] += q.leg_L[k] / q.U[k];
      leg_sums[i][2 * par + 1] += q.U[k + 1] / q.U[k];
      leg_counts[i][par] += 1.0;
    }
  });
  Report r;
  const double tf = fraction(term, [](double v) { return v > 0.5; });
  r.estimates["terminated_fraction"] = tf;
  r.estimates["legs_mean"] = mc_estimate(legs).mean;
  r.estimates["sigma0_time_median"] = median(sigma);
  json sweep = json::array();
  std::vector<double> means;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    const MCEstimate m = mc_estimate(L[e]);
    means.push_back(m.mean);
    json row = est(m);
    row["eps_stop"] = eps[e];
    sweep.push_back(row);
  }
  r.estimates["L_total_by_eps"] = sweep;
  if (!c.random_angles) {
    // diagnostic: E[L] = x (l1 + y1 l2) / (1 - y1 y2) from per-leg means (lighter tails than L_total)
    std::array<double, 4> tot{};
    std::array<double, 2> cnt{};
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 4; ++k) tot[k] += leg_sums[i][k];
      for (int k = 0; k < 2; ++k) cnt[k] += leg_counts[i][k];
    }
    if (cnt[0] > 0 && cnt[1] > 0) {
      const double l1 = tot[0] / cnt[0], y1 = tot[1] / cnt[0], l2 = tot[2] / cnt[1], y2 = tot[3] / cnt[1];
      const double d = 1.0 - y1 * y2;
      r.estimates["L_total_renewal_diagnostic"] = d > 0.0 ? json(c.x * (l1 + y1 * l2) / d) : json("inf");
    }
  }

  r.check("terminated_fraction", tf >= 0.995, {{"value", tf}, {"limit", 0.995}});
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i)
    if (term[i] > 0.5 && !std::isfinite(L.back()[i])) finite = false;
  r.check("L_total_finite", finite);
  if (c.random_angles && eps.size() > 1) {
    // the mean need not exist under random angles; the median must settle as eps_stop shrinks
    json meds = json::array();
    for (std::size_t e = 0; e < eps.size(); ++e) meds.push_back({{"eps_stop", eps[e]}, {"median", median(L[e])}});
    r.estimates["L_total_median_by_eps"] = meds;
    const double last = median(L.back()), prev = median(L[eps.size() - 2]);
    r.check("eps_median_stable", std::abs(last / prev - 1.0) <= 0.05,
            {{"last", last}, {"previous", prev}, {"tolerance", 0.05}});
  }
  if (!c.random_angles) {
    const double target = expected_boundary_local_time(c.theta1, c.theta2, c.x);
    r.estimates["L_total_target"] = std::isfinite(target) ? json(target) : json("inf");
    if (std::isfinite(target)) {
      const double last = means.back();
      r.check("L_total_within_5pct", std::abs(last - target) <= 0.05 * target,
              {{"value", last}, {"target", target}, {"eps_stop", eps_min}});
      if (means.size() > 1) {
        const double prev = means[means.size() - 2];
        r.check("eps_sweep_converged", std::abs(last - prev) <= 0.05 * target,
                {{"last", last}, {"previous", prev}, {"tolerance", 0.05 * target}});
      }
    } else {
      for (std::size_t e = 1; e < eps.size(); ++e) {
        const double decades = std::log10(eps[e - 1] / eps[e]);
        const double need = std::pow(1.25, decades);
        const double ratio = means[e] / means[e - 1];
        r.check("growth_eps=" + tag(eps[e]), ratio >= need, {{"ratio", ratio}, {"required", need}});
      }
    }
  }
  if (!c.csv.empty()) {
    auto f = open_csv(c.csv);
    RngStream rng(c.seed, 0);
    write_quadrant_csv(f, quadrant_process(src, c.x, c.dt, eps_min, c.max_legs, rng));
  }
  return r;
}

// -------------------------------------------------------------------------
Report run_walsh_kernel(const Config& c) {
  const StarGraph g = star_of(c);
  const CanonicalPair fg = canonical_test_functions(g, 0);
  const std::size_t n = c.paths;
  const std::vector<GraphPoint> starts{StarGraph::origin(), g.point(0, c.x)};
  Report r;
  std::size_t case_id = 0;
  for (double t : c.times)
    for (std::size_t s = 0; s < starts.size(); ++s, ++case_id) {
      const GraphPoint& x = starts[s];
      const std::string where = s == 0 ? "origin" : "e0(" + tag(c.x) + ")";
      std::vector<double> fv(n), gv(n), full(n), two(n);
      parallel_for(n, c.threads, [&](std::size_t i) {
        RngStream base(c.seed, i);
        RngStream a = base.substream(2 * case_id), b = base.substream(2 * case_id + 1);
        const GraphPoint y = wbm_exact_step(g, x, t, a);
        fv[i] = fg.f(y);
        gv[i] = fg.g(y);
        full[i] = star_key(y);
        two[i] = star_key(wbm_exact_step(g, wbm_exact_step(g, x, t / 2, b), t / 2, b));
      });
      for (int which = 0; which < 2; ++which) {
        const std::string name = std::string(which == 0 ? "P_t_f0" : "P_t_g0") + "_t=" + tag(t) + "_x=" + where;
        const MCEstimate m = mc_estimate(which == 0 ? fv : gv);
        const double exact = semigroup_apply(g, which == 0 ? fg.f : fg.g, t, x);
        r.estimates[name] = est(m);
        r.estimates[name]["semigroup"] = exact;
        r.check(name, std::abs(m.mean - exact) <= 3.0 * m.stderr(),
                {{"mc", m.mean}, {"semigroup", exact}, {"tolerance", 3.0 * m.stderr()}});
      }
      const KSResult k = ks_two_sample(full, two);
      const std::string kname = "chapman_kolmogorov_t=" + tag(t) + "_x=" + where;
      r.ks_results[kname] = ks(k);
      r.check(kname, k.statistic < 0.01, {{"value", k.statistic}, {"limit", 0.01}});
    }
  if (!c.csv.empty()) {
    auto f = open_csv(c.csv);
    RngStream rng(c.seed, 0);
    write_walsh_csv(f, wbm_coupled_path(g, StarGraph::origin(), c.T, c.dt, rng));
  }
  return r;
}

// -------------------------------------------------------------------------
DomainFunction per_ray_quadratic(const StarGraph& g) {
  std::vector<EdgeFunction> parts;
  const double p0 = g.probs[0];
  for (int i = 0; i < g.n_rays; ++i) {
    const double a = i % 3 == 0 ? 1.0 : (i % 3 == 1 ? 0.5 : 2.0);
    const double b = i == 0 ? 1.0 - p0 : -p0;  // sum p_i b_i = 0
    parts.push_back({[a, b](double r) { return a * r * r + b * r; }, [a, b](double r) { return 2 * a * r + b; },
                     [a](double) { return 2 * a; }});
  }
  return star_function(g, parts);
}

Report run_isde(const Config& c) {
  const StarGraph g = star_of(c);
  const GraphPoint x0 = star_start(c, g);
  const CanonicalPair fg = canonical_test_functions(g, 0);
  const std::vector<std::pair<std::string, DomainFunction>> fs{
      {"f0", fg.f}, {"g0", fg.g}, {"per_ray_quadratic", per_ray_quadratic(g)}};
  const std::size_t n = c.paths;
  Report r;
  double dt = c.dt;
  for (int level = 0; level <= c.refinements; ++level, dt /= 4.0) {
    std::vector<std::vector<double>> res(fs.size(), std::vector<double>(n)), mart = res, br = res;
    parallel_for(n, c.threads, [&](std::size_t i) {
      RngStream rng = RngStream(c.seed, i).substream(static_cast<std::uint64_t>(level));
      const WalshPath w = wbm_coupled_path(g, x0, c.T, dt, rng, WalshOptions{c.refine});
      for (std::size_t k = 0; k < fs.size(); ++k) {
        const FreidlinSheuSeries s = freidlin_sheu_residual(w, fs[k].second);
        res[k][i] = s.residual.back();
        mart[k][i] = s.martingale.back();
        br[k][i] = s.bracket.back();
      }
    });
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const std::string name = fs[k].first + "_dt=" + tag(dt);
      const MCEstimate m = mc_estimate(res[k]);
      const MCEstimate mm = mc_estimate(mart[k]);
      const double var = mm.stderr() * mm.stderr() * static_cast<double>(n);
      const double ratio = var / mc_estimate(br[k]).mean;
      r.estimates["residual_" + name] = est(m);
      r.estimates["variance_ratio_" + name] = ratio;
      if (level == 0)
        r.check("residual_mean_" + name, std::abs(m.mean) <= 3.0 * m.stderr(),
                {{"mean", m.mean}, {"tolerance", 3.0 * m.stderr()}});
      r.check("variance_ratio_" + name, ratio >= 0.9 && ratio <= 1.1, {{"value", ratio}, {"range", {0.9, 1.1}}});
    }
  }

  // the driving noises of the forward solution
  std::vector<std::vector<double>> wT(g.n_rays, std::vector<double>(n));
  parallel_for(n, c.threads, [&](std::size_t i) {
    RngStream rng = RngStream(c.seed, i).substream(1000);
    const IsdeSolution s = isde_forward(g, x0, c.T, c.dt, rng);
    for (int k = 0; k < g.n_rays; ++k) wT[k][i] = s.W[k].values.back() / std::sqrt(c.T);
  });
  const auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  for (int k = 0; k < g.n_rays; ++k) {
    const KSResult kr = ks_against_cdf(wT[k], phi);
    r.ks_results["W" + std::to_string(k) + "_T_normal"] = ks(kr);
    r.check("W" + std::to_string(k) + "_gaussian", kr.statistic < 0.01, {{"value", kr.statistic}, {"limit", 0.01}});
    for (int j = k + 1; j < g.n_rays; ++j) {
      double cov = 0.0;
      for (std::size_t i = 0; i < n; ++i) cov += wT[k][i] * wT[j][i];
      cov /= static_cast<double>(n);
      const double lim = 3.0 / std::sqrt(static_cast<double>(n));
      r.check("W" + std::to_string(k) + "_W" + std::to_string(j) + "_uncorrelated", std::abs(cov) <= lim,
              {{"value", cov}, {"limit", lim}});
    }
  }
  if (!c.csv.empty()) {
    auto f = open_csv(c.csv);
    RngStream rng = RngStream(c.seed, 0).substream(0);
    write_walsh_csv(f, wbm_coupled_path(g, x0, c.T, c.dt, rng, WalshOptions{c.refine}));
  }
  return r;
}

// -------------------------------------------------------------------------
Report run_two_point(const Config& c) {
  const StarGraph g = star_of(c);
  const GraphPoint start = g.point(0, c.x);
  const double p0 = g.probs[0];
  const double theta0 = std::atan(p0 / (1.0 - p0));
  const std::size_t n = c.paths;
  const double horizon = c.tmax * std::ldexp(1.0, c.doublings);
  std::vector<double> v(n);
  parallel_for(n, c.threads, [&](std::size_t i) {
    RngStream rng(c.seed, i);
    NPointOptions o;
    o.keep_path = true;
    o.max_events = 1;
    const NPointPath p = npoint_motion(g, {start, StarGraph::origin()}, horizon, c.dt, rng, o);
    const TimeChangedPair q = two_point_to_quadrant(g, p);
    v[i] = q.exit_values.empty() ? std::numeric_limits<double>::quiet_NaN() : q.exit_values[0];
  });
  Report r;
  const double done = fraction(v, [](double y) { return !std::isnan(y); });
  r.estimates["first_leg_completed_fraction"] = done;
  std::erase_if(v, [](double y) { return std::isnan(y); });
  r.estimates["theta0"] = theta0;
  KSResult k{1.0, 0.0, 0};  // nothing finished: worst case
  if (!v.empty()) k = ks_against_cdf(v, [&](double y) { return ys_cdf(theta0, c.x, y); });
  r.ks_results["first_exit_squared_vs_beta_prime"] = ks(k);
  // unfinished legs are censored; counting them as worst-case cdf error keeps the bound honest
  const double ks_bound = k.statistic + (1.0 - done);
  r.check("first_leg_ks_below_0.02", ks_bound < 0.02 && done >= 0.999,
          {{"value", k.statistic}, {"censored", 1.0 - done}, {"bound", ks_bound}, {"limit", 0.02}});

  const std::size_t nt = c.transition_paths > 0 ? c.transition_paths : std::max<std::size_t>(n / 5, 2);
  const int N = g.n_rays;
  std::vector<std::vector<int>> chains(nt);
  parallel_for(nt, c.threads, [&](std::size_t i) {
    RngStream rng = RngStream(c.seed, i).substream(1);
    NPointOptions o;
    o.max_events = c.events;
    const NPointPath p = npoint_motion(g, {start, StarGraph::origin()}, horizon, c.dt, rng, o);
    chains[i] = p.event_rays;
  });
  std::vector<std::vector<double>> count(N, std::vector<double>(N, 0.0));
  for (const auto& ch : chains) {
    int prev = 0;
    for (int ray : ch) {
      if (ray < 0) break;
      count[prev][ray] += 1.0;
      prev = ray;
    }
  }
  json mat = json::array();
  for (int i = 0; i < N; ++i) {
    double tot = 0.0;
    for (double x : count[i]) tot += x;
    json row = json::array();
    for (int j = 0; j < N; ++j) {
      const double pij = i == j ? 0.0 : g.probs[j] / (1.0 - g.probs[i]);
      const double f = tot > 0 ? count[i][j] / tot : 0.0;
      row.push_back({{"frequency", f}, {"target", pij}, {"count", count[i][j]}});
      const double sd = tot > 0 ? std::sqrt(pij * (1.0 - pij) / tot) : 0.0;
      r.check("transition_" + std::to_string(i) + "_" + std::to_string(j), tot > 0 && std::abs(f - pij) <= 3.0 * sd,
              {{"frequency", f}, {"target", pij}, {"tolerance", 3.0 * sd}});
    }
    mat.push_back(row);
  }
  r.estimates["transitions"] = mat;
  if (!c.csv.empty()) {
    auto f = open_csv(c.csv);
    RngStream rng(c.seed, 0);
    NPointOptions o;
    o.keep_path = true;
    o.max_events = c.events;
    write_npoint_csv(f, npoint_motion(g, {start, StarGraph::origin()}, horizon, c.dt, rng, o));
  }
  return r;
}

// -------------------------------------------------------------------------
Report run_coalesce(const Config& c) {
  const StarGraph g = star_of(c);
  const GraphPoint start = g.point(0, c.x);
  const std::size_t n = c.paths;
  const double horizon = c.tmax * std::ldexp(1.0, c.doublings);
  struct Variant {
    std::string name;
    double dt, mult;
  };
  std::vector<Variant> vars{{"base", c.dt, c.tol_multiples.front()}};
  double dt = c.dt;
  for (int k = 1; k <= c.refinements; ++k) vars.push_back({"dt/" + std::to_string(1 << (2 * k)), dt /= 4.0, c.tol_multiples.front()});
  for (std::size_t m = 1; m < c.tol_multiples.size(); ++m)
    vars.push_back({"tol=" + tag(c.tol_multiples[m]) + "sqrt(dt)", c.dt, c.tol_multiples[m]});

  Report r;
  std::vector<double> medians;
  for (const Variant& v : vars) {
    std::vector<double> tau(n);
    NPointOptions o;
    o.tol_c = v.mult * std::sqrt(v.dt);
    parallel_for(n, c.threads, [&](std::size_t i) {
      RngStream rng(c.seed, i);
      const CoalescenceResult res = coalescence_time(g, start, StarGraph::origin(), v.dt, rng, horizon, o);
      tau[i] = res.coalesced ? res.time : std::numeric_limits<double>::infinity();
    });
    const double frac = fraction(tau, [](double t) { return std::isfinite(t); });
    const double by_tmax = fraction(tau, [&](double t) { return t <= c.tmax; });
    const double med = median(tau);
    medians.push_back(med);
    r.estimates[v.name] = {{"dt", v.dt},
                           {"tol_c", o.tol_c},
                           {"coalesced_fraction", frac},
                           {"coalesced_by_first_tmax", by_tmax},
                           {"median_tau", med},
                           {"quartiles", {quantile(tau, 0.25), quantile(tau, 0.75)}}};
    if (&v == &vars.front())
      r.check("coalesced_fraction", frac >= 0.99, {{"value", frac}, {"limit", 0.99}, {"horizon", horizon}});
    else
      r.check("median_stable_" + v.name, std::abs(med / medians.front() - 1.0) <= 0.1,
              {{"median", med}, {"base_median", medians.front()}, {"tolerance", 0.1}});
  }
  if (!c.csv.empty()) {
    auto f = open_csv(c.csv);
    RngStream rng(c.seed, 0);
    NPointOptions o;
    o.keep_path = true;
    o.tol_c = c.tol_multiples.front() * std::sqrt(c.dt);
    write_npoint_csv(f, npoint_motion(g, {start, StarGraph::origin()}, c.tmax, c.dt, rng, o));
  }
  return r;
}

// -------------------------------------------------------------------------
Report run_filtered_kernel(const Config& c) {
  const StarGraph g = star_of(c);
  const GraphPoint x0 = star_start(c, g);
  const std::size_t n = c.paths;
  Report r;
  std::vector<double> medians;
  json levels = json::array();
  double dt = c.dt;
  for (int level = 0; level <= c.refinements; ++level, dt /= 4.0) {
    std::vector<double> disp(n);
    std::vector<FilteredKernelEstimate> ests(n);
    parallel_for(n, c.threads, [&](std::size_t i) {
      RngStream rng = RngStream(c.seed, i).substream(static_cast<std::uint64_t>(level));
      ests[i] = filtered_kernel(g, x0, c.T, dt, c.replicas, rng);
      disp[i] = ests[i].dispersion;
    });
    const double tol = 2.0 * std::sqrt(dt);
    const double med = median(disp);
    medians.push_back(med);
    std::vector<std::vector<std::size_t>> counts(g.n_rays, std::vector<std::size_t>(ests[0].counts[0].size(), 0));
    std::size_t at_origin = 0;
    for (const auto& e : ests) {
      at_origin += e.at_origin;
      for (int k = 0; k < g.n_rays; ++k)
        for (std::size_t b = 0; b < counts[k].size(); ++b) counts[k][b] += e.counts[k][b];
    }
    const double wide = fraction(disp, [](double d) { return d > 0.5; });
    levels.push_back({{"dt", dt},
                      {"median_dispersion", med},
                      {"fraction_dispersion_above_0.5", wide},
                      {"fraction_below_10_tol_c", fraction(disp, [&](double d) { return d < 10.0 * tol; })},
                      {"tol_c", tol},
                      {"bins", ests[0].radial_edges},
                      {"counts", counts},
                      {"at_origin", at_origin},
                      {"seed", c.seed}});
    if (level == 0) continue;
    if (g.n_rays == 2) {
      r.check("median_halves_dt=" + tag(dt), med <= 0.5 * medians[level - 1],
              {{"median", med}, {"previous", medians[level - 1]}});
    } else {
      r.check("median_stable_dt=" + tag(dt), std::abs(med / medians.front() - 1.0) <= 0.2,
              {{"median", med}, {"base_median", medians.front()}, {"tolerance", 0.2}});
    }
  }
  if (g.n_rays >= 3)
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double w = levels[l]["fraction_dispersion_above_0.5"].get<double>();
      r.check("wide_fraction_dt=" + tag(levels[l]["dt"].get<double>()), w > 0.2, {{"value", w}, {"limit", 0.2}});
    }
  r.estimates["levels"] = levels;
  return r;
}

// -------------------------------------------------------------------------
Report run_metric_isde(const Config& c) {
  MetricGraph g = [&] {
    try {
      if (c.graph_file.empty()) return star_as_metric(star_of(c));
      std::ifstream f(c.graph_file);
      if (!f) throw InvalidConfig("cannot read graph file " + c.graph_file);
      std::stringstream ss;
      ss << f.rdbuf();
      return metric_graph_from_json(ss.str());
    } catch (const InvalidConfig&) {
      throw;
    } catch (const std::exception& e) {
      throw InvalidConfig(e.what());
    }
  }();
  GraphPoint x0;
  if (c.x0_edge >= 0) {
    if (c.x0_edge >= static_cast<int>(g.edges().size())) throw InvalidConfig("x0 edge out of range");
    if (!(c.x > 0.0 && c.x < g.edges()[c.x0_edge].length)) throw InvalidConfig("x0 coordinate off the edge");
    x0 = g.point(c.x0_edge, c.x);
  } else {
    if (c.x0_vertex < 0 || c.x0_vertex >= static_cast<int>(g.n_vertices())) throw InvalidConfig("x0 vertex out of range");
    x0 = GraphPoint::at_vertex(c.x0_vertex);
  }
  const std::size_t n = c.paths;
  const std::size_t E = g.edges().size();
  Report r;
  std::vector<std::vector<double>> dist(2, std::vector<double>(n));
  json levels = json::array();
  for (int level = 0; level < 2; ++level) {
    const double dt = level == 0 ? c.dt : c.dt / 16.0;
    std::vector<GraphPoint> end(n);
    std::vector<double> lt(n);
    parallel_for(n, c.threads, [&](std::size_t i) {
      RngStream rng = RngStream(c.seed, i).substream(static_cast<std::uint64_t>(level));
      const MetricIsdeSolution s = metric_isde_forward(g, x0, c.T, dt, rng);
      end[i] = s.x_path.back();
      lt[i] = s.localtime.back();
      dist[level][i] = distance(g, x0, end[i]);
    });
    std::vector<double> occ(E, 0.0);
    double at_vertex = 0.0;
    for (const auto& p : end) (p.is_vertex() ? at_vertex : occ[p.edge]) += 1.0 / static_cast<double>(n);
    levels.push_back({{"dt", dt},
                      {"distance_from_start", est(mc_estimate(dist[level]))},
                      {"local_time", est(mc_estimate(lt))},
                      {"edge_occupation", occ},
                      {"at_vertex", at_vertex}});
  }
  r.estimates["levels"] = levels;
  const KSResult k = ks_two_sample(dist[0], dist[1]);
  r.ks_results["distance_dt_vs_dt/16"] = ks(k);
  r.check("refinement_consistent", k.p_value > 1e-3, {{"p_value", k.p_value}, {"limit", 1e-3}});
  if (!c.csv.empty()) {
    auto f = open_csv(c.csv);
    RngStream rng = RngStream(c.seed, 0).substream(0);
    const MetricIsdeSolution s = metric_isde_forward(g, x0, c.T, c.dt, rng);
    f.precision(17);
    f << "t,edge,coord,vertex,localtime,driver\n";
    for (std::size_t k2 = 0; k2 < s.t.size(); ++k2) {
      const GraphPoint& p = s.x_path[k2];
      f << s.t[k2] << ',' << p.edge << ',' << p.coord << ',' << (p.is_vertex() ? p.vertex : -1) << ','
        << s.localtime[k2] << ',' << s.driver[k2] << '\n';
    }
  }
  return r;
}

void need(bool ok, const std::string& what) {
  if (!ok) throw InvalidConfig(what);
}

bool angle_ok(double t) { return t > 0.0 && t < kPi / 2; }

}  // namespace

const std::vector<std::string>& experiment_names() { return kNames; }

bool is_experiment(const std::string& name) { return std::find(kNames.begin(), kNames.end(), name) != kNames.end(); }

json config_to_json(const Config& c) {
  return {{"experiment", c.experiment},
          {"probs", c.probs},
          {"graph_file", c.graph_file},
          {"theta", c.theta},
          {"theta1", c.theta1},
          {"theta2", c.theta2},
          {"random_angles", c.random_angles},
          {"angle_lo", c.angle_lo},
          {"angle_hi", c.angle_hi},
          {"x", c.x},
          {"x0_edge", c.x0_edge},
          {"x0_vertex", c.x0_vertex},
          {"dt", c.dt},
          {"T", c.T},
          {"eps", c.eps},
          {"times", c.times},
          {"paths", c.paths},
          {"transition_paths", c.transition_paths},
          {"replicas", c.replicas},
          {"max_legs", c.max_legs},
          {"events", c.events},
          {"tmax", c.tmax},
          {"doublings", c.doublings},
          {"tol_multiples", c.tol_multiples},
          {"refinements", c.refinements},
          {"refine", c.refine},
          {"seed", c.seed},
          {"threads", c.threads},
          {"output", c.output},
          {"csv", c.csv}};
}

Config config_from_json(const json& j) {
  Config c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "experiment") c.experiment = v.get<std::string>();
      else if (k == "probs") c.probs = v.get<std::vector<double>>();
      else if (k == "graph_file") c.graph_file = v.get<std::string>();
      else if (k == "theta") c.theta = v.get<double>();
      else if (k == "theta1") c.theta1 = v.get<double>();
      else if (k == "theta2") c.theta2 = v.get<double>();
      else if (k == "random_angles") c.random_angles = v.get<bool>();
      else if (k == "angle_lo") c.angle_lo = v.get<double>();
      else if (k == "angle_hi") c.angle_hi = v.get<double>();
      else if (k == "x") c.x = v.get<double>();
      else if (k == "x0_edge") c.x0_edge = v.get<int>();
      else if (k == "x0_vertex") c.x0_vertex = v.get<int>();
      else if (k == "dt") c.dt = v.get<double>();
      else if (k == "T") c.T = v.get<double>();
      else if (k == "eps") c.eps = v.get<std::vector<double>>();
      else if (k == "times") c.times = v.get<std::vector<double>>();
      else if (k == "paths") c.paths = v.get<std::uint64_t>();
      else if (k == "transition_paths") c.transition_paths = v.get<std::uint64_t>();
      else if (k == "replicas") c.replicas = v.get<std::uint64_t>();
      else if (k == "max_legs") c.max_legs = v.get<std::uint64_t>();
      else if (k == "events") c.events = v.get<std::uint64_t>();
      else if (k == "tmax") c.tmax = v.get<double>();
      else if (k == "doublings") c.doublings = v.get<int>();
      else if (k == "tol_multiples") c.tol_multiples = v.get<std::vector<double>>();
      else if (k == "refinements") c.refinements = v.get<int>();
      else if (k == "refine") c.refine = v.get<bool>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "threads") c.threads = v.get<unsigned>();
      else if (k == "output") c.output = v.get<std::string>();
      else if (k == "csv") c.csv = v.get<std::string>();
      else throw InvalidConfig("unknown config key " + k);
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(e.what());
  }
  return c;
}

void validate(const Config& c) {
  if (!is_experiment(c.experiment)) throw UnknownExperiment("unknown experiment '" + c.experiment + "'");
  need(c.paths >= 2, "paths must be >= 2");
  need(c.dt > 0.0, "dt must be > 0");
  need(c.threads >= 1, "threads must be >= 1");
  need(c.x > 0.0, "x must be > 0");
  const std::string& e = c.experiment;
  if (e == "orbm-leg") need(angle_ok(c.theta), "theta must lie in (0, pi/2)");
  if (e == "quadrant") {
    if (c.random_angles)
      need(angle_ok(c.angle_lo) && angle_ok(c.angle_hi) && c.angle_lo <= c.angle_hi, "bad angle range");
    else
      need(angle_ok(c.theta1) && angle_ok(c.theta2), "theta1, theta2 must lie in (0, pi/2)");
    need(!c.eps.empty(), "eps list is empty");
    for (double v : c.eps) need(v > 0.0 && v < c.x, "eps values must lie in (0, x)");
    need(c.max_legs >= 1, "max_legs must be >= 1");
  }
  if (e == "walsh-kernel") {
    need(!c.times.empty(), "times list is empty");
    for (double t : c.times) need(t > 0.0, "times must be > 0");
  }
  if (e == "isde" || e == "filtered-kernel" || e == "metric-isde") need(c.T > c.dt, "need T > dt");
  if (e == "isde" || e == "coalesce" || e == "filtered-kernel") need(c.refinements >= 0 && c.refinements <= 6, "refinements must be in [0, 6]");
  if (e == "two-point" || e == "coalesce") {
    need(c.tmax > 0.0 && c.doublings >= 0 && c.doublings <= 60, "bad tmax/doublings");
    need(c.probs.size() >= 2, "need at least two rays");
  }
  if (e == "two-point") need(c.events >= 1, "events must be >= 1");
  if (e == "coalesce") {
    need(!c.tol_multiples.empty(), "tol_multiples is empty");
    for (double m : c.tol_multiples) need(m > 0.0, "tol multiples must be > 0");
  }
  if (e == "filtered-kernel") need(c.replicas >= 2, "replicas must be >= 2");
  if (e != "metric-isde" || c.graph_file.empty()) (void)star_of(c);
}

void Report::check(const std::string& name, bool pass, json detail) {
  detail["pass"] = pass;
  bound_checks[name] = std::move(detail);
}

bool Report::all_pass() const {
  for (const auto& [k, v] : bound_checks.items())
    if (!v.at("pass").get<bool>()) return false;
  return true;
}

Report run(const Config& c) {
  validate(c);
  try {
    const std::string& e = c.experiment;
    if (e == "orbm-leg") return run_orbm_leg(c);
    if (e == "quadrant") return run_quadrant(c);
    if (e == "walsh-kernel") return run_walsh_kernel(c);
    if (e == "isde") return run_isde(c);
    if (e == "two-point") return run_two_point(c);
    if (e == "coalesce") return run_coalesce(c);
    if (e == "filtered-kernel") return run_filtered_kernel(c);
    return run_metric_isde(c);
  } catch (const LegOverflow&) {
    throw;
  } catch (const InvalidConfig&) {
    throw;
  } catch (const std::invalid_argument& ex) {
    throw InvalidConfig(ex.what());
  }
}

json report_json(const Config& c, const Report& r, double wall_time) {
  return {{"schema", 1},
          {"experiment", c.experiment},
          {"estimates", r.estimates},
          {"ks_results", r.ks_results},
          {"bound_checks", r.bound_checks},
          {"config", config_to_json(c)},
          {"seed", c.seed},
          {"pass", r.all_pass()},
          {"wall_time", wall_time}};
}

}  // namespace walshflow::experiments
