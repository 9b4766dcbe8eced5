#include "walshflow/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>

namespace walshflow {

namespace {

constexpr double kSumTol = 1e-12;
constexpr double kContinuityTol = 1e-9;

void check_probs(const std::vector<double>& p, const char* what) {
  double s = 0.0;
  for (double v : p) {
    const bool ok = (v > 0.0 && v < 1.0) || (p.size() == 1 && v == 1.0);
    if (!ok) throw std::invalid_argument(std::string(what) + ": probabilities must lie in (0,1)");
    s += v;
  }
  if (std::abs(s - 1.0) > kSumTol) throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

}  // namespace

StarGraph make_star(int n, std::vector<double> probs) {
  if (n < 1) throw std::invalid_argument("make_star: need at least one ray");
  if (static_cast<int>(probs.size()) != n) throw std::invalid_argument("make_star: probs has wrong length");
  check_probs(probs, "make_star");
  return StarGraph{n, std::move(probs)};
}

GraphPoint StarGraph::point(int ray, double r) const {
  if (ray < 0 || ray >= n_rays) throw std::out_of_range("StarGraph::point: bad ray");
  if (r < 0.0) throw std::invalid_argument("StarGraph::point: negative radius");
  if (r == 0.0) return origin();
  return {ray, r, kNoVertex};
}

MetricGraph::MetricGraph(std::vector<int> vertex_ids, std::vector<Edge> edges,
                         std::vector<std::vector<std::pair<int, double>>> params)
    : vertex_ids_(std::move(vertex_ids)), edges_(std::move(edges)) {
  const int nv = static_cast<int>(vertex_ids_.size());
  if (nv == 0) throw std::invalid_argument("MetricGraph: no vertices");
  if (static_cast<int>(params.size()) != nv) throw std::invalid_argument("MetricGraph: params per vertex required");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.from < 0 || e.from >= nv) throw std::invalid_argument("MetricGraph: bad edge origin");
    if (e.to == e.from) throw std::invalid_argument("MetricGraph: loops are not allowed");
    if (e.to == kNoVertex) {
      if (!std::isinf(e.length)) throw std::invalid_argument("MetricGraph: unbounded edge needs infinite length");
    } else {
      if (e.to < 0 || e.to >= nv) throw std::invalid_argument("MetricGraph: bad edge end");
      if (!(e.length > 0.0) || std::isinf(e.length))
        throw std::invalid_argument("MetricGraph: bounded edge needs finite positive length");
    }
    for (std::size_t j = 0; j < i; ++j)
      if (edges_[j].id == e.id) throw std::invalid_argument("MetricGraph: duplicate edge id");
  }
  incident_.resize(nv);
  for (int v = 0; v < nv; ++v) {
    std::vector<double> ps;
    for (auto [ei, p] : params[v]) {
      if (ei < 0 || ei >= static_cast<int>(edges_.size())) throw std::invalid_argument("MetricGraph: bad param edge");
      const Edge& e = edges_[ei];
      if (e.from != v && e.to != v) throw std::invalid_argument("MetricGraph: param edge not incident to vertex");
      incident_[v].push_back({ei, e.from == v, p});
      ps.push_back(p);
    }
    int degree = 0;
    for (const Edge& e : edges_) degree += (e.from == v) + (e.to == v);
    if (degree != static_cast<int>(ps.size())) throw std::invalid_argument("MetricGraph: params must cover every incident edge");
    if (degree == 0) throw std::invalid_argument("MetricGraph: isolated vertex");
    check_probs(ps, "MetricGraph");
  }
  // all-pairs vertex distances; also serves as the connectivity check
  dist_.assign(nv, std::vector<double>(nv, kInf));
  for (int v = 0; v < nv; ++v) dist_[v][v] = 0.0;
  for (const Edge& e : edges_)
    if (e.to != kNoVertex) {
      dist_[e.from][e.to] = std::min(dist_[e.from][e.to], e.length);
      dist_[e.to][e.from] = dist_[e.from][e.to];
    }
  for (int k = 0; k < nv; ++k)
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j) dist_[i][j] = std::min(dist_[i][j], dist_[i][k] + dist_[k][j]);
  for (int v = 0; v < nv; ++v)
    if (std::isinf(dist_[0][v])) throw std::invalid_argument("MetricGraph: graph is disconnected");
}

int MetricGraph::vertex_index(int id) const {
  auto it = std::find(vertex_ids_.begin(), vertex_ids_.end(), id);
  if (it == vertex_ids_.end()) throw std::out_of_range("MetricGraph: unknown vertex id");
  return static_cast<int>(it - vertex_ids_.begin());
}

int MetricGraph::edge_index(int id) const {
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (edges_[i].id == id) return static_cast<int>(i);
  throw std::out_of_range("MetricGraph: unknown edge id");
}

GraphPoint MetricGraph::point(int edge, double coord) const {
  if (edge < 0 || edge >= static_cast<int>(edges_.size())) throw std::out_of_range("MetricGraph::point: bad edge");
  const Edge& e = edges_[edge];
  if (coord < 0.0 || coord > e.length) throw std::invalid_argument("MetricGraph::point: coordinate out of range");
  if (coord == 0.0) return GraphPoint::at_vertex(e.from);
  if (coord == e.length) return GraphPoint::at_vertex(e.to);
  return {edge, coord, kNoVertex};
}

MetricGraph star_as_metric(const StarGraph& g) {
  std::vector<Edge> edges;
  std::vector<std::pair<int, double>> ps;
  for (int i = 0; i < g.n_rays; ++i) {
    edges.push_back({i, 0, kNoVertex, kInf});
    ps.push_back({i, g.probs[i]});
  }
  return MetricGraph({0}, std::move(edges), {std::move(ps)});
}

namespace {

nlohmann::json num_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double read_len(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "inf") throw std::invalid_argument("graph json: bad length");
    return kInf;
  }
  return j.get<double>();
}

}  // namespace

MetricGraph metric_graph_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<int> ids = j.at("vertices").get<std::vector<int>>();
  auto vidx = [&](int id) {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw std::invalid_argument("graph json: unknown vertex");
    return static_cast<int>(it - ids.begin());
  };
  std::vector<Edge> edges;
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.id = je.at("id").get<int>();
    e.from = vidx(je.at("from").get<int>());
    const auto& to = je.at("to");
    e.to = to.is_string() ? kNoVertex : vidx(to.get<int>());
    if (to.is_string() && to.get<std::string>() != "inf") throw std::invalid_argument("graph json: bad 'to'");
    e.length = read_len(je.at("length"));
    edges.push_back(e);
  }
  auto eidx = [&](int id) {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].id == id) return static_cast<int>(i);
    throw std::invalid_argument("graph json: unknown edge");
  };
  std::vector<std::vector<std::pair<int, double>>> params(ids.size());
  for (const auto& [vk, m] : j.at("params").items()) {
    const int v = vidx(std::stoi(vk));
    for (const auto& [ek, p] : m.items()) params[v].push_back({eidx(std::stoi(ek)), p.get<double>()});
  }
  return MetricGraph(std::move(ids), std::move(edges), std::move(params));
}

std::string metric_graph_to_json(const MetricGraph& g) {
  nlohmann::json j;
  j["vertices"] = g.vertex_ids();
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : g.edges()) {
    nlohmann::json je;
    je["id"] = e.id;
    je["from"] = g.vertex_ids()[e.from];
    je["to"] = e.to == kNoVertex ? nlohmann::json("inf") : nlohmann::json(g.vertex_ids()[e.to]);
    je["length"] = num_or_inf(e.length);
    j["edges"].push_back(je);
  }
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t v = 0; v < g.n_vertices(); ++v) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& ie : g.incident(static_cast<int>(v))) m[std::to_string(g.edges()[ie.edge].id)] = ie.p;
    params[std::to_string(g.vertex_ids()[v])] = m;
  }
  j["params"] = params;
  return j.dump(2);
}

double distance(const StarGraph&, const GraphPoint& x, const GraphPoint& y) {
  if (x == y) return 0.0;
  if (!x.is_vertex() && !y.is_vertex() && x.edge == y.edge) return std::abs(x.coord - y.coord);
  return radius(x) + radius(y);
}

double distance(const MetricGraph& g, const GraphPoint& x, const GraphPoint& y) {
  if (x == y) return 0.0;
  // (vertex, offset) pairs through which a point can leave its edge
  auto exits = [&](const GraphPoint& p) {
    std::vector<std::pair<int, double>> out;
    if (p.is_vertex()) {
      out.push_back({p.vertex, 0.0});
    } else {
      const Edge& e = g.edges()[p.edge];
      out.push_back({e.from, p.coord});
      if (e.to != kNoVertex) out.push_back({e.to, e.length - p.coord});
    }
    return out;
  };
  double best = kInf;
  if (!x.is_vertex() && !y.is_vertex() && x.edge == y.edge) best = std::abs(x.coord - y.coord);
  for (auto [a, da] : exits(x))
    for (auto [b, db] : exits(y)) best = std::min(best, da + g.vertex_distance(a, b) + db);
  return best;
}

DomainFunction::DomainFunction(std::shared_ptr<const MetricGraph> g, std::vector<EdgeFunction> parts)
    : g_(std::move(g)), parts_(std::move(parts)) {
  if (parts_.size() != g_->edges().size()) throw std::invalid_argument("DomainFunction: one part per edge required");
  for (std::size_t v = 0; v < g_->n_vertices(); ++v) {
    const auto& inc = g_->incident(static_cast<int>(v));
    double ref = 0.0;
    bool first = true;
    for (const auto& ie : inc) {
      const double val = ie.out ? parts_[ie.edge].h(0.0) : parts_[ie.edge].h(g_->edges()[ie.edge].length);
      if (first) {
        ref = val;
        first = false;
      } else if (std::abs(val - ref) > kContinuityTol) {
        throw std::invalid_argument("DomainFunction: discontinuous at a vertex");
      }
    }
  }
}

double DomainFunction::value(const GraphPoint& x) const {
  if (!x.is_vertex()) return parts_[x.edge].h(x.coord);
  const auto& ie = g_->incident(x.vertex).front();
  return ie.out ? parts_[ie.edge].h(0.0) : parts_[ie.edge].h(g_->edges()[ie.edge].length);
}

double DomainFunction::d1(const GraphPoint& x) const {
  if (!x.is_vertex()) return parts_[x.edge].dh(x.coord);
  return skew_derivative(*this, x.vertex);
}

double DomainFunction::d2(const GraphPoint& x) const {
  if (!x.is_vertex()) return parts_[x.edge].d2h(x.coord);
  double s = 0.0;
  for (const auto& ie : g_->incident(x.vertex))
    s += ie.p * (ie.out ? parts_[ie.edge].d2h(0.0) : parts_[ie.edge].d2h(g_->edges()[ie.edge].length));
  return s;
}

double skew_derivative(const DomainFunction& f, int v) {
  double s = 0.0;
  for (const auto& ie : f.g_->incident(v)) {
    if (ie.out)
      s += ie.p * f.parts_[ie.edge].dh(0.0);
    else
      s -= ie.p * f.parts_[ie.edge].dh(f.g_->edges()[ie.edge].length);
  }
  return s;
}

bool in_domain(const DomainFunction& f, double tol) {
  for (std::size_t v = 0; v < f.graph().n_vertices(); ++v)
    if (std::abs(skew_derivative(f, static_cast<int>(v))) > tol) return false;
  return true;
}

DomainFunction star_function(const StarGraph& g, std::vector<EdgeFunction> parts) {
  return DomainFunction(std::make_shared<const MetricGraph>(star_as_metric(g)), std::move(parts));
}

DomainFunction radial_function(const StarGraph& g, EdgeFunction h) {
  return star_function(g, std::vector<EdgeFunction>(g.n_rays, h));
}

CanonicalPair canonical_test_functions(const StarGraph& g, int i) {
  if (i < 0 || i >= g.n_rays) throw std::out_of_range("canonical_test_functions: bad ray");
  const double p = g.probs[i], q = 1.0 - p;
  auto mg = std::make_shared<const MetricGraph>(star_as_metric(g));
  std::vector<EdgeFunction> f, sq;
  for (int j = 0; j < g.n_rays; ++j) {
    const double c = j == i ? q : -p;
    f.push_back({[c](double r) { return c * r; }, [c](double) { return c; }, [](double) { return 0.0; }});
    sq.push_back({[c](double r) { return c * c * r * r; }, [c](double r) { return 2.0 * c * c * r; },
                  [c](double) { return 2.0 * c * c; }});
  }
  return {DomainFunction(mg, std::move(f)), DomainFunction(mg, std::move(sq))};
}

}  // namespace walshflow
