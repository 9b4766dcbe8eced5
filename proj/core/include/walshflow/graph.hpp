#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace walshflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr int kNoVertex = -1;  // the "infinity" endpoint of an unbounded edge

// A point either sits at a vertex (edge == -1) or in the open interior of an edge.
struct GraphPoint {
  int edge = -1;
  double coord = 0.0;
  int vertex = 0;

  static GraphPoint at_vertex(int v) { return {-1, 0.0, v}; }
  bool is_vertex() const { return edge < 0; }
  friend bool operator==(const GraphPoint& a, const GraphPoint& b) {
    if (a.is_vertex() || b.is_vertex()) return a.is_vertex() && b.is_vertex() && a.vertex == b.vertex;
    return a.edge == b.edge && a.coord == b.coord;
  }
};

struct StarGraph {
  int n_rays = 0;
  std::vector<double> probs;

  // e_i(r); r == 0 is the origin
  GraphPoint point(int ray, double r) const;
  static GraphPoint origin() { return GraphPoint::at_vertex(0); }
};

StarGraph make_star(int n, std::vector<double> probs);

struct Edge {
  int id = 0;
  int from = 0;            // g_i, coordinate 0
  int to = kNoVertex;      // d_i, coordinate L_i; kNoVertex for an unbounded edge
  double length = kInf;
};

struct IncidentEdge {
  int edge;   // index into MetricGraph::edges()
  bool out;   // true when the edge starts at the vertex (coordinate 0 there)
  double p;
};

class MetricGraph {
 public:
  // params[v] lists (edge index, p) for each edge incident to vertex v.
  MetricGraph(std::vector<int> vertex_ids, std::vector<Edge> edges,
              std::vector<std::vector<std::pair<int, double>>> params);

  const std::vector<int>& vertex_ids() const { return vertex_ids_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t n_vertices() const { return vertex_ids_.size(); }
  const std::vector<IncidentEdge>& incident(int v) const { return incident_[v]; }
  double vertex_distance(int a, int b) const { return dist_[a][b]; }

  int vertex_index(int id) const;
  int edge_index(int id) const;

  // Canonical point: coordinates at an endpoint collapse to the vertex.
  GraphPoint point(int edge, double coord) const;

 private:
  std::vector<int> vertex_ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<IncidentEdge>> incident_;
  std::vector<std::vector<double>> dist_;
};

MetricGraph star_as_metric(const StarGraph& g);

MetricGraph metric_graph_from_json(const std::string& text);
std::string metric_graph_to_json(const MetricGraph& g);

double distance(const StarGraph& g, const GraphPoint& x, const GraphPoint& y);
double distance(const MetricGraph& g, const GraphPoint& x, const GraphPoint& y);

// |x| on a star graph
inline double radius(const GraphPoint& x) { return x.is_vertex() ? 0.0 : x.coord; }

struct EdgeFunction {
  std::function<double(double)> h, dh, d2h;
};

// A function on a metric graph given edge by edge, with analytic derivatives.
class DomainFunction {
 public:
  DomainFunction(std::shared_ptr<const MetricGraph> g, std::vector<EdgeFunction> parts);

  double operator()(const GraphPoint& x) const { return value(x); }
  double value(const GraphPoint& x) const;
  // derivative along the edge coordinate; the skew derivative at vertices
  double d1(const GraphPoint& x) const;
  // second derivative; at a vertex the p-weighted average of one-sided values
  double d2(const GraphPoint& x) const;
  double on_edge(int edge, double coord) const { return parts_[edge].h(coord); }
  double d1_on_edge(int edge, double coord) const { return parts_[edge].dh(coord); }
  double d2_on_edge(int edge, double coord) const { return parts_[edge].d2h(coord); }

  const MetricGraph& graph() const { return *g_; }
  std::size_t n_edges() const { return parts_.size(); }

 private:
  std::shared_ptr<const MetricGraph> g_;
  std::vector<EdgeFunction> parts_;
  friend double skew_derivative(const DomainFunction& f, int v);
};

double skew_derivative(const DomainFunction& f, int v);
bool in_domain(const DomainFunction& f, double tol = 1e-12);

struct CanonicalPair {
  DomainFunction f;
  DomainFunction g;
};

// f_i = q_i|x| on ray i and -p_i|x| elsewhere; g_i = f_i^2.
CanonicalPair canonical_test_functions(const StarGraph& g, int i);

// Same h on every ray.
DomainFunction radial_function(const StarGraph& g, EdgeFunction h);

// Ray-dependent function from a list of per-ray parts.
DomainFunction star_function(const StarGraph& g, std::vector<EdgeFunction> parts);

}  // namespace walshflow
