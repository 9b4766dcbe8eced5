#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace walshflow::experiments {

using json = nlohmann::ordered_json;

struct UnknownExperiment : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Every field is echoed into the report and parses back via config_from_json.
struct Config {
  std::string experiment;
  std::vector<double> probs{0.5, 0.3, 0.2};
  std::string graph_file;
  double theta = 0.7853981633974483;
  double theta1 = 1.0471975511965976;
  double theta2 = 1.0471975511965976;
  bool random_angles = false;
  double angle_lo = 0.5235987755982988;
  double angle_hi = 1.0471975511965976;
  double x = 1.0;
  int x0_edge = -1;  // metric-isde start: edge index, or -1 for a vertex
  int x0_vertex = 0;
  double dt = 1e-3;
  double T = 1.0;
  std::vector<double> eps{1e-2, 1e-3, 1e-4};
  std::vector<double> times{0.1, 1.0};
  std::uint64_t paths = 10000;
  std::uint64_t transition_paths = 0;  // two-point chain runs; 0 means paths / 5
  std::uint64_t replicas = 2;
  std::uint64_t max_legs = 100000;
  std::uint64_t events = 8;
  double tmax = 100.0;
  int doublings = 20;
  std::vector<double> tol_multiples{2.0, 1.0, 4.0};  // first entry is the base tolerance
  int refinements = 1;                               // dt -> dt/4 repetitions
  bool refine = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string output;
  std::string csv;

  friend bool operator==(const Config&, const Config&) = default;
};

const std::vector<std::string>& experiment_names();
bool is_experiment(const std::string& name);

json config_to_json(const Config& c);
Config config_from_json(const json& j);

// Experiment-specific checks of parameters; throws InvalidConfig.
void validate(const Config& c);

struct Report {
  json estimates = json::object();
  json ks_results = json::object();
  json bound_checks = json::object();

  void check(const std::string& name, bool pass, json detail = json::object());
  bool all_pass() const;
};

// Runs one experiment. Throws UnknownExperiment or InvalidConfig.
Report run(const Config& c);

// {schema, experiment, estimates, ks_results, bound_checks, config, seed, pass, wall_time}
json report_json(const Config& c, const Report& r, double wall_time);

// Deterministic replicate loop: f(i) for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f);

}  // namespace walshflow::experiments

#include "walshflow_tools/parallel.ipp"
