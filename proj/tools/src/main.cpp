// Experiment runner: one experiment per invocation, JSON report to --output or stdout.
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "walshflow/errors.hpp"
#include "walshflow_tools/experiments.hpp"

namespace wx = walshflow::experiments;

namespace {

enum Exit : int { kPass = 0, kChecksFailed = 1, kInvalidConfig = 2, kUnknownExperiment = 3, kRuntime = 4 };

std::uint64_t default_seed() {
  if (const char* s = std::getenv("WALSHFLOW_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
      std::cerr << "ignoring malformed WALSHFLOW_SEED\n";
    }
  }
  return 1;
}

void common(CLI::App* sub, wx::Config& c) {
  sub->add_option("--seed", c.seed, "master seed (default: $WALSHFLOW_SEED or 1)");
  sub->add_option("--threads", c.threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  sub->add_option("--paths", c.paths, "replicates");
  sub->add_option("--dt", c.dt, "time step (relative for legs and n-point motions)");
  sub->add_option("--output,-o", c.output, "report path (stdout when empty)");
  sub->add_option("--csv", c.csv, "dump one sample path as CSV");
}

void star(CLI::App* sub, wx::Config& c) {
  sub->add_option("--probs", c.probs, "ray probabilities, comma separated")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  if (argc >= 2 && argv[1][0] != '-' && !wx::is_experiment(argv[1])) {
    std::cerr << "unknown experiment '" << argv[1] << "'; expected one of:";
    for (const auto& n : wx::experiment_names()) std::cerr << ' ' << n;
    std::cerr << '\n';
    return kUnknownExperiment;
  }

  CLI::App app{"walshflow experiment runner"};
  app.require_subcommand(1);
  wx::Config c;
  c.seed = default_seed();
  std::string config_file;
  app.add_option("--config", config_file, "read the whole config from a JSON file (as echoed in a report)");

  auto* leg = app.add_subcommand("orbm-leg", "hitting law of one obliquely reflected leg");
  common(leg, c);
  leg->add_option("--theta", c.theta, "reflection angle in radians");
  leg->add_option("--x", c.x, "starting distance from the corner");
  leg->add_flag("!--no-refine", c.refine, "plain grid scheme without bridge corrections");

  auto* quad = app.add_subcommand("quadrant", "quadrant process and boundary local time");
  common(quad, c);
  quad->add_option("--theta1", c.theta1);
  quad->add_option("--theta2", c.theta2);
  quad->add_flag("--random-angles", c.random_angles, "draw each angle uniformly in [angle-lo, angle-hi]");
  quad->add_option("--angle-lo", c.angle_lo);
  quad->add_option("--angle-hi", c.angle_hi);
  quad->add_option("--x", c.x);
  quad->add_option("--eps", c.eps, "eps_stop sweep, comma separated")->delimiter(',');
  quad->add_option("--max-legs", c.max_legs);

  auto* wk = app.add_subcommand("walsh-kernel", "exact sampler against the semigroup");
  common(wk, c);
  star(wk, c);
  wk->add_option("--times", c.times)->delimiter(',');
  wk->add_option("--x", c.x, "radius of the second start point on ray 0");
  wk->add_option("--T", c.T, "horizon of the CSV path");

  auto* isde = app.add_subcommand("isde", "interface SDE: noise laws and the Freidlin-Sheu residual");
  common(isde, c);
  star(isde, c);
  isde->add_option("--T", c.T);
  isde->add_option("--x0-edge", c.x0_edge, "start ray (-1: origin)");
  isde->add_option("--x", c.x, "start radius");
  isde->add_option("--refinements", c.refinements, "number of dt/4 refinements");
  isde->add_flag("!--no-refine", c.refine, "grid Levy reflection for the coupled paths");

  auto* tp = app.add_subcommand("two-point", "two-point motion against the quadrant legs");
  common(tp, c);
  star(tp, c);
  tp->add_option("--x", c.x);
  tp->add_option("--events", c.events, "pivot transfers per chain run");
  tp->add_option("--transition-paths", c.transition_paths);
  tp->add_option("--tmax", c.tmax);
  tp->add_option("--doublings", c.doublings);

  auto* co = app.add_subcommand("coalesce", "coalescence time of two points");
  common(co, c);
  star(co, c);
  co->add_option("--x", c.x);
  co->add_option("--tmax", c.tmax, "first horizon");
  co->add_option("--doublings", c.doublings, "horizon doublings");
  co->add_option("--tol-multiples", c.tol_multiples, "tol_c / sqrt(dt), the first is the base")->delimiter(',');
  co->add_option("--refinements", c.refinements);

  auto* fk = app.add_subcommand("filtered-kernel", "replicas sharing the ray noises");
  common(fk, c);
  star(fk, c);
  fk->add_option("--T", c.T);
  fk->add_option("--replicas,-m", c.replicas);
  fk->add_option("--x0-edge", c.x0_edge);
  fk->add_option("--x", c.x);
  fk->add_option("--refinements", c.refinements);

  auto* mi = app.add_subcommand("metric-isde", "vertex-local simulation on a metric graph");
  common(mi, c);
  star(mi, c);
  mi->add_option("--graph", c.graph_file, "graph JSON; a star from --probs when absent");
  mi->add_option("--T", c.T);
  mi->add_option("--x0-edge", c.x0_edge);
  mi->add_option("--x0-vertex", c.x0_vertex);
  mi->add_option("--x", c.x, "start coordinate on --x0-edge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidConfig;
  }
  c.experiment = app.get_subcommands().front()->get_name();

  try {
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      if (!f) throw wx::InvalidConfig("cannot read " + config_file);
      c = wx::config_from_json(wx::json::parse(f));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const wx::Report r = wx::run(c);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string body = wx::report_json(c, r, wall).dump(2) + "\n";
    if (c.output.empty()) {
      std::cout << body;
    } else {
      std::ofstream out(c.output, std::ios::binary);
      if (!out) throw wx::InvalidConfig("cannot write " + c.output);
      out << body;
    }
    return r.all_pass() ? kPass : kChecksFailed;
  } catch (const wx::UnknownExperiment& e) {
    std::cerr << e.what() << '\n';
    return kUnknownExperiment;
  } catch (const wx::InvalidConfig& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const wx::json::exception& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return kRuntime;
  }
}
