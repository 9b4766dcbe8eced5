#include <doctest.h>

#include <cmath>
#include <string>

#include "walshflow_tools/experiments.hpp"

namespace wx = walshflow::experiments;
using wx::json;

namespace {

wx::Config small(const std::string& name) {
  wx::Config c;
  c.experiment = name;
  c.paths = 200;
  c.dt = 1e-2;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("config survives a json round trip") {
  wx::Config c = small("coalesce");
  c.probs = {0.25, 0.25, 0.5};
  c.tol_multiples = {3.0, 1.5};
  c.random_angles = true;
  c.threads = 3;
  CHECK(wx::config_from_json(wx::config_to_json(c)) == c);
  CHECK(wx::config_from_json(json::parse(wx::config_to_json(c).dump())) == c);
}

TEST_CASE("unknown keys and bad values are config errors") {
  json j = wx::config_to_json(small("orbm-leg"));
  j["no_such_key"] = 1;
  CHECK_THROWS_AS(wx::config_from_json(j), wx::InvalidConfig);
  j = wx::config_to_json(small("orbm-leg"));
  j["dt"] = "fast";
  CHECK_THROWS_AS(wx::config_from_json(j), wx::InvalidConfig);

  wx::Config c = small("orbm-leg");
  c.theta = 2.0;
  CHECK_THROWS_AS(wx::run(c), wx::InvalidConfig);
  c = small("quadrant");
  c.eps = {2.0};
  CHECK_THROWS_AS(wx::run(c), wx::InvalidConfig);
  c = small("walsh-kernel");
  c.probs = {0.5, 0.6};
  CHECK_THROWS_AS(wx::run(c), wx::InvalidConfig);
  c = small("filtered-kernel");
  c.replicas = 1;
  CHECK_THROWS_AS(wx::run(c), wx::InvalidConfig);
  c = small("nonsense");
  CHECK_THROWS_AS(wx::run(c), wx::UnknownExperiment);
  CHECK_FALSE(wx::is_experiment("nonsense"));
  CHECK(wx::experiment_names().size() == 8);
}

TEST_CASE("report layout") {
  const wx::Config c = small("walsh-kernel");
  const wx::Report r = wx::run(c);
  const json j = wx::report_json(c, r, 0.5);
  for (const char* k : {"schema", "experiment", "estimates", "ks_results", "bound_checks", "config", "seed", "pass", "wall_time"})
    CHECK(j.contains(k));
  CHECK(j["pass"].get<bool>() == r.all_pass());
  CHECK(wx::config_from_json(j["config"]) == c);
  for (const auto& [k, v] : j["bound_checks"].items()) CHECK(v.contains("pass"));
}

TEST_CASE("thread count leaves every number unchanged") {
  for (const std::string& name : wx::experiment_names()) {
    CAPTURE(name);
    wx::Config c = small(name);
    if (name == "coalesce" || name == "two-point") {
      c.paths = 40;
      c.tmax = 5;
      c.doublings = 1;
      c.transition_paths = 20;
    }
    if (name == "filtered-kernel") c.paths = 40;
    const wx::Report a = wx::run(c);
    c.threads = 3;
    const wx::Report b = wx::run(c);
    CHECK(a.estimates.dump() == b.estimates.dump());
    CHECK(a.ks_results.dump() == b.ks_results.dump());
    CHECK(a.bound_checks.dump() == b.bound_checks.dump());
  }
}

TEST_CASE("censored first legs count against the ks bound") {
  wx::Config c = small("two-point");
  c.paths = 100;
  c.tmax = 1e-3;  // far too short for most legs
  c.doublings = 0;
  c.transition_paths = 10;
  const wx::Report r = wx::run(c);
  const json& chk = r.bound_checks.at("first_leg_ks_below_0.02");
  CHECK_FALSE(chk["pass"].get<bool>());
  CHECK(chk["censored"].get<double>() > 0.5);
  CHECK(chk["bound"].get<double>() >= chk["censored"].get<double>());
}
