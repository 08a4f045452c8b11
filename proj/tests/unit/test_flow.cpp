#include <cmath>
#include <sstream>

#include "doctest.h"
#include "geoflow/errors.hpp"
#include "geoflow/flow.hpp"

using namespace geoflow;

namespace {

FlowConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

double sup_deviation(const ConformalField& f) { return std::max(std::abs(f.k_min() + 1.0), std::abs(f.k_max() + 1.0)); }

}  // namespace

TEST_CASE("config parsing") {
  const FlowConfig c = parse(
      "# comment\n"
      "bump_centers = 0.1, 0.2; -0.3, 0\n"
      "bump_amplitudes = 0.05, 0.02  # trailing\n"
      "\n"
      "seed = 42\n"
      "n_samples = 10\n");
  REQUIRE(c.bump_centers.size() == 2);
  CHECK(c.bump_centers[1].value() == Complex(-0.3, 0.0));
  CHECK(c.bump_amplitudes[0] == 0.05);
  CHECK(c.seed == 42);
  CHECK(c.n_samples == 10);
  CHECK(c.bump_width == 1.5);

  const FlowConfig empty = parse("bump_centers =\nbump_amplitudes =\n");
  CHECK(empty.bump_centers.empty());
}

TEST_CASE("config errors name the problem") {
  CHECK(config_error("colour = blue\n").find("unknown key 'colour'") != std::string::npos);
  CHECK(config_error("seed = 1\nseed\n").find("test.cfg:2") != std::string::npos);
  CHECK(!config_error("dt_flow = fast\n").empty());
  CHECK(!config_error("dt_flow = -1\n").empty());
  CHECK(!config_error("bump_centers = 0, 0\nbump_amplitudes = 0.1, 0.2\n").empty());
  try {
    load_config("/nonexistent/run.cfg");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/run.cfg") != std::string::npos);
  }
}

TEST_CASE("the hyperbolic metric is stationary") {
  const FlowConfig c = parse("bump_centers =\nbump_amplitudes =\n");
  const ConformalField f = initial_field(c);
  RicciStepper s(config_lattice(c), f.values());
  for (int i = 0; i < 5; ++i) s.step(c.dt_flow);
  CHECK(s.last_update_norm() < 1e-12);
  for (int idx : config_lattice(c)->interior_nodes()) REQUIRE(std::abs(s.values()[idx]) < 1e-12);
}

TEST_CASE("steps above the stability bound are refused") {
  const FlowConfig c;
  const ConformalField f = initial_field(c);
  const double bound = cfl_bound(f.lattice(), f.values());
  CHECK(bound > c.dt_flow);
  RicciStepper s(config_lattice(c), f.values());
  CHECK_THROWS_AS(s.step(2.0 * bound), CflViolation);
}

TEST_CASE("flow keeps the area and pulls the curvature towards -1") {
  const FlowConfig c;
  const ConformalField f0 = initial_field(c);
  RicciStepper s(config_lattice(c), f0.values());
  double last = sup_deviation(f0);
  for (int block = 0; block < 5; ++block) {
    for (int i = 0; i < 20; ++i) s.step(c.dt_flow);
    const ConformalField f = s.field();
    CHECK(f.area_defect() < 1e-12);
    CHECK(std::abs(f.kbar() + 1.0) < 1e-4);
    const double dev = sup_deviation(f);
    CHECK(dev < last);
    last = dev;
  }
  CHECK(ricci_step(f0, c.dt_flow).values() != f0.values());
}

TEST_CASE("a short flow run is reproducible") {
  FlowConfig c;
  c.n_samples = 8;
  c.checkpoint_interval = 8e-5;
  c.total_flow_time = 8e-5;
  std::ostringstream a, b, d;
  const auto rows = run_flow(c, &a);
  run_flow(c, &b);
  CHECK(rows.size() == 2);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind(flow_csv_header(), 0) == 0);
  c.seed = 2;
  run_flow(c, &d);
  CHECK(a.str() != d.str());
}
