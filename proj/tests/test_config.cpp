#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>

#include "doctest.h"
#include "em/problem.hpp"

using namespace em;

namespace {

// Two collinear segments with §-free camera-ready numbers.
const char* kTwoSegment = R"({
  "nodes": [
    {"id": 0, "x_m": 0.0, "y_m": 0.0},
    {"id": 1, "x_m": 2.0e-5, "y_m": 0.0},
    {"id": 2, "x_m": 5.0e-5, "y_m": 0.0}
  ],
  "segments": [
    {"id": 0, "prev": 0, "next": 1, "width_m": 1.0e-7, "j_A_per_m2": 4.0e9},
    {"id": 1, "prev": 1, "next": 2, "width_m": 1.0e-7, "j_A_per_m2": -1.0e10}
  ],
  "training": {"n_c": 6, "seed": 9, "max_iters": 30, "hidden_layers": 2, "hidden_width": 8},
  "probes": {"times_s": [1.0e5, 1.0e6, 1.0e7], "fractions": [0.0, 0.5, 1.0]}
})";

std::string cross_json() {
  return R"({
  "nodes": [
    {"id": 0, "x_m": 0.0, "y_m": 0.0},
    {"id": 1, "x_m": -2.0e-5, "y_m": 0.0},
    {"id": 2, "x_m": 1.0e-5, "y_m": 0.0},
    {"id": 3, "x_m": 0.0, "y_m": -2.0e-5},
    {"id": 4, "x_m": 0.0, "y_m": 3.0e-5}
  ],
  "segments": [
    {"id": 0, "prev": 1, "next": 0, "width_m": 1.0e-7, "j_A_per_m2": 4.0e9},
    {"id": 1, "prev": 0, "next": 2, "width_m": 1.0e-7, "j_A_per_m2": 2.0e9},
    {"id": 2, "prev": 3, "next": 0, "width_m": 1.0e-7, "j_A_per_m2": 1.0e9, "orientation": "vertical"},
    {"id": 3, "prev": 0, "next": 4, "width_m": 1.0e-7, "j_A_per_m2": 7.0e9, "orientation": "vertical"}
  ]
})";
}

}  // namespace

TEST_CASE("cross config parses and summarizes") {
  const RunConfig cfg = parse_run_config(cross_json());
  CHECK(describe(cfg.tree) == "4 segments, 1 junction, 4 terminals");
  CHECK(cfg.tree.segments[0].length == doctest::Approx(2e-5));
  CHECK(cfg.material.z_eff == 10.0);      // defaults fill in
  CHECK(cfg.trial.n_gauss == 8);
  CHECK(cfg.probes.times.size() == 10);   // default probe grid
  CHECK(cfg.probes.times.front() == doctest::Approx(1e5));
  CHECK(cfg.probes.times.back() == doctest::Approx(1e8));
  CHECK(cfg.probes.fractions.size() == 11);
}

TEST_CASE("negative width is reported with its field path") {
  std::string bad = cross_json();
  const auto at = bad.find("\"width_m\": 1.0e-7");
  bad.replace(at, 17, "\"width_m\": -1e-7");
  try {
    parse_run_config(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("segments[0].width_m") != std::string::npos);
  }
}

TEST_CASE("missing node reference is a dangling-reference error") {
  std::string bad = cross_json();
  const auto at = bad.find("\"next\": 4");
  bad.replace(at, 9, "\"next\": 9");
  CHECK_THROWS_WITH_AS(parse_run_config(bad), doctest::Contains("DanglingReference"), Error);
}

TEST_CASE("malformed JSON is rejected") {
  CHECK_THROWS_WITH_AS(parse_run_config("{ not json"), doctest::Contains("ParseError"), Error);
}

TEST_CASE("config hash is stable and input-sensitive") {
  const RunConfig a = parse_run_config(cross_json());
  const RunConfig b = parse_run_config(cross_json());
  CHECK(a.config_hash == b.config_hash);
  const RunConfig c = parse_run_config(kTwoSegment);
  CHECK(a.config_hash != c.config_hash);
}

TEST_CASE("probe times beyond the horizon are rejected at parse time") {
  std::string bad(kTwoSegment);
  const auto at = bad.find("1.0e7]");
  bad.replace(at, 6, "5.0e9]");
  try {
    parse_run_config(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("probes.times_s") != std::string::npos);
  }
}

TEST_CASE("random_tree block generates the tree") {
  const char* json = R"({
    "random_tree": {"n_segments": 5, "length_min_m": 1e-5, "length_max_m": 5e-5,
                     "j_min_A_per_m2": -1e10, "j_max_A_per_m2": 1e10, "seed": 4}
  })";
  const RunConfig cfg = parse_run_config(json);
  CHECK(cfg.tree.segments.size() == 5);
  CHECK(cfg.random_tree.has_value());
}

TEST_CASE("problem scales contexts and maps times consistently") {
  Problem prob(parse_run_config(kTwoSegment));
  CHECK(!prob.dynamic_temperature());
  CHECK(prob.scaled_time(1e8) == doctest::Approx(10.0));
  CHECK(prob.contexts_scaled().segments[0].L == doctest::Approx(2.0));
  CHECK(prob.contexts_si().segments[0].L == doctest::Approx(2e-5));
}

TEST_CASE("inference at t=0 returns zero stress everywhere") {
  Problem prob(parse_run_config(kTwoSegment));
  const MlpModel model = prob.make_model(3);
  for (double f : {0.0, 0.3, 1.0}) {
    CHECK(prob.infer_at(model, 0, f, 0.0) == 0.0);
    CHECK(prob.infer_at(model, 1, f, 0.0) == 0.0);
  }
}

TEST_CASE("oracle and inference share sample keys") {
  Problem prob(parse_run_config(kTwoSegment));
  const MlpModel model = prob.make_model(3);
  const StressField trial = prob.infer(model);
  const StressField oracle = prob.oracle().field;
  REQUIRE(trial.samples.size() == oracle.samples.size());
  // relative_error only accepts exactly matching keys.
  CHECK_NOTHROW(relative_error(trial, oracle));
}

TEST_CASE("dynamic temperature switches the problem into effective time") {
  std::string dyn(kTwoSegment);
  dyn.insert(dyn.rfind('}'), R"(,
    "temperature": {"kind": "sinusoidal", "T0_K": 350.0, "amplitude_K": 30.0,
                     "angular_rate_rad_per_s": 1.2566370614359173e-7})");
  Problem prob(parse_run_config(dyn));
  CHECK(prob.dynamic_temperature());
  // Hot half-cycles accelerate: remapped time runs ahead of wall time.
  CHECK(prob.scaled_time(1e8) > 10.0);
}
