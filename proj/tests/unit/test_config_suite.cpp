#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "config.hpp"
#include "suite.hpp"

using namespace kitnet;
using testutil::code;
using testutil::error_code_of;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig small_suite() {
  RunConfig c = RunConfig::from_string(R"({
    "seed": 11,
    "estimator": {"kind": "noisy_oracle", "sigma_deg": 2.0},
    "suite": {"objects": ["lbracket_equal", "tee", "box_brick"], "init_angles_deg": [30, 60],
              "trials": 10, "fit_samples": 1000}
  })");
  return c;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  RunConfig c;
  CHECK(c.controller().eta == 0.8);
  CHECK(c.scene().camera.width == 128);
  c.set("controller.eta", "0.5");
  c.set("estimator.kind", "perfect");  // bare string
  c.set("suite.init_angles_deg", "[15, 45]");
  CHECK(c.controller().eta == 0.5);
  CHECK(c.estimator().kind == EstimatorKind::kPerfect);
  CHECK(c.suite().init_angles_deg == std::vector<double>{15, 45});
  // integers are accepted where the default is a float
  c.set("controller.delta_deg", "3");
  CHECK(c.controller().delta_deg == 3.0);

  CHECK(error_code_of([&] { c.set("controller.gain", "1"); }) == code(ErrorCode::kConfig));
  CHECK(error_code_of([&] { c.set("controller.max_iters", "\"many\""); }) == code(ErrorCode::kConfig));
  CHECK(error_code_of([&] { c.set("controller", "1"); }) == code(ErrorCode::kConfig));
  CHECK(error_code_of([] { RunConfig::from_string(R"({"camera": {"fov": 1}})"); }) == code(ErrorCode::kConfig));
  CHECK(error_code_of([] { RunConfig::from_string(R"({"workers": "all"})"); }) == code(ErrorCode::kConfig));
  CHECK(error_code_of([] { RunConfig::from_string("{ nope"); }) == code(ErrorCode::kConfig));
  CHECK(error_code_of([] { RunConfig::from_file("/nonexistent/kitnet.json"); }) == code(ErrorCode::kNotFound));

  RunConfig bad;
  bad.set("controller.eta", "2.0");
  CHECK(error_code_of([&] { bad.validate(); }) == code(ErrorCode::kConfig));
  RunConfig kind;
  kind.set("suite.cavity_kinds", R"(["prismatic", "tray"])");
  CHECK(error_code_of([&] { kind.validate(); }) == code(ErrorCode::kConfig));

  const auto dir = testutil::scratch_dir("cfg");
  {
    std::ofstream(dir / "c.json") << R"({"seed": 5, "controller": {"max_iters": 3}})";
  }
  const RunConfig f = RunConfig::from_file(dir / "c.json");
  CHECK(f.seed() == 5);
  CHECK(f.controller().max_iters == 3);
  CHECK(f.resolved()["controller"]["eta"] == 0.8);
}

TEST_CASE("seed falls back to the environment") {
  ::unsetenv("KITNET_SEED");
  CHECK(RunConfig().seed() == 0);
  ::setenv("KITNET_SEED", "1234", 1);
  CHECK(RunConfig().seed() == 1234);
  CHECK(RunConfig().resolved()["seed"] == 1234);
  CHECK(RunConfig::from_string(R"({"seed": 7})").seed() == 7);
  ::setenv("KITNET_SEED", "12x", 1);
  CHECK(error_code_of([] { RunConfig().seed(); }) == code(ErrorCode::kConfig));
  ::unsetenv("KITNET_SEED");
}

TEST_CASE("perturbation modes") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    CHECK(rad2deg(sample_perturbation(PerturbationMode::kRandomAxis, 45, rng).angle()) ==
          doctest::Approx(45).epsilon(1e-9));
    const UnitQuaternion o = sample_perturbation(PerturbationMode::kOutOfPlane, 45, rng);
    CHECK(rad2deg(o.angle()) == doctest::Approx(45).epsilon(1e-9));
    CHECK(std::abs(o.z()) < 1e-12);
    CHECK(rad2deg(sample_perturbation(PerturbationMode::kBounded, 45, rng).angle()) < 45.0);
  }
  CHECK(error_code_of([] { parse_perturbation_mode("sideways"); }) == code(ErrorCode::kConfig));
}

TEST_CASE("suite grid, summary and determinism") {
  const RunConfig c = small_suite();
  const auto trials = run_suite(c);
  REQUIRE(trials.size() == 60);
  // grid order: object, kind, angle, method, trial
  CHECK(trials[0].cell.object == "lbracket_equal");
  CHECK(trials[10].cell.init_angle_deg == 60.0);
  CHECK(trials[20].cell.object == "tee");
  CHECK(trials[59].trial == 9);
  for (const SuiteTrial& t : trials) {
    CHECK(t.report.error.empty());
    CHECK(t.report.percent_fit.has_value());
    CHECK(t.report.initial_angle_deg == doctest::Approx(t.cell.init_angle_deg).epsilon(1e-9));
  }

  const auto cells = summarize(trials);
  REQUIRE(cells.size() == 6);
  for (const CellSummary& s : cells) {
    CHECK(s.trials == 10);
    CHECK(s.completed == 10);
    CHECK(s.successes <= 10);
    CHECK(s.mean_fit > 0.0);
    CHECK(s.mean_fit <= 1.0);
  }

  const auto a = testutil::scratch_dir("suite_a");
  const nlohmann::ordered_json summary = write_suite_outputs(trials, c, a);
  CHECK(summary.contains("cells"));
  std::ifstream csv(a / "summary.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "object,cavity_kind,init_angle_deg,method,trials,successes,mean_fit,median_fit,mean_steps");
  std::ifstream res(a / "results.jsonl");
  int lines = 0;
  for (std::string line; std::getline(res, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    CHECK_FALSE(j.contains("wall_time_s"));
  }
  CHECK(lines == 60);
  CHECK(std::filesystem::exists(a / "timings.jsonl"));
  CHECK(std::filesystem::exists(a / "summary.json"));

  // rerun with a different worker count: same bytes
  RunConfig c2 = small_suite();
  c2.set("workers", "1");
  const auto b = testutil::scratch_dir("suite_b");
  write_suite_outputs(run_suite(c2), c2, b);
  CHECK(slurp(a / "results.jsonl") == slurp(b / "results.jsonl"));
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));

  // a different seed changes the situations
  RunConfig c3 = small_suite();
  c3.set("seed", "12");
  c3.set("suite.objects", R"(["tee"])");
  c3.set("suite.init_angles_deg", "[30]");
  c3.set("suite.trials", "1");
  const auto other = run_suite(c3);
  CHECK(other[0].report.steps.front().estimate.wxyz() != trials[20].report.steps.front().estimate.wxyz());
}

TEST_CASE("methods share their situations") {
  RunConfig c = RunConfig::from_string(R"({
    "seed": 3,
    "suite": {"objects": ["handle_u"], "init_angles_deg": [45], "trials": 2,
              "methods": ["kitnet", "baseline_random"]}
  })");
  const auto objects = load_objects("procedural", {"handle_u"}, 1.0);
  REQUIRE(objects.size() == 1);
  SuiteCell k{"handle_u", CavityKind::kPrismatic, 45.0, Method::kKitNet};
  SuiteCell r = k;
  r.method = Method::kBaselineRandom;
  const KittingTrial tk = make_trial(c, objects[0], k, 1), tr = make_trial(c, objects[0], r, 1);
  CHECK(tk.goal_rotation.wxyz() == tr.goal_rotation.wxyz());
  CHECK(tk.initial_perturbation.wxyz() == tr.initial_perturbation.wxyz());
  CHECK(make_trial(c, objects[0], k, 0).goal_rotation.wxyz() != tk.goal_rotation.wxyz());
  CHECK(error_code_of([] { load_objects("procedural", {"teapot"}, 1.0); }) == code(ErrorCode::kConfig));
  CHECK(error_code_of([] { load_objects("/nonexistent/corpus", {}, 1.0); }) == code(ErrorCode::kNotFound));
}

TEST_CASE("external estimator without a server") {
  RunConfig c = RunConfig::from_string(R"({
    "seed": 1,
    "estimator": {"kind": "external", "endpoint": "tcp://127.0.0.1:1", "timeout_s": 0.5},
    "suite": {"objects": ["tee"], "init_angles_deg": [30], "trials": 2, "fit_samples": 500}
  })");
  const auto trials = run_suite(c);
  REQUIRE(trials.size() == 2);
  for (const SuiteTrial& t : trials) {
    CHECK(t.report.terminated_by == Termination::kError);
    CHECK_FALSE(t.report.error.empty());
  }
  const auto cells = summarize(trials);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].completed == 0);
  CHECK(std::isnan(cells[0].mean_fit));
}
