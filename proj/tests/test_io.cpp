#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "reusevr/experiment.hpp"
#include "reusevr/io.hpp"

namespace io = reusevr::io;
namespace experiment = reusevr::experiment;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("/tmp/reusevr_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("csv matrix loader round-trips and validates") {
  TempFile good("m.csv", "1,2,3\n4,5,6\n");
  const Eigen::MatrixXd m = io::load_csv_matrix(good.path);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(1, 2) == 6.0);

  TempFile ragged("ragged.csv", "1,2\n3\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(io::load_csv_matrix(ragged.path)),
                       doctest::Contains(":2:"), std::runtime_error);

  TempFile nonfinite("nan.csv", "1,nan\n");
  CHECK_THROWS_AS(static_cast<void>(io::load_csv_matrix(nonfinite.path)),
                  std::runtime_error);
}

TEST_CASE("glm loader ties matrix, labels and metadata together") {
  TempFile m("glm_m.csv", "1,0\n0,1\n1,1\n");
  TempFile y("glm_y.csv", "1\n-1\n1\n");
  TempFile meta("glm_meta.json",
                R"({"mu_hint": 0.5, "link": "squared", "lambda": 2.0})");
  const io::GlmInstance inst = io::load_glm(m.path, y.path, meta.path);
  CHECK(inst.mu_hint == 0.5);
  CHECK(inst.lambda == 2.0);
  CHECK(inst.problem().n() == 3);

  TempFile short_y("short_y.csv", "1\n-1\n");
  CHECK_THROWS_AS(
      static_cast<void>(io::load_glm(m.path, short_y.path, meta.path)),
      std::runtime_error);
}

TEST_CASE("dmdp loader enforces stochastic rows and reward range") {
  const std::string common_head =
      R"({"states": 2, "actions": 1, "gamma": 0.9,)";
  TempFile good("mdp_good.json", common_head +
      R"("rewards": [0.5, 0.25],
         "transitions": [
           {"s": 0, "a": 0, "probs": [[0, 0.5], [1, 0.5]]},
           {"s": 1, "a": 0, "probs": [[1, 1.0]]}]})");
  const auto m = io::load_dmdp(good.path);
  CHECK(m.pair_count() == 2);

  TempFile bad_sum("mdp_badsum.json", common_head +
      R"("rewards": [0.5, 0.25],
         "transitions": [
           {"s": 0, "a": 0, "probs": [[0, 0.5], [1, 0.49]]},
           {"s": 1, "a": 0, "probs": [[1, 1.0]]}]})");
  CHECK_THROWS_AS(static_cast<void>(io::load_dmdp(bad_sum.path)),
                  std::invalid_argument);

  TempFile bad_reward("mdp_badr.json", common_head +
      R"("rewards": [0.5, 1.5],
         "transitions": [
           {"s": 0, "a": 0, "probs": [[0, 1.0]]},
           {"s": 1, "a": 0, "probs": [[1, 1.0]]}]})");
  CHECK_THROWS_AS(static_cast<void>(io::load_dmdp(bad_reward.path)),
                  std::invalid_argument);
}

TEST_CASE("game loader reads domain and composite terms") {
  TempFile m("game_m.csv", "0.5,-0.25\n1,0.75\n");
  TempFile cfg("game_cfg.json",
               R"({"domain": "ball_simplex",
                   "phi": {"kind": "quadratic", "coef": 0.1},
                   "psi": {"kind": "entropy", "coef": 0.2},
                   "alpha": 1.5, "eps": 0.07})");
  const io::GameInstance inst = io::load_game(m.path, cfg.path);
  CHECK(inst.game.domain == reusevr::games::Domain::ball_simplex);
  CHECK(inst.alpha == 1.5);
  CHECK(inst.eps == 0.07);
  CHECK(inst.game.phi.kind == "quadratic");

  TempFile bad("game_bad.json", R"({"domain": "cube"})");
  CHECK_THROWS_AS(static_cast<void>(io::load_game(m.path, bad.path)),
                  std::runtime_error);
}

TEST_CASE("validate_problem itemizes violations without throwing") {
  TempFile m("v_m.csv", "1,0\n0,1\n");
  TempFile y("v_y.csv", "1\n-1\n");
  TempFile meta("v_meta.json",
                R"({"mu_hint": 0.5, "link": "squared", "lambda": 2.0})");
  const auto ok = io::validate_problem("fsm", {m.path, y.path, meta.path});
  CHECK(ok.ok);
  CHECK(ok.issues.empty());

  TempFile bad_meta("v_bad.json",
                    R"({"mu_hint": 0.5, "link": "squared", "lambda": 0.1})");
  const auto bad = io::validate_problem("fsm", {m.path, y.path, bad_meta.path});
  CHECK(!bad.ok);
  CHECK(!bad.issues.empty());

  const auto unknown = io::validate_problem("tensor", {m.path});
  CHECK(!unknown.ok);
}

TEST_CASE("csv writer emits the documented header and formats") {
  experiment::SweepRow row;
  row.knob = 0.5;
  row.mode = "reuse";
  row.batch = 10;
  row.sample = 20;
  row.distinct = 5;
  row.success_lcb = 0.751234567;
  row.mean_err = 1.23456789e-3;
  row.secs = 0.0;
  const std::string csv = experiment::csv_string({row});
  CHECK(csv.find("knob,mode,batch,sample,distinct,success_lcb,mean_err,secs") ==
        0);
  CHECK(csv.find("0.5,reuse,10,20,5,0.751235,0.00123456789,0.000") !=
        std::string::npos);
}

TEST_CASE("sweeps are byte-identical across reruns with one seed") {
  experiment::SweepConfig config;
  config.knobs = {1.0, 2.0};
  config.modes = {reusevr::OuterType::standard, reusevr::OuterType::reuse};
  config.trials = 3;
  config.master_seed = 42;
  const experiment::TrialRunner runner = [](double knob, reusevr::OuterType,
                                            int, std::uint64_t trial_seed) {
    experiment::TrialOutcome out;
    reusevr::SplitRng rng(trial_seed);
    out.err = knob * rng.uniform(0.0, 1.0);
    out.success = out.err < knob * 0.9;
    out.ledger.charge_batch();
    out.ledger.charge_sample(static_cast<std::int64_t>(trial_seed % 7), 3);
    return out;
  };
  const auto a = experiment::run_sweep(config, runner, {{"command", "test"}});
  const auto b = experiment::run_sweep(config, runner, {{"command", "test"}});
  CHECK(experiment::csv_string(a.rows) == experiment::csv_string(b.rows));
  CHECK(a.sidecar.dump() == b.sidecar.dump());
  // secs column is zero without opt-in timing.
  CHECK(experiment::csv_string(a.rows).find(",0.000") != std::string::npos);
}
