#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <doctest.h>

#include "reusevr/alias.hpp"
#include "reusevr/ledger.hpp"
#include "reusevr/outer.hpp"
#include "reusevr/rng.hpp"

using reusevr::AliasTable;
using reusevr::NoiseConfig;
using reusevr::ObliviousSeed;
using reusevr::OuterConfig;
using reusevr::OuterType;
using reusevr::QueryLedger;
using reusevr::SplitRng;
using reusevr::SubSolver;

TEST_CASE("splittable rng is deterministic and decorrelated") {
  SplitRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // A labeled split neither consumes from nor perturbs the parent.
  SplitRng c(42);
  SplitRng child = c.split("child");
  SplitRng d(42);
  for (int i = 0; i < 100; ++i) CHECK(c.next_u64() == d.next_u64());

  // Distinct labels give distinct streams.
  SplitRng e = d.split("other");
  CHECK(child.next_u64() != e.next_u64());
}

TEST_CASE("uniform doubles land in range with correct moments") {
  SplitRng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(-0.5, 0.5);
    CHECK(x >= -0.5);
    CHECK(x <= 0.5);
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.005);          // mean 0
  CHECK(std::abs(sq / n - 1.0 / 12) < 0.002);  // variance 1/12
}

TEST_CASE("uniform_int is unbiased over a small range") {
  SplitRng rng(3);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(5)];
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(counts[k] / double(n) - 0.2) < 0.01);
  }
}

TEST_CASE("alias table reproduces its target distribution") {
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  AliasTable table(probs);
  SplitRng rng(11);
  std::vector<int> counts(4, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[table.sample(rng)];
  for (int k = 0; k < 4; ++k) {
    CHECK(counts[k] / double(n) == doctest::Approx(probs[k]).epsilon(0.05));
  }
}

TEST_CASE("continuous noise: zero tau is the identity") {
  NoiseConfig noise;
  noise.tau = 0.0;
  SplitRng stream(1);
  Eigen::VectorXd v(2);
  v << 1.5, -2.0;
  const Eigen::VectorXd out = reusevr::add_noise(v, noise, stream);
  CHECK(out(0) == 1.5);
  CHECK(out(1) == -2.0);
}

TEST_CASE("continuous noise matches Unif(-tau, tau) moments") {
  NoiseConfig noise;
  noise.tau = 0.5;
  SplitRng stream(5);
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
  const int n = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = reusevr::add_noise(v, noise, stream);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(x(k)) <= 0.5);
      mean(k) += x(k);
      var(k) += x(k) * x(k);
    }
  }
  // Unif(-tau, tau): mean 0 with sd tau/sqrt(3n); variance tau^2/3.
  const double sigma = noise.tau / std::sqrt(3.0 * n);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(mean(k) / n) < 3.0 * sigma);
    CHECK(var(k) / n ==
          doctest::Approx(noise.tau * noise.tau / 3.0).epsilon(0.05));
  }
}

TEST_CASE("grid noise stays on the grid near the input") {
  NoiseConfig noise;
  noise.tau = 0.3;
  noise.grid_mode = true;
  noise.beta = 0.1;
  SplitRng stream(9);
  Eigen::VectorXd v(1);
  v << 0.07;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd x = reusevr::add_noise(v, noise, stream);
    const double ratio = x(0) / noise.beta;
    CHECK(std::abs(ratio - std::round(ratio)) < 1e-9);
    CHECK(std::abs(x(0) - 0.07) <= noise.tau + noise.beta + 1e-12);
  }
}

TEST_CASE("grid noise validates beta") {
  NoiseConfig noise;
  noise.tau = 0.3;
  noise.grid_mode = true;
  noise.beta = 0.0;
  SplitRng stream(1);
  CHECK_THROWS_AS(reusevr::add_noise(Eigen::VectorXd::Zero(1), noise, stream),
                  std::invalid_argument);
  noise.beta = 0.5;  // beta > tau
  CHECK_THROWS_AS(reusevr::add_noise(Eigen::VectorXd::Zero(1), noise, stream),
                  std::invalid_argument);
}

namespace {

// Toy contraction sub-solver: u' = 0.5 u + small seed-dependent offset.
SubSolver toy_solver() {
  SubSolver sub;
  sub.draw_seed = [](SplitRng& stream, QueryLedger& ledger) {
    ObliviousSeed seed;
    seed.dist_id = "uniform";
    seed.length = 4;
    for (int i = 0; i < 4; ++i) {
      seed.data.push_back(static_cast<std::int32_t>(stream.uniform_int(10)));
    }
    ledger.charge_sample(0, 4);
    return seed;
  };
  sub.solve = [](const Eigen::VectorXd& u, const ObliviousSeed& seed,
                 SplitRng&, QueryLedger& ledger) {
    ledger.charge_batch();
    double offset = 0.0;
    for (std::size_t i = 0; i < seed.length; ++i) {
      offset += (seed.at(i) - 4.5) * 1e-3;
    }
    return Eigen::VectorXd::Constant(u.size(), offset) + 0.5 * u;
  };
  return sub;
}

reusevr::PostProcess identity_post() {
  return [](const Eigen::VectorXd&, const Eigen::VectorXd& half,
            QueryLedger&) { return half; };
}

}  // namespace

TEST_CASE("run_outer validates its configuration") {
  OuterConfig config;
  config.n_outer = 0;
  const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(reusevr::run_outer(config, u0, toy_solver(),
                                     identity_post(),
                                     reusevr::last_iterate_weight()),
                  std::invalid_argument);
  config.n_outer = 3;
  config.type = OuterType::noisy;
  config.noise.tau = 0.0;  // degenerate noise rejected without the flag
  CHECK_THROWS_AS(reusevr::run_outer(config, u0, toy_solver(),
                                     identity_post(),
                                     reusevr::last_iterate_weight()),
                  std::invalid_argument);
}

TEST_CASE("zero-tau noisy mode collapses to standard") {
  OuterConfig config;
  config.n_outer = 5;
  config.master_seed = 77;
  const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(3);

  config.type = OuterType::standard;
  const auto std_run = reusevr::run_outer(config, u0, toy_solver(),
                                          identity_post(),
                                          reusevr::last_iterate_weight());
  config.type = OuterType::noisy;
  config.noise.tau = 0.0;
  config.noise.allow_zero_tau = true;
  const auto noisy_run = reusevr::run_outer(config, u0, toy_solver(),
                                            identity_post(),
                                            reusevr::last_iterate_weight());
  REQUIRE(std_run.iterates.size() == noisy_run.iterates.size());
  for (std::size_t t = 0; t < std_run.iterates.size(); ++t) {
    CHECK((std_run.iterates[t] - noisy_run.iterates[t]).norm() == 0.0);
  }
}

TEST_CASE("runs are bitwise deterministic in the master seed") {
  OuterConfig config;
  config.n_outer = 6;
  config.type = OuterType::reuse;
  config.noise.tau = 0.01;
  config.master_seed = 123;
  const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(2);
  const auto a = reusevr::run_outer(config, u0, toy_solver(), identity_post(),
                                    reusevr::uniform_weight());
  const auto b = reusevr::run_outer(config, u0, toy_solver(), identity_post(),
                                    reusevr::uniform_weight());
  CHECK((a.output - b.output).norm() == 0.0);
  CHECK(a.ledger.sample() == b.ledger.sample());

  config.master_seed = 124;
  const auto c = reusevr::run_outer(config, u0, toy_solver(), identity_post(),
                                    reusevr::uniform_weight());
  CHECK((a.output - c.output).norm() != 0.0);
}

TEST_CASE("ledger: reuse draws one seed, standard draws n_outer") {
  OuterConfig config;
  config.n_outer = 8;
  config.master_seed = 5;
  const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(2);

  config.type = OuterType::standard;
  const auto std_run = reusevr::run_outer(config, u0, toy_solver(),
                                          identity_post(),
                                          reusevr::last_iterate_weight());
  config.type = OuterType::reuse;
  config.noise.tau = 0.05;
  const auto reuse_run = reusevr::run_outer(config, u0, toy_solver(),
                                            identity_post(),
                                            reusevr::last_iterate_weight());
  CHECK(std_run.seeds_drawn == 8);
  CHECK(reuse_run.seeds_drawn == 1);
  CHECK(std_run.ledger.sample() == 8 * 4);
  CHECK(reuse_run.ledger.sample() == 4);
  CHECK(std_run.ledger.sample() ==
        reuse_run.ledger.sample() * config.n_outer);
  // Batch work is identical across modes.
  CHECK(std_run.ledger.batch() == reuse_run.ledger.batch());
}

TEST_CASE("output weights combine iterates as declared") {
  OuterConfig config;
  config.n_outer = 4;
  config.master_seed = 2;
  const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(2);
  const auto run = reusevr::run_outer(config, u0, toy_solver(),
                                      identity_post(),
                                      reusevr::uniform_weight());
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(2);
  for (const auto& u : run.iterates) avg += u / 4.0;
  CHECK((run.output - avg).norm() < 1e-15);

  const auto last = reusevr::run_outer(config, u0, toy_solver(),
                                       identity_post(),
                                       reusevr::last_iterate_weight());
  CHECK((last.output - last.iterates.back()).norm() == 0.0);
}

TEST_CASE("ledger absorb merges counts and channels") {
  QueryLedger a, b;
  a.charge_batch();
  a.charge_sample(1, 3);
  a.charge_channel("left", 2);
  b.charge_sample(1, 3);  // same key: not distinct again
  b.charge_sample(2, 2);
  b.charge_channel("left", 1);
  b.charge_channel("right", 5);
  a.absorb(b);
  CHECK(a.batch() == 1);
  CHECK(a.sample() == 8);
  CHECK(a.channel("left") == 3);
  CHECK(a.channel("right") == 5);
}

TEST_CASE("pseudo_independence_tau implements min(eta/2, eta eps)/(2 eps)") {
  // For eps <= 1/2 the min is eta * eps, so tau = eta / 2.
  CHECK(reusevr::pseudo_independence_tau(1.0, 0.05) == doctest::Approx(0.5));
  CHECK(reusevr::pseudo_independence_tau(0.2, 0.01) == doctest::Approx(0.1));
  // For eps > 1/2 the min saturates at eta / 2.
  CHECK(reusevr::pseudo_independence_tau(1.0, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("depth-1 composition with fixed seed equals a direct solve") {
  SubSolver sub = toy_solver();
  QueryLedger ledger;
  SplitRng root(31);
  SplitRng seed_stream = root.split("seed");
  const ObliviousSeed seed = sub.draw_seed(seed_stream, ledger);

  const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(2);
  NoiseConfig noise;  // tau = 0: composition is then deterministic
  noise.allow_zero_tau = true;

  SplitRng seeds(17), chis(18), noises(19);
  QueryLedger comp_ledger;
  const Eigen::VectorXd via_comp = reusevr::iterate_composition(
      u0, 1, sub, identity_post(), noise, &seed, seeds, chis, noises,
      comp_ledger);

  SplitRng chi(18);
  QueryLedger direct_ledger;
  const Eigen::VectorXd direct = sub.solve(u0, seed, chi, direct_ledger);
  CHECK((via_comp - direct).norm() == 0.0);
}
