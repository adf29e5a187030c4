#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "reusevr/mdp.hpp"
#include "reusevr/rng.hpp"

using reusevr::OuterType;
using reusevr::QueryLedger;
using reusevr::SplitRng;
namespace mdp = reusevr::mdp;

namespace {

// Random dense-support MDP with rows summing exactly to one.
mdp::Dmdp random_mdp(int states, int actions, double gamma,
                     std::uint64_t seed) {
  SplitRng rng(seed);
  mdp::Dmdp m;
  m.states = states;
  m.actions = actions;
  m.gamma = gamma;
  m.rows.resize(static_cast<std::size_t>(states) * actions);
  m.rewards.resize(m.pair_count());
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) {
      auto& row = m.rows[m.row_index(s, a)];
      double total = 0.0;
      std::vector<double> w(states);
      for (int t = 0; t < states; ++t) {
        w[t] = rng.uniform(0.01, 1.0);
        total += w[t];
      }
      double acc = 0.0;
      for (int t = 0; t < states; ++t) {
        double p = w[t] / total;
        if (t == states - 1) p = 1.0 - acc;  // exact row sum
        acc += p;
        row.emplace_back(t, p);
      }
      m.rewards[m.row_index(s, a)] = rng.uniform(0.0, 1.0);
    }
  }
  m.validate();
  return m;
}

// Brute-force expected value (Pv)(s, a) by direct summation.
double pv_direct(const mdp::Dmdp& m, const Eigen::VectorXd& v, int s, int a) {
  double out = 0.0;
  for (const auto& [t, p] : m.rows[m.row_index(s, a)]) out += p * v(t);
  return out;
}

}  // namespace

TEST_CASE("validate rejects malformed instances") {
  mdp::Dmdp m = random_mdp(3, 2, 0.9, 1);
  SUBCASE("bad row sum") {
    m.rows[0][0].second += 0.01;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("reward out of range") {
    m.rewards[2] = 1.5;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("bad discount") {
    m.gamma = 1.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
}

TEST_CASE("bellman operator matches brute-force enumeration") {
  const mdp::Dmdp m = random_mdp(2, 2, 0.8, 3);
  Eigen::VectorXd v(2);
  v << 0.3, 0.7;
  QueryLedger ledger;
  const mdp::BellmanResult res =
      mdp::bellman_apply(m, v, m.rewards, m.gamma, ledger);
  for (int s = 0; s < 2; ++s) {
    double best = -1e100;
    int best_a = 0;
    for (int a = 0; a < 2; ++a) {
      const double q =
          m.rewards(m.row_index(s, a)) + m.gamma * pv_direct(m, v, s, a);
      if (q > best + 1e-15) {
        best = q;
        best_a = a;
      }
    }
    CHECK(res.v(s) == doctest::Approx(best).epsilon(1e-12));
    CHECK(res.policy[s] == best_a);
  }
  CHECK(ledger.batch() == 1);
}

TEST_CASE("bellman ties break to the lowest action index") {
  // Two identical actions: argmax must pick action 0.
  mdp::Dmdp m;
  m.states = 1;
  m.actions = 2;
  m.gamma = 0.5;
  m.rows = {{{0, 1.0}}, {{0, 1.0}}};
  m.rewards = Eigen::VectorXd::Constant(2, 0.4);
  QueryLedger ledger;
  const auto res =
      mdp::bellman_apply(m, Eigen::VectorXd::Zero(1), m.rewards, 0.5, ledger);
  CHECK(res.policy[0] == 0);
}

TEST_CASE("exact solve matches the geometric series on a 3-state chain") {
  // Single action, deterministic cycle 0 -> 1 -> 2 -> 0 with rewards
  // (r0, r1, r2): v(0) = (r0 + g r1 + g^2 r2) / (1 - g^3).
  mdp::Dmdp m;
  m.states = 3;
  m.actions = 1;
  m.gamma = 0.9;
  m.rows = {{{1, 1.0}}, {{2, 1.0}}, {{0, 1.0}}};
  m.rewards.resize(3);
  m.rewards << 0.2, 0.5, 0.9;
  m.validate();
  const mdp::ExactSolution sol = mdp::exact_solve(m, m.rewards, m.gamma);
  const double g = 0.9;
  const double v0 =
      (0.2 + g * 0.5 + g * g * 0.9) / (1.0 - g * g * g);
  const double v1 = (0.5 + g * 0.9 + g * g * 0.2) / (1.0 - g * g * g);
  CHECK(sol.v(0) == doctest::Approx(v0).epsilon(1e-12));
  CHECK(sol.v(1) == doctest::Approx(v1).epsilon(1e-12));
}

TEST_CASE("exact solve is a Bellman fixed point with a greedy policy") {
  const mdp::Dmdp m = random_mdp(6, 3, 0.85, 7);
  const mdp::ExactSolution sol = mdp::exact_solve(m, m.rewards, m.gamma);
  QueryLedger ledger;
  const auto apply = mdp::bellman_apply(m, sol.v, m.rewards, m.gamma, ledger);
  CHECK((apply.v - sol.v).lpNorm<Eigen::Infinity>() < 1e-9);
  // Greedy policy value equals v*.
  const Eigen::VectorXd vp =
      mdp::policy_value(m, m.rewards, m.gamma, sol.policy);
  CHECK((vp - sol.v).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("vrvi on deterministic transitions reduces to value iteration") {
  // With deterministic transitions every sampled successor is the true
  // one, so the stochastic solver must agree with exact solve.
  mdp::Dmdp m;
  m.states = 4;
  m.actions = 2;
  m.gamma = 0.9;
  m.rows.resize(8);
  SplitRng rng(11);
  m.rewards.resize(8);
  for (int i = 0; i < 8; ++i) {
    m.rows[i] = {{static_cast<int>(rng.uniform_int(4)), 1.0}};
    m.rewards(i) = rng.uniform(0.0, 1.0);
  }
  m.validate();
  const double gamma_prime = 0.6;
  mdp::VrviConfig config;
  config.eps = 1e-3;
  config.delta = 0.05;

  const mdp::VrviPlan plan = mdp::vrvi_plan(m, m.rewards, gamma_prime, config);
  QueryLedger ledger;
  SplitRng stream(13);
  const auto seed = mdp::draw_successor_seed(m, plan.slots, stream, ledger);
  const mdp::VrviResult res =
      mdp::vrvi_subsolve(m, m.rewards, gamma_prime, config, seed, ledger);
  const mdp::ExactSolution exact = mdp::exact_solve(m, m.rewards, gamma_prime);
  CHECK((res.v - exact.v).lpNorm<Eigen::Infinity>() <= config.eps);
}

TEST_CASE("vrvi meets its accuracy contract on random instances") {
  const mdp::Dmdp m = random_mdp(5, 2, 0.9, 17);
  const double gamma_prime = 0.5;
  mdp::VrviConfig config;
  config.eps = 0.05;
  config.delta = 0.05;
  const mdp::ExactSolution exact = mdp::exact_solve(m, m.rewards, gamma_prime);
  const mdp::VrviPlan plan = mdp::vrvi_plan(m, m.rewards, gamma_prime, config);
  SplitRng stream(19);
  int ok = 0;
  for (int trial = 0; trial < 30; ++trial) {
    QueryLedger ledger;
    const auto seed = mdp::draw_successor_seed(m, plan.slots, stream, ledger);
    const mdp::VrviResult res =
        mdp::vrvi_subsolve(m, m.rewards, gamma_prime, config, seed, ledger);
    if ((res.v - exact.v).lpNorm<Eigen::Infinity>() <= config.eps) ++ok;
  }
  CHECK(ok >= 28);
}

TEST_CASE("policy variant certifies v <= v^policy deterministically") {
  const mdp::Dmdp m = random_mdp(5, 3, 0.9, 23);
  const double gamma_prime = 0.5;
  mdp::VrviConfig config;
  config.eps = 0.05;
  config.delta = 0.2;  // even failed accuracy may not break the invariant
  config.policy_variant = true;
  const mdp::VrviPlan plan = mdp::vrvi_plan(m, m.rewards, gamma_prime, config);
  SplitRng stream(29);
  for (int trial = 0; trial < 100; ++trial) {
    QueryLedger ledger;
    const auto seed = mdp::draw_successor_seed(m, plan.slots, stream, ledger);
    const mdp::VrviResult res =
        mdp::vrvi_subsolve(m, m.rewards, gamma_prime, config, seed, ledger);
    const Eigen::VectorXd vp =
        mdp::policy_value(m, m.rewards, gamma_prime, res.policy);
    CHECK((vp - res.v).minCoeff() >= -1e-10);  // v <= v^policy, hard
    CHECK(res.v.minCoeff() >= -1e-12);
  }
}

TEST_CASE("reward stability sandwich holds on random pairs") {
  SplitRng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const mdp::Dmdp m = random_mdp(4, 2, 0.9, 100 + rep);
    Eigen::VectorXd r_lo = m.rewards;
    for (int i = 0; i < r_lo.size(); ++i) {
      r_lo(i) = std::max(0.0, m.rewards(i) - rng.uniform(0.0, 0.3));
    }
    const mdp::StabilityReport rep_out =
        mdp::reward_stability_check(m, m.rewards, r_lo);
    CHECK(rep_out.monotone);
    CHECK(rep_out.bounded);
    CHECK(rep_out.min_gap >= -1e-10);
    CHECK(rep_out.max_gap <= rep_out.allowed + 1e-10);
  }
}

TEST_CASE("prm with exact inner solves obeys the deterministic rate") {
  const mdp::Dmdp m = random_mdp(10, 3, 0.9, 37);
  const double gamma_prime = 0.6;
  mdp::PrmConfig config;
  config.eps = 0.05;
  config.gamma_prime = gamma_prime;
  config.exact_inner = true;
  config.master_seed = 2;
  const mdp::PrmResult res = mdp::prm_solve(m, config);
  const mdp::ExactSolution exact = mdp::exact_solve(m, m.rewards, m.gamma);

  const double rate = (m.gamma - gamma_prime) / (1.0 - gamma_prime);
  const double head = exact.v.maxCoeff();  // v0 = 0
  // With exact inner solves the only per-step slack is the downward shift
  // by eps' in the post-process, so eta = eps'.
  const double tail = (1.0 - gamma_prime) / (1.0 - m.gamma) *
                      res.plan.eps_prime;
  REQUIRE(!res.record.iterates.empty());
  for (std::size_t t = 0; t < res.record.iterates.size(); ++t) {
    const Eigen::VectorXd& v = res.record.iterates[t];
    CHECK((exact.v - v).minCoeff() >= -1e-9);  // never overshoots
    const double err = (exact.v - v).lpNorm<Eigen::Infinity>();
    CHECK(err <= std::pow(rate, double(t + 1)) * head + tail + 1e-9);
  }
}

TEST_CASE("prm sampling: value accuracy and reuse draw ratio") {
  const mdp::Dmdp m = random_mdp(6, 2, 0.9, 41);
  mdp::PrmConfig config;
  config.eps = 0.1;
  config.delta = 0.05;
  config.gamma_prime = 0.6;
  config.master_seed = 3;

  const mdp::ExactSolution exact = mdp::exact_solve(m, m.rewards, m.gamma);

  config.mode = OuterType::standard;
  const mdp::PrmResult std_res = mdp::prm_solve(m, config);
  config.mode = OuterType::reuse;
  const mdp::PrmResult reuse_res = mdp::prm_solve(m, config);

  CHECK((std_res.v - exact.v).lpNorm<Eigen::Infinity>() <= config.eps);
  CHECK((reuse_res.v - exact.v).lpNorm<Eigen::Infinity>() <= config.eps);

  // Policy: 0 <= v* - v^pi <= eps.
  for (const auto& res : {std_res, reuse_res}) {
    const Eigen::VectorXd vp =
        mdp::policy_value(m, m.rewards, m.gamma, res.policy);
    CHECK((exact.v - vp).minCoeff() >= -1e-9);
    CHECK((exact.v - vp).maxCoeff() <= config.eps + 1e-9);
  }

  // Simulator draws, excluding the final fresh policy call, shrink by
  // exactly n_outer in reuse mode.
  const std::int64_t std_draws =
      std_res.record.ledger.sample() - std_res.policy_call_draws;
  const std::int64_t reuse_draws =
      reuse_res.record.ledger.sample() - reuse_res.policy_call_draws;
  CHECK(std_draws == reuse_draws * std_res.plan.n_outer);
}

TEST_CASE("runtime profile keeps gamma_prime inside its interval") {
  const mdp::Dmdp m = random_mdp(8, 2, 0.95, 43);
  const double gp = mdp::runtime_profile_gamma_prime(m);
  CHECK(gp < m.gamma);
  CHECK(gp > 0.0);
  CHECK(1.0 - gp <= 1.0 - 1e-7);
}

TEST_CASE("amdp reduction sets the documented discount") {
  const mdp::Dmdp m = random_mdp(4, 2, 0.9, 47);
  mdp::AmdpConfig config;
  config.eps = 0.09;
  config.t_mix = 2.0;
  config.master_seed = 5;
  const mdp::AmdpResult res = mdp::amdp_solve(m, config);
  CHECK(res.gamma == doctest::Approx(1.0 - config.eps / (9.0 * config.t_mix)));
  CHECK(res.discounted.v.size() == m.states);
}
