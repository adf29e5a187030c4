// Microbenchmarks for the hot paths: the split RNG, seed realization, the
// SVRG inner solver, one accelerated outer solve in each mode, and the
// variance-reduced value-iteration inner solver.
#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "reusevr/fsm.hpp"
#include "reusevr/ledger.hpp"
#include "reusevr/mdp.hpp"
#include "reusevr/rng.hpp"

namespace {

using reusevr::ObliviousSeed;
using reusevr::OuterType;
using reusevr::QueryLedger;
using reusevr::SplitRng;
namespace fsm = reusevr::fsm;
namespace mdp = reusevr::mdp;

fsm::GlmProblem make_ridge(int n, int d) {
  SplitRng rng(42);
  Eigen::MatrixXd A(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
    y(i) = rng.uniform(-1.0, 1.0);
  }
  return {A, y, 0.5, "squared"};
}

mdp::Dmdp make_mdp(int states, int actions) {
  SplitRng rng(43);
  mdp::Dmdp m;
  m.states = states;
  m.actions = actions;
  m.gamma = 0.9;
  m.rows.resize(static_cast<std::size_t>(states) * actions);
  m.rewards.resize(m.pair_count());
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) {
      auto& row = m.rows[m.row_index(s, a)];
      std::vector<double> w(states);
      double total = 0.0;
      for (int t = 0; t < states; ++t) {
        w[t] = rng.uniform(0.01, 1.0);
        total += w[t];
      }
      double acc = 0.0;
      for (int t = 0; t < states; ++t) {
        double p = w[t] / total;
        if (t == states - 1) p = 1.0 - acc;
        acc += p;
        row.emplace_back(t, p);
      }
      m.rewards[m.row_index(s, a)] = rng.uniform(0.0, 1.0);
    }
  }
  return m;
}

void BM_SplitRngUniform(benchmark::State& state) {
  SplitRng rng(1);
  double acc = 0.0;
  for (auto _ : state) acc += rng.uniform(0.0, 1.0);
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_SplitRngUniform);

void BM_SeedDraw(benchmark::State& state) {
  const auto problem = make_ridge(100, 20);
  const fsm::SeedSpec spec =
      fsm::uniform_seed_spec(problem, problem.strong_convexity(), 100.0, 0.01,
                             4.0);
  SplitRng rng(2);
  for (auto _ : state) {
    ObliviousSeed seed;
    seed.dist_id = "uniform";
    seed.length = spec.length;
    seed.data.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
      seed.data.push_back(
          static_cast<std::int32_t>(rng.uniform_int(problem.n())));
    }
    benchmark::DoNotOptimize(seed.data.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(spec.length));
}
BENCHMARK(BM_SeedDraw);

void BM_SvrgSubsolve(benchmark::State& state) {
  const auto problem = make_ridge(static_cast<int>(state.range(0)), 20);
  const double lambda = 2.0 * problem.strong_convexity();
  fsm::SvrgConfig config;
  config.lambda = lambda;
  const fsm::SeedSpec spec =
      fsm::uniform_seed_spec(problem, lambda, config.c, config.delta, 4.0);
  SplitRng rng(3);
  ObliviousSeed seed;
  seed.dist_id = "uniform";
  seed.length = spec.length;
  for (std::size_t t = 0; t < spec.length; ++t) {
    seed.data.push_back(
        static_cast<std::int32_t>(rng.uniform_int(problem.n())));
  }
  const Eigen::VectorXd center = Eigen::VectorXd::Zero(problem.dim());
  for (auto _ : state) {
    QueryLedger ledger;
    benchmark::DoNotOptimize(
        fsm::svrg_subsolve(problem, center, config, seed, ledger));
  }
}
BENCHMARK(BM_SvrgSubsolve)->Arg(50)->Arg(200);

void BM_AppSolve(benchmark::State& state) {
  const auto problem = make_ridge(50, 10);
  fsm::AppConfig config;
  config.lambda = 4.0 * problem.strong_convexity();
  config.mode = static_cast<OuterType>(state.range(0));
  config.master_seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsm::app_solve(problem, config));
  }
}
BENCHMARK(BM_AppSolve)
    ->Arg(static_cast<int>(OuterType::standard))
    ->Arg(static_cast<int>(OuterType::noisy))
    ->Arg(static_cast<int>(OuterType::reuse));

void BM_VrviSubsolve(benchmark::State& state) {
  const auto m = make_mdp(static_cast<int>(state.range(0)), 3);
  const double gamma_prime = 0.6;
  mdp::VrviConfig config;
  config.eps = 0.05;
  const mdp::VrviPlan plan = mdp::vrvi_plan(m, m.rewards, gamma_prime, config);
  SplitRng rng(4);
  QueryLedger draw_ledger;
  const ObliviousSeed seed =
      mdp::draw_successor_seed(m, plan.slots, rng, draw_ledger);
  for (auto _ : state) {
    QueryLedger ledger;
    benchmark::DoNotOptimize(
        mdp::vrvi_subsolve(m, m.rewards, gamma_prime, config, seed, ledger));
  }
}
BENCHMARK(BM_VrviSubsolve)->Arg(10)->Arg(30);

}  // namespace

BENCHMARK_MAIN();
