#include "reusevr/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "reusevr/alias.hpp"

namespace reusevr::mdp {

std::int64_t Dmdp::nnz() const {
  std::int64_t total = 0;
  for (const auto& row : rows) total += static_cast<std::int64_t>(row.size());
  return total;
}

void Dmdp::validate() const {
  if (states < 1 || actions < 1) throw std::invalid_argument("empty MDP");
  if (gamma <= 0.0 || gamma >= 1.0) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (static_cast<int>(rows.size()) != pair_count() ||
      rewards.size() != pair_count()) {
    throw std::invalid_argument("row/reward count mismatch");
  }
  for (int idx = 0; idx < pair_count(); ++idx) {
    if (rewards[idx] < 0.0 || rewards[idx] > 1.0) {
      throw std::invalid_argument("reward outside [0, 1]");
    }
    double total = 0;
    for (const auto& [sp, p] : rows[idx]) {
      if (sp < 0 || sp >= states) throw std::invalid_argument("bad successor");
      if (p < 0) throw std::invalid_argument("negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("transition row does not sum to 1");
    }
  }
}

Eigen::VectorXd batch_pv(const Dmdp& mdp, const Eigen::VectorXd& v,
                         QueryLedger& ledger) {
  ledger.charge_batch();
  Eigen::VectorXd out(mdp.pair_count());
  for (int idx = 0; idx < mdp.pair_count(); ++idx) {
    double total = 0;
    for (const auto& [sp, p] : mdp.rows[idx]) total += p * v[sp];
    out[idx] = total;
  }
  return out;
}

BellmanResult bellman_apply(const Dmdp& mdp, const Eigen::VectorXd& v,
                            const Eigen::VectorXd& rewards, double gamma,
                            QueryLedger& ledger) {
  const Eigen::VectorXd pv = batch_pv(mdp, v, ledger);
  BellmanResult out;
  out.v.resize(mdp.states);
  out.policy.resize(mdp.states);
  for (int s = 0; s < mdp.states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < mdp.actions; ++a) {
      const int idx = mdp.row_index(s, a);
      const double q = rewards[idx] + gamma * pv[idx];
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    out.v[s] = best;
    out.policy[s] = best_a;
  }
  return out;
}

Eigen::VectorXd policy_value(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                             double gamma, const std::vector<int>& policy) {
  const int n = mdp.states;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r(n);
  for (int s = 0; s < n; ++s) {
    const int idx = mdp.row_index(s, policy[s]);
    r[s] = rewards[idx];
    for (const auto& [sp, p] : mdp.rows[idx]) M(s, sp) -= gamma * p;
  }
  return M.partialPivLu().solve(r);
}

ExactSolution exact_solve(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                          double gamma) {
  if (mdp.pair_count() > 10000) {
    throw std::invalid_argument("exact solve limited to 1e4 pairs");
  }
  ExactSolution out;
  QueryLedger scratch;
  out.policy = bellman_apply(mdp, Eigen::VectorXd::Zero(mdp.states), rewards,
                             gamma, scratch)
                   .policy;
  for (int it = 0; it < 1000; ++it) {
    ++out.iterations;
    out.v = policy_value(mdp, rewards, gamma, out.policy);
    const std::vector<int> next =
        bellman_apply(mdp, out.v, rewards, gamma, scratch).policy;
    if (next == out.policy) return out;
    out.policy = next;
  }
  throw std::runtime_error("policy iteration did not converge");
}

Eigen::VectorXd sub_reward(const Dmdp& mdp, const Eigen::VectorXd& v,
                           double gamma_prime, QueryLedger& ledger) {
  const Eigen::VectorXd pv = batch_pv(mdp, v, ledger);
  return mdp.rewards + (mdp.gamma - gamma_prime) * pv;
}

namespace {

double tightened_eps(double gamma_prime, const VrviConfig& config) {
  if (!config.policy_variant) return config.eps;
  // Greedy-policy loss control: the value phase must be accurate enough
  // that the extracted policy's value stays within eps of optimal.
  const double greedy = config.eps * (1.0 - gamma_prime) /
                        std::max(4.0 * gamma_prime, 1e-3);
  return std::min(config.eps / 2.0, greedy);
}

}  // namespace

VrviPlan vrvi_plan(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                   double gamma_prime, const VrviConfig& config) {
  if (gamma_prime <= 0.0 || gamma_prime >= 1.0) {
    throw std::invalid_argument("gamma_prime must lie in (0, 1)");
  }
  const double one_mg = 1.0 - gamma_prime;
  const double vmax = rewards.maxCoeff() / one_mg;
  const double eps = tightened_eps(gamma_prime, config);
  VrviPlan plan;
  plan.epochs = static_cast<std::size_t>(
      std::ceil(std::log2(std::max(2.0, vmax / std::max(eps, 1e-12)))));
  plan.inner_per_epoch = static_cast<std::size_t>(
      std::ceil(std::log(4.0) / std::log(1.0 / gamma_prime)));
  const double logs = std::log(std::max(
      2.0, 2.0 * mdp.pair_count() * plan.inner_per_epoch * plan.epochs /
               std::min(config.delta, 0.5)));
  plan.batch_size = static_cast<std::size_t>(
      std::ceil(config.sample_c * logs / (one_mg * one_mg)));
  plan.slots = plan.epochs * plan.inner_per_epoch * plan.batch_size;
  return plan;
}

ObliviousSeed draw_successor_seed(const Dmdp& mdp, std::size_t slots,
                                  SplitRng& stream, QueryLedger& ledger) {
  const int pairs = mdp.pair_count();
  std::vector<AliasTable> tables;
  tables.reserve(pairs);
  for (int idx = 0; idx < pairs; ++idx) {
    std::vector<double> probs;
    probs.reserve(mdp.rows[idx].size());
    for (const auto& [sp, p] : mdp.rows[idx]) probs.push_back(p);
    tables.emplace_back(probs);
  }
  ObliviousSeed seed;
  seed.dist_id = "successors";
  seed.length = slots;
  seed.width = static_cast<std::size_t>(pairs);
  seed.data.resize(slots * seed.width);
  for (std::size_t j = 0; j < slots; ++j) {
    for (int idx = 0; idx < pairs; ++idx) {
      const std::int32_t pick = tables[idx].sample(stream);
      seed.data[j * seed.width + idx] = mdp.rows[idx][pick].first;
      ledger.charge_sample(idx);
    }
  }
  return seed;
}

VrviResult vrvi_subsolve(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                         double gamma_prime, const VrviConfig& config,
                         const ObliviousSeed& seed, QueryLedger& ledger) {
  const VrviPlan plan = vrvi_plan(mdp, rewards, gamma_prime, config);
  if (seed.length < plan.slots ||
      seed.width != static_cast<std::size_t>(mdp.pair_count())) {
    throw std::invalid_argument("seed does not match the solve plan");
  }
  const double one_mg = 1.0 - gamma_prime;
  const double vmax = std::max(rewards.maxCoeff(), 0.0) / one_mg;
  const int pairs = mdp.pair_count();

  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.states);
  std::vector<int> policy(mdp.states, 0);
  std::size_t slot = 0;
  for (std::size_t e = 0; e < plan.epochs; ++e) {
    const Eigen::VectorXd anchor = v;
    const Eigen::VectorXd g = batch_pv(mdp, anchor, ledger);
    for (std::size_t k = 0; k < plan.inner_per_epoch; ++k) {
      Eigen::VectorXd next(mdp.states);
      for (int s = 0; s < mdp.states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < mdp.actions; ++a) {
          const int idx = mdp.row_index(s, a);
          double corr = 0;
          for (std::size_t b = 0; b < plan.batch_size; ++b) {
            const std::int32_t sp = seed.at(slot + b, idx);
            corr += v[sp] - anchor[sp];
          }
          corr /= static_cast<double>(plan.batch_size);
          double q = rewards[idx] + gamma_prime * (g[idx] + corr);
          q = std::clamp(q, 0.0, vmax);
          if (q > best) {
            best = q;
            best_a = a;
          }
        }
        next[s] = best;
        policy[s] = best_a;
      }
      v = next;
      slot += plan.batch_size;
    }
  }

  VrviResult out;
  out.policy = policy;
  if (!config.policy_variant) {
    out.v = v;
    return out;
  }
  // Certify a lower bound on the policy's value: run exact fixed-policy
  // backups from v, then subtract the remaining contraction residual.
  const double slack = std::max(config.eps / 4.0, 1e-12);
  const auto backups = static_cast<int>(std::ceil(
      std::log(std::max(2.0, 2.0 * vmax / slack)) / std::log(1.0 / gamma_prime)));
  Eigen::VectorXd w = v;
  for (int k = 0; k < backups; ++k) {
    const Eigen::VectorXd pw = batch_pv(mdp, w, ledger);
    for (int s = 0; s < mdp.states; ++s) {
      const int idx = mdp.row_index(s, policy[s]);
      w[s] = rewards[idx] + gamma_prime * pw[idx];
    }
  }
  const double residual = std::pow(gamma_prime, backups) * vmax;
  out.v = (w.array() - residual).cwiseMax(0.0);
  (void)pairs;
  return out;
}

double runtime_profile_gamma_prime(const Dmdp& mdp) {
  const double lo = 1.0 - mdp.gamma;
  const double hi = 1.0 - 1e-6;
  if (lo >= hi) throw std::invalid_argument("gamma too small to reduce");
  double x = std::sqrt(static_cast<double>(mdp.pair_count()) /
                       static_cast<double>(mdp.nnz()));
  if (x <= lo) x = std::min(1.25 * lo, hi);
  x = std::min(x, hi);
  return 1.0 - x;
}

PrmPlan prm_plan(const Dmdp& mdp, const PrmConfig& config) {
  PrmPlan plan;
  plan.gamma_prime = config.gamma_prime > 0.0 ? config.gamma_prime
                                              : runtime_profile_gamma_prime(mdp);
  if (plan.gamma_prime >= mdp.gamma) {
    throw std::invalid_argument("gamma_prime must be below gamma");
  }
  const double one_mg = 1.0 - mdp.gamma;
  const double one_mgp = 1.0 - plan.gamma_prime;
  plan.eps_prime = (config.eps / 4.0) * one_mg / one_mgp;

  const double rate = (mdp.gamma - plan.gamma_prime) / one_mgp;
  const double vmax = mdp.rewards.maxCoeff() / one_mg;
  if (config.n_outer_override > 0) {
    plan.n_outer = config.n_outer_override;
  } else {
    plan.n_outer = static_cast<int>(std::ceil(
        std::log(std::max(2.0, 2.0 * vmax / config.eps)) /
        std::log(1.0 / std::max(rate, 1e-12))));
    plan.n_outer = std::max(plan.n_outer, 1);
  }

  // Reward bound across iterations: r^(t) = r + (gamma - gamma') P v_t
  // with 0 <= v_t <= vmax.
  Eigen::VectorXd reward_bound = mdp.rewards;
  reward_bound.array() += (mdp.gamma - plan.gamma_prime) * vmax;
  VrviConfig inner;
  inner.eps = plan.eps_prime / 2.0;
  inner.delta = std::min(config.delta, 0.5) / (plan.n_outer + 1.0);
  inner.sample_c = config.sample_c;
  plan.inner = vrvi_plan(mdp, reward_bound, plan.gamma_prime, inner);

  const auto per_seed = static_cast<std::int64_t>(plan.inner.slots) *
                        static_cast<std::int64_t>(mdp.pair_count());
  plan.predicted_sample_standard = per_seed * (plan.n_outer + 1);
  plan.predicted_sample_reuse = per_seed * 2;
  plan.predicted_batch_standard = static_cast<std::int64_t>(plan.n_outer) *
                                  (1 + static_cast<std::int64_t>(plan.inner.epochs));
  return plan;
}

PrmResult prm_solve(const Dmdp& mdp, const PrmConfig& config) {
  mdp.validate();
  PrmResult result;
  result.plan = prm_plan(mdp, config);
  const PrmPlan& plan = result.plan;
  const double pi_eps = config.pi_eps > 0 ? config.pi_eps : config.delta;

  VrviConfig inner;
  inner.eps = plan.eps_prime / 2.0;
  inner.delta = std::min(config.delta, 0.5) / (plan.n_outer + 1.0);
  inner.sample_c = config.sample_c;

  OuterConfig outer;
  outer.type = config.mode;
  outer.n_outer = plan.n_outer;
  outer.master_seed = config.master_seed;
  if (config.mode != OuterType::standard) {
    outer.noise.tau = pseudo_independence_tau(plan.eps_prime / 2.0, pi_eps);
  }
  result.tau = outer.noise.tau;

  SubSolver sub;
  if (config.exact_inner) {
    sub.draw_seed = [](SplitRng&, QueryLedger&) { return ObliviousSeed{}; };
    sub.solve = [&mdp, &plan](const Eigen::VectorXd& v, const ObliviousSeed&,
                              SplitRng&, QueryLedger& ledger) {
      const Eigen::VectorXd r = sub_reward(mdp, v, plan.gamma_prime, ledger);
      return exact_solve(mdp, r, plan.gamma_prime).v;
    };
  } else {
    sub.draw_seed = [&mdp, &plan](SplitRng& stream, QueryLedger& ledger) {
      return draw_successor_seed(mdp, plan.inner.slots, stream, ledger);
    };
    sub.solve = [&mdp, &plan, inner](const Eigen::VectorXd& v,
                                     const ObliviousSeed& seed, SplitRng&,
                                     QueryLedger& ledger) {
      const Eigen::VectorXd r = sub_reward(mdp, v, plan.gamma_prime, ledger);
      return vrvi_subsolve(mdp, r, plan.gamma_prime, inner, seed, ledger).v;
    };
  }

  const double eps_prime = plan.eps_prime;
  PostProcess post = [eps_prime](const Eigen::VectorXd&,
                                 const Eigen::VectorXd& half, QueryLedger&) {
    return (half.array() - eps_prime).cwiseMax(0.0).matrix().eval();
  };

  const Eigen::VectorXd v0 = Eigen::VectorXd::Zero(mdp.states);
  result.record = run_outer(outer, v0, sub, post, last_iterate_weight());
  result.v = result.record.output;

  // Policy extraction always uses a fresh seed, reuse mode included.
  SplitRng root(config.master_seed);
  SplitRng fresh_stream = root.split("policy-seed");
  SplitRng scratch_chi = root.split("policy-chi");
  const Eigen::VectorXd r_final =
      sub_reward(mdp, result.v, plan.gamma_prime, result.record.ledger);
  VrviConfig pol = inner;
  pol.policy_variant = true;
  if (config.exact_inner) {
    result.policy = exact_solve(mdp, r_final, plan.gamma_prime).policy;
  } else {
    const VrviPlan pol_plan = vrvi_plan(mdp, r_final, plan.gamma_prime, pol);
    result.policy_call_draws =
        static_cast<std::int64_t>(pol_plan.slots) * mdp.pair_count();
    const ObliviousSeed pol_seed = draw_successor_seed(
        mdp, pol_plan.slots, fresh_stream, result.record.ledger);
    result.policy =
        vrvi_subsolve(mdp, r_final, plan.gamma_prime, pol, pol_seed,
                      result.record.ledger)
            .policy;
  }
  (void)scratch_chi;
  return result;
}

StabilityReport reward_stability_check(const Dmdp& mdp,
                                       const Eigen::VectorXd& r_hi,
                                       const Eigen::VectorXd& r_lo) {
  if ((r_lo.array() > r_hi.array() + 1e-15).any()) {
    throw std::invalid_argument("r_lo must be dominated by r_hi");
  }
  const Eigen::VectorXd v_hi = exact_solve(mdp, r_hi, mdp.gamma).v;
  const Eigen::VectorXd v_lo = exact_solve(mdp, r_lo, mdp.gamma).v;
  StabilityReport rep;
  rep.min_gap = (v_hi - v_lo).minCoeff();
  rep.max_gap = (v_hi - v_lo).maxCoeff();
  rep.allowed = (r_hi - r_lo).maxCoeff() / (1.0 - mdp.gamma);
  rep.monotone = rep.min_gap >= -1e-9;
  rep.bounded = rep.max_gap <= rep.allowed + 1e-9;
  return rep;
}

AmdpResult amdp_solve(Dmdp mdp, const AmdpConfig& config) {
  if (config.t_mix <= 0 || config.eps <= 0) {
    throw std::invalid_argument("eps and t_mix must be positive");
  }
  AmdpResult out;
  out.gamma = 1.0 - config.eps / (9.0 * config.t_mix);
  out.gamma = std::min(out.gamma, 1.0 - 1e-9);
  mdp.gamma = out.gamma;
  PrmConfig prm;
  prm.eps = config.eps / (3.0 * (1.0 - out.gamma));
  prm.delta = config.delta;
  prm.mode = config.mode;
  prm.master_seed = config.master_seed;
  out.discounted = prm_solve(mdp, prm);
  return out;
}

}  // namespace reusevr::mdp
