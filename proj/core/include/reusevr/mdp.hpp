#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reusevr/ledger.hpp"
#include "reusevr/outer.hpp"

namespace reusevr::mdp {

// Discounted MDP with dense action sets.  Row (s, a) lives at index
// s * actions + a; transitions are sparse (state, probability) lists.
struct Dmdp {
  int states = 0;
  int actions = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  Eigen::VectorXd rewards;
  double gamma = 0.0;

  int pair_count() const { return states * actions; }
  std::int64_t nnz() const;
  int row_index(int s, int a) const { return s * actions + a; }

  // Throws std::invalid_argument unless every row sums to 1 within 1e-12,
  // rewards lie in [0, 1], and gamma is in (0, 1).
  void validate() const;
};

// One full-batch transition query: (Pv)(s, a) for every pair.
Eigen::VectorXd batch_pv(const Dmdp& mdp, const Eigen::VectorXd& v,
                         QueryLedger& ledger);

struct BellmanResult {
  Eigen::VectorXd v;
  std::vector<int> policy;  // argmax with lowest-index tie break
};

// Optimality operator for an arbitrary reward vector and discount.
BellmanResult bellman_apply(const Dmdp& mdp, const Eigen::VectorXd& v,
                            const Eigen::VectorXd& rewards, double gamma,
                            QueryLedger& ledger);

struct ExactSolution {
  Eigen::VectorXd v;
  std::vector<int> policy;
  int iterations = 0;
};

// Policy iteration with exact linear solves; refuses instances with more
// than 10^4 state-action pairs.
ExactSolution exact_solve(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                          double gamma);

Eigen::VectorXd policy_value(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                             double gamma, const std::vector<int>& policy);

// Anchored reward r' = r + (gamma - gamma_prime) P v; one batch query.
Eigen::VectorXd sub_reward(const Dmdp& mdp, const Eigen::VectorXd& v,
                           double gamma_prime, QueryLedger& ledger);

struct VrviConfig {
  double eps = 0.05;        // l-infinity accuracy target
  double delta = 0.01;      // failure probability
  double sample_c = 4.0;    // per-estimate sample budget scale
  bool policy_variant = false;
};

struct VrviPlan {
  std::size_t epochs = 0;
  std::size_t inner_per_epoch = 0;
  std::size_t batch_size = 0;  // seed slots per inner step per pair
  std::size_t slots = 0;       // total seed slots (width = pair_count)
};

VrviPlan vrvi_plan(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                   double gamma_prime, const VrviConfig& config);

// Draws the successor table: for each slot j and pair (s, a) one sampled
// next state from p(s, a).  Every record is charged at draw time.
ObliviousSeed draw_successor_seed(const Dmdp& mdp, std::size_t slots,
                                  SplitRng& stream, QueryLedger& ledger);

struct VrviResult {
  Eigen::VectorXd v;
  std::vector<int> policy;
};

// Variance-reduced value iteration on (rewards, gamma_prime) consuming the
// successor seed.  The policy variant certifies v <= v^policy with a short
// run of exact fixed-policy backups (batch queries) minus the contraction
// residual, so the lower-bound invariant holds deterministically.
VrviResult vrvi_subsolve(const Dmdp& mdp, const Eigen::VectorXd& rewards,
                         double gamma_prime, const VrviConfig& config,
                         const ObliviousSeed& seed, QueryLedger& ledger);

struct PrmConfig {
  double eps = 0.05;
  double delta = 0.01;
  double pi_eps = -1.0;       // pseudo-independence parameter, default delta
  double gamma_prime = -1.0;  // < 0 selects the runtime profile choice
  OuterType mode = OuterType::standard;
  bool exact_inner = false;   // substitute policy iteration for the inner solver
  int n_outer_override = 0;
  double sample_c = 4.0;
  std::uint64_t master_seed = 0;
};

struct PrmPlan {
  double gamma_prime = 0.0;
  double eps_prime = 0.0;
  int n_outer = 0;
  VrviPlan inner;
  std::int64_t predicted_batch_standard = 0;
  std::int64_t predicted_sample_standard = 0;
  std::int64_t predicted_sample_reuse = 0;
};

PrmPlan prm_plan(const Dmdp& mdp, const PrmConfig& config);

// Discount choice trading batch work against sample work:
// 1 - gamma' = max(sqrt(A_tot / nnz(P)), 1 - gamma), kept inside
// (1 - gamma, 1 - 1e-6].
double runtime_profile_gamma_prime(const Dmdp& mdp);

struct PrmResult {
  Eigen::VectorXd v;
  std::vector<int> policy;
  RunRecord record;
  PrmPlan plan;
  double tau = 0.0;
  // Simulator draws spent by the final fresh-seed policy extraction,
  // already included in the ledger; subtract to compare reuse ratios.
  std::int64_t policy_call_draws = 0;
};

// Reduced-discount outer loop: each iteration re-anchors the reward at the
// current value estimate, solves the gamma_prime MDP to eps_prime / 2, and
// shifts down by eps_prime.  The policy is extracted by one final
// policy-variant inner call on a fresh seed in every mode.
PrmResult prm_solve(const Dmdp& mdp, const PrmConfig& config);

struct StabilityReport {
  double min_gap = 0.0;        // min over states of v*_r - v*_r'
  double max_gap = 0.0;
  double allowed = 0.0;        // max(r - r') / (1 - gamma)
  bool monotone = false;
  bool bounded = false;
};

// Checks 0 <= v*_{gamma,r} - v*_{gamma,r'} <= max(r - r')/(1 - gamma) for
// r' <= r via exact solves.
StabilityReport reward_stability_check(const Dmdp& mdp,
                                       const Eigen::VectorXd& r_hi,
                                       const Eigen::VectorXd& r_lo);

struct AmdpConfig {
  double eps = 0.1;
  double t_mix = 1.0;
  double delta = 0.01;
  OuterType mode = OuterType::standard;
  std::uint64_t master_seed = 0;
};

struct AmdpResult {
  double gamma = 0.0;
  PrmResult discounted;
};

// Average-reward reduction: gamma = 1 - eps / (9 t_mix), then the
// discounted solve at accuracy eps / (3 (1 - gamma)).
AmdpResult amdp_solve(Dmdp mdp, const AmdpConfig& config);

}  // namespace reusevr::mdp
