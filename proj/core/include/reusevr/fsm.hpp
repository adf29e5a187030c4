#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reusevr/ledger.hpp"
#include "reusevr/outer.hpp"

namespace reusevr::fsm {

// Finite-sum objective F(x) = (1/n) sum_i f_i(x), mu-strongly convex with
// L-smooth components.  Component gradient access goes through the sample
// oracle; batch_grad is one full-batch query.
class FiniteSum {
 public:
  virtual ~FiniteSum() = default;
  virtual int n() const = 0;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd grad_component(int i,
                                         const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd batch_grad(const Eigen::VectorXd& x) const = 0;
  virtual double component_smoothness(int i) const = 0;
  virtual double smoothness() const = 0;
  virtual double strong_convexity() const = 0;
  virtual double value(const Eigen::VectorXd& x) const = 0;

  virtual bool is_quadratic() const { return false; }
  // F(x) = (1/2) x^T H x - b^T x + const when is_quadratic().
  virtual Eigen::MatrixXd quad_hessian() const;
  virtual Eigen::VectorXd quad_linear() const;
};

// (1/(2n)) sum_i (a_i^T x - y_i)^2 + (mu/2)||x||^2 for link "squared";
// (1/n) sum_i log(1 + exp(-y_i a_i^T x)) + (mu/2)||x||^2 for "logistic".
class GlmProblem : public FiniteSum {
 public:
  GlmProblem(Eigen::MatrixXd A, Eigen::VectorXd y, double mu,
             std::string link);

  int n() const override { return static_cast<int>(A_.rows()); }
  int dim() const override { return static_cast<int>(A_.cols()); }
  Eigen::VectorXd grad_component(int i, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd batch_grad(const Eigen::VectorXd& x) const override;
  double component_smoothness(int i) const override;
  double smoothness() const override { return smoothness_; }
  double strong_convexity() const override { return mu_; }
  double value(const Eigen::VectorXd& x) const override;

  bool is_quadratic() const override { return link_ == "squared"; }
  Eigen::MatrixXd quad_hessian() const override;
  Eigen::VectorXd quad_linear() const override;

  const std::string& link() const { return link_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd y_;
  double mu_;
  std::string link_;
  double smoothness_;
  std::vector<double> row_sq_;
};

// Proximal sub-problem target: argmin F(x) + (lambda/2)||x - center||^2.
// Exact solve for quadratic F, used as the reference oracle.
Eigen::VectorXd exact_subproblem(const FiniteSum& problem,
                                 const Eigen::VectorXd& center, double lambda);

Eigen::VectorXd exact_minimizer(const FiniteSum& problem);

// High-accuracy deterministic solve of argmin F + (lambda/2)||. - center||^2
// (lambda = 0 gives the plain minimizer): linear solve for quadratic F,
// damped Newton otherwise.  Reference oracle, not oracle-charged.
Eigen::VectorXd reference_minimizer(const FiniteSum& problem,
                                    const Eigen::VectorXd& center,
                                    double lambda);

// Index distribution for the oblivious seed.
struct SeedSpec {
  std::vector<double> probs;
  std::size_t length = 0;
};

SeedSpec uniform_seed_spec(const FiniteSum& problem, double lambda, double c,
                           double delta, double C);
// Component probabilities proportional to sqrt(L_i); seed length scales
// with sum_i sqrt(L_i / (n mu)).
SeedSpec nonuniform_seed_spec(const FiniteSum& problem, double lambda, double c,
                              double delta, double C);

struct SvrgConfig {
  double lambda = 0.0;
  double c = 100.0;    // relative gap target 1/c on the regularized objective
  double delta = 0.01; // failure probability
  double C = 4.0;      // log-factor scale
  std::vector<double> probs;  // seed index distribution when non-uniform
};

std::size_t svrg_epoch_length(const FiniteSum& problem, double lambda);
std::size_t svrg_epochs(double c, double delta);

// One SVRG run on F + (lambda/2)||. - center||^2 consuming the seed's
// index records in order; one batch query per epoch for the anchor.
Eigen::VectorXd svrg_subsolve(const FiniteSum& problem,
                              const Eigen::VectorXd& center,
                              const SvrgConfig& config,
                              const ObliviousSeed& seed, QueryLedger& ledger);

// High-probability l-infinity wrapper: tightens the relative gap target so
// the output lands within sqrt(gap/c) of the exact sub-problem solution.
Eigen::VectorXd svrg_hp_subsolve(const FiniteSum& problem,
                                 const Eigen::VectorXd& center,
                                 const SvrgConfig& config,
                                 const ObliviousSeed& seed,
                                 QueryLedger& ledger);

// Relative-gap target for the robust sub-solver backing reuse mode:
// c' = max(2 d c / L, c mu / 2) * safety.
double robust_subsolver_c(const FiniteSum& problem, double c, double safety);

struct AppConfig {
  double lambda = 0.0;
  double c = 100.0;   // final relative accuracy target
  double delta = 0.01;
  double eps = -1.0;  // pseudo-independence parameter; defaults to delta
  double C = 4.0;
  OuterType mode = OuterType::standard;
  int n_outer_override = 0;
  double tau_override = -1.0;
  bool grid_noise = false;
  double beta = 0.0;
  bool nonuniform_seed = false;
  // Explicit seed index distribution; overrides nonuniform_seed.
  std::vector<double> seed_probs_override;
  std::uint64_t master_seed = 0;
};

struct AppResult {
  Eigen::VectorXd x;
  RunRecord record;
  int n_outer = 0;
  double tau = 0.0;
  std::size_t seed_length = 0;
};

int app_n_outer(const FiniteSum& problem, const AppConfig& config);

// Post-process zeta for the accelerated proximal step.  u = (x, v) stacked;
// u_half is the (possibly noised) sub-problem solution in R^d.
Eigen::VectorXd app_post_process(const FiniteSum& problem, double lambda,
                                 const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& u_half);

Eigen::VectorXd app_extrapolate(const FiniteSum& problem, double lambda,
                                const Eigen::VectorXd& u);

// Accelerated proximal outer loop in standard, noisy, or reuse mode.
AppResult app_solve(const FiniteSum& problem, const AppConfig& config);

}  // namespace reusevr::fsm
