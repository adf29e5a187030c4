#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "reusevr/fsm.hpp"
#include "reusevr/outer.hpp"

namespace reusevr::topev {

// Finite-sum form of the shifted covariance: F(x) = (1/n) sum_i f_i(x)
// with f_i(x) = (1/2) x^T (w_i I - n a_i a_i^T) x - b^T x and weights
// w_i = n lambda' ||a_i||^2 / ||A||_F^2, so F(x) =
// (1/2) x^T (lambda' I - A^T A) x - b^T x.  Components can be nonconvex;
// F is (lambda' - lambda_1)-strongly convex.
class ShiftedSum : public fsm::FiniteSum {
 public:
  ShiftedSum(Eigen::MatrixXd A, Eigen::VectorXd b, double lambda_prime,
             double mu_hint);

  int n() const override { return static_cast<int>(A_.rows()); }
  int dim() const override { return static_cast<int>(A_.cols()); }
  Eigen::VectorXd grad_component(int i, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd batch_grad(const Eigen::VectorXd& x) const override;
  double component_smoothness(int i) const override;
  double smoothness() const override { return smoothness_; }
  double strong_convexity() const override { return mu_; }
  double value(const Eigen::VectorXd& x) const override;

  bool is_quadratic() const override { return true; }
  Eigen::MatrixXd quad_hessian() const override;
  Eigen::VectorXd quad_linear() const override { return b_; }

  // Seed distribution: P(i) = ||a_i||^2 / ||A||_F^2.
  std::vector<double> seed_probs() const;
  double lambda_prime() const { return lambda_prime_; }
  void set_linear(const Eigen::VectorXd& b);

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  double lambda_prime_;
  double mu_;
  double smoothness_;
  std::vector<double> row_sq_;
  double frob2_;
};

ShiftedSum build_shifted_sum(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             double lambda_prime, double mu_hint);

// Deterministic power iterations on A^T A; returns a lower estimate of the
// top eigenvalue.
double estimate_lambda1(const Eigen::MatrixXd& A, int iterations = 200);

double rayleigh_quotient(const Eigen::MatrixXd& A, const Eigen::VectorXd& x);

struct TopEvConfig {
  double eps = 0.05;          // Rayleigh accuracy target, relative
  double lambda_prime = -1.0; // < 0 selects lambda1_est * (1 + shift_margin)
  double shift_margin = 0.25;
  double alpha = 1.0;         // prox modulus rho = alpha * lambda1_est
  double c = 1000.0;          // inner solve relative accuracy
  double delta = 0.05;
  double C = 2.0;
  OuterType mode = OuterType::standard;
  std::uint64_t master_seed = 0;
};

struct TopEvResult {
  Eigen::VectorXd x;
  double rayleigh = 0.0;
  int iterations = 0;
  double lambda_prime = 0.0;
  QueryLedger ledger;
};

// Shift-and-invert power method: each outer power step solves the linear
// system (lambda' I - A^T A) z = x via the accelerated proximal loop over
// the shifted finite sum, in the configured outer mode.
TopEvResult shift_invert_solve(const Eigen::MatrixXd& A,
                               const TopEvConfig& config);

}  // namespace reusevr::topev
