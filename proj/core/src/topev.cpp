#include "reusevr/topev.hpp"

#include <cmath>
#include <stdexcept>

namespace reusevr::topev {

ShiftedSum::ShiftedSum(Eigen::MatrixXd A, Eigen::VectorXd b,
                       double lambda_prime, double mu_hint)
    : A_(std::move(A)),
      b_(std::move(b)),
      lambda_prime_(lambda_prime),
      mu_(mu_hint) {
  if (b_.size() != A_.cols()) throw std::invalid_argument("bad linear term");
  if (lambda_prime_ <= 0 || mu_ <= 0) {
    throw std::invalid_argument("lambda_prime and mu_hint must be positive");
  }
  const auto n = static_cast<double>(A_.rows());
  frob2_ = A_.squaredNorm();
  row_sq_.resize(A_.rows());
  smoothness_ = 0;
  for (Eigen::Index i = 0; i < A_.rows(); ++i) {
    row_sq_[i] = A_.row(i).squaredNorm();
    const double wi = n * lambda_prime_ * row_sq_[i] / frob2_;
    smoothness_ = std::max(smoothness_, wi + n * row_sq_[i]);
  }
}

Eigen::VectorXd ShiftedSum::grad_component(int i,
                                           const Eigen::VectorXd& x) const {
  const auto n = static_cast<double>(A_.rows());
  const double wi = n * lambda_prime_ * row_sq_[i] / frob2_;
  return wi * x - n * A_.row(i).dot(x) * A_.row(i).transpose() - b_;
}

Eigen::VectorXd ShiftedSum::batch_grad(const Eigen::VectorXd& x) const {
  return lambda_prime_ * x - A_.transpose() * (A_ * x) - b_;
}

double ShiftedSum::component_smoothness(int i) const {
  const auto n = static_cast<double>(A_.rows());
  const double wi = n * lambda_prime_ * row_sq_[i] / frob2_;
  return wi + n * row_sq_[i];
}

double ShiftedSum::value(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd Ax = A_ * x;
  return 0.5 * (lambda_prime_ * x.squaredNorm() - Ax.squaredNorm()) -
         b_.dot(x);
}

Eigen::MatrixXd ShiftedSum::quad_hessian() const {
  Eigen::MatrixXd H = -A_.transpose() * A_;
  H.diagonal().array() += lambda_prime_;
  return H;
}

std::vector<double> ShiftedSum::seed_probs() const {
  std::vector<double> probs(row_sq_.begin(), row_sq_.end());
  for (double& p : probs) p /= frob2_;
  return probs;
}

void ShiftedSum::set_linear(const Eigen::VectorXd& b) {
  if (b.size() != A_.cols()) throw std::invalid_argument("bad linear term");
  b_ = b;
}

ShiftedSum build_shifted_sum(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             double lambda_prime, double mu_hint) {
  return ShiftedSum(A, b, lambda_prime, mu_hint);
}

double estimate_lambda1(const Eigen::MatrixXd& A, int iterations) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(A.cols()).normalized();
  double value = 0;
  for (int k = 0; k < iterations; ++k) {
    Eigen::VectorXd y = A.transpose() * (A * x);
    const double norm = y.norm();
    if (norm == 0) return 0;
    x = y / norm;
    value = norm;
  }
  return value;
}

double rayleigh_quotient(const Eigen::MatrixXd& A, const Eigen::VectorXd& x) {
  return (A * x).squaredNorm() / x.squaredNorm();
}

TopEvResult shift_invert_solve(const Eigen::MatrixXd& A,
                               const TopEvConfig& config) {
  const int d = static_cast<int>(A.cols());
  const double lambda1_est = estimate_lambda1(A);
  const double lambda_prime = config.lambda_prime > 0
                                  ? config.lambda_prime
                                  : lambda1_est * (1.0 + config.shift_margin);
  const double mu_hint = std::max(lambda_prime - lambda1_est, 1e-9);
  ShiftedSum problem(A, Eigen::VectorXd::Zero(d), lambda_prime, mu_hint);

  const auto cap = static_cast<int>(std::ceil(
      config.C *
      std::log(std::max(2.0, static_cast<double>(d) / config.eps))));

  TopEvResult result;
  result.lambda_prime = lambda_prime;
  SplitRng root(config.master_seed);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(d).normalized();
  for (int k = 0; k < cap; ++k) {
    problem.set_linear(x);
    fsm::AppConfig app;
    app.lambda = config.alpha * std::max(lambda1_est, 1e-9);
    app.c = config.c;
    app.delta = config.delta / cap;
    app.C = config.C;
    app.mode = config.mode;
    app.seed_probs_override = problem.seed_probs();
    app.master_seed = root.split(static_cast<std::uint64_t>(k)).key();
    const fsm::AppResult step = fsm::app_solve(problem, app);
    result.ledger.absorb(step.record.ledger);
    const double norm = step.x.norm();
    if (norm == 0) throw std::runtime_error("power iterate collapsed");
    x = step.x / norm;
    ++result.iterations;
  }
  result.x = x;
  result.rayleigh = rayleigh_quotient(A, x);
  return result;
}

}  // namespace reusevr::topev
