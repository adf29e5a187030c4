#include <cmath>

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include "reusevr/rng.hpp"
#include "reusevr/topev.hpp"

using reusevr::OuterType;
using reusevr::SplitRng;
namespace topev = reusevr::topev;

namespace {

// Matrix with a planted covariance spectrum: top eigenvalue 1, second at
// 1 - gap, embedded in an m x d factor.
Eigen::MatrixXd planted_matrix(int m, int d, double gap, std::uint64_t seed) {
  SplitRng rng(seed);
  Eigen::MatrixXd raw(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) raw(i, j) = rng.uniform(-1.0, 1.0);
  }
  const Eigen::MatrixXd Q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ();
  Eigen::VectorXd evs(d);
  evs(0) = 1.0;
  for (int k = 1; k < d; ++k) evs(k) = (1.0 - gap) * rng.uniform(0.3, 1.0);
  const Eigen::MatrixXd sqrtC =
      Q * evs.cwiseSqrt().asDiagonal() * Q.transpose();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, d);
  B.topRows(d) = sqrtC;
  Eigen::MatrixXd rot(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) rot(i, j) = rng.uniform(-1.0, 1.0);
  }
  const Eigen::MatrixXd R =
      Eigen::HouseholderQR<Eigen::MatrixXd>(rot).householderQ();
  return R * B;
}

}  // namespace

TEST_CASE("shifted finite sum reproduces its closed form") {
  const Eigen::MatrixXd A = planted_matrix(10, 4, 0.3, 3);
  const double lambda_prime = 1.5;
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(4);
  const topev::ShiftedSum sum =
      topev::build_shifted_sum(A, b, lambda_prime, 0.1);

  SplitRng rng(5);
  Eigen::VectorXd x(4);
  for (int k = 0; k < 4; ++k) x(k) = rng.uniform(-1.0, 1.0);

  const Eigen::MatrixXd H =
      lambda_prime * Eigen::MatrixXd::Identity(4, 4) - A.transpose() * A;
  const double expected = 0.5 * x.dot(H * x) - b.dot(x);
  CHECK(sum.value(x) == doctest::Approx(expected).epsilon(1e-10));
  CHECK((sum.batch_grad(x) - (H * x - b)).norm() < 1e-10);

  // The average of component gradients is the batch gradient.
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < sum.n(); ++i) avg += sum.grad_component(i, x);
  avg /= sum.n();
  CHECK((avg - sum.batch_grad(x)).norm() < 1e-9);

  // Seed probabilities follow squared row norms.
  const auto probs = sum.seed_probs();
  const double frob2 = A.squaredNorm();
  for (int i = 0; i < sum.n(); ++i) {
    CHECK(probs[i] ==
          doctest::Approx(A.row(i).squaredNorm() / frob2).epsilon(1e-12));
  }
}

TEST_CASE("power-method estimate brackets the top eigenvalue") {
  const Eigen::MatrixXd A = planted_matrix(12, 5, 0.3, 7);
  const double lambda1 =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A.transpose() * A)
          .eigenvalues()
          .maxCoeff();
  const double est = topev::estimate_lambda1(A);
  CHECK(est == doctest::Approx(lambda1).epsilon(1e-6));
}

TEST_CASE("rayleigh quotient is exact on eigenvectors") {
  const Eigen::MatrixXd A = planted_matrix(12, 5, 0.3, 9);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A.transpose() * A);
  const int top = 4;  // eigenvalues ascend
  const Eigen::VectorXd v = eig.eigenvectors().col(top);
  CHECK(topev::rayleigh_quotient(A, v) ==
        doctest::Approx(eig.eigenvalues()(top)).epsilon(1e-12));
}

TEST_CASE("shift-invert solve reaches the planted top eigenvalue") {
  const Eigen::MatrixXd A = planted_matrix(20, 8, 0.3, 11);
  const double lambda1 =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A.transpose() * A)
          .eigenvalues()
          .maxCoeff();
  for (const OuterType mode : {OuterType::standard, OuterType::reuse}) {
    topev::TopEvConfig config;
    config.eps = 0.05;
    config.mode = mode;
    config.master_seed = 13;
    const topev::TopEvResult res = topev::shift_invert_solve(A, config);
    CHECK(res.rayleigh >= (1.0 - config.eps) * lambda1);
    CHECK(std::abs(res.x.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("reuse mode cuts topev sample draws") {
  const Eigen::MatrixXd A = planted_matrix(20, 8, 0.3, 17);
  topev::TopEvConfig config;
  config.eps = 0.05;
  config.master_seed = 19;

  config.mode = OuterType::standard;
  const topev::TopEvResult std_res = topev::shift_invert_solve(A, config);
  config.mode = OuterType::reuse;
  const topev::TopEvResult reuse_res = topev::shift_invert_solve(A, config);
  CHECK(reuse_res.ledger.sample() * 4 < std_res.ledger.sample());
}
