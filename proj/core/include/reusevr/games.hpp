#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "reusevr/ledger.hpp"
#include "reusevr/outer.hpp"

namespace reusevr::games {

enum class Domain { ball_ball, ball_simplex };

// Composite term from the restricted family with closed-form best
// responses: zero, linear <b, .>, quadratic (coef/2)||.||^2, or scaled
// negative entropy coef * sum z log z (simplex factor only).
struct Composite {
  std::string kind = "zero";  // zero | linear | quadratic | entropy
  Eigen::VectorXd b;
  double coef = 0.0;

  double value(const Eigen::VectorXd& z) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& z) const;
};

// min_x max_y  y^T A x + phi(x) - psi(y),  x in the unit l2 ball and y in
// the unit ball (ball_ball) or the probability simplex (ball_simplex).
struct MatrixGame {
  Eigen::MatrixXd A;  // rows indexed by y, columns by x
  Domain domain = Domain::ball_ball;
  Composite phi, psi;

  int dx() const { return static_cast<int>(A.cols()); }
  int dy() const { return static_cast<int>(A.rows()); }
  int dim() const { return dx() + dy(); }
};

struct SetupConstants {
  double L = 0.0;      // operator smoothness bound
  double G = 0.0;      // sampled-estimate scale bound
  double D = 1.0;      // domain diameter
  double c_dom = 1.0;  // lower domain constant
  double C_dom = 1.0;  // upper domain constant
  double theta = 0.0;  // range of the distance-generating function
};

SetupConstants setup_constants(const MatrixGame& game);

Eigen::VectorXd project_ball(const Eigen::VectorXd& z);
Eigen::VectorXd project_simplex(const Eigen::VectorXd& z);
Eigen::VectorXd project(const MatrixGame& game, const Eigen::VectorXd& z);

// Distance-generating function: squared norm on ball factors, negative
// entropy on the simplex factor.
double dgf_value(const MatrixGame& game, const Eigen::VectorXd& z);

// argmin_w <g, w> + alpha * V_anchor(w), blockwise over the two factors.
Eigen::VectorXd prox_step(const MatrixGame& game, const Eigen::VectorXd& anchor,
                          const Eigen::VectorXd& g, double alpha);

// Monotone operator (A^T y + grad phi(x), -A x + grad psi(y)); one batch
// query against the matrix.
Eigen::VectorXd gradient_mapping(const MatrixGame& game,
                                 const Eigen::VectorXd& z,
                                 QueryLedger& ledger);

// Exact primal-dual gap max_y f(x, y) - min_x f(x, y) via closed-form best
// responses; measurement only, not charged to any ledger.
double duality_gap(const MatrixGame& game, const Eigen::VectorXd& z);

// Sampling distributions over matrix coordinates.
Eigen::VectorXd entry_dist(const MatrixGame& game, int row);
Eigen::VectorXd row_dist(const MatrixGame& game);
Eigen::VectorXd col_dist(const MatrixGame& game);

struct InnerPlan {
  std::size_t epochs = 0;
  std::size_t steps_per_epoch = 0;
  std::size_t slots = 0;
};

struct InnerConfig {
  double alpha = 1.0;
  double eps = 1e-3;     // l-infinity accuracy on the proximal point
  double inner_c = 32.0; // steps-per-epoch scale
};

InnerPlan vrmd_plan(const MatrixGame& game, const InnerConfig& config);

// Oblivious seed for the ball_ball solver: one (row, col) pair per slot,
// rows from row_dist and columns from col_dist.
ObliviousSeed draw_rowcol_seed(const MatrixGame& game, std::size_t slots,
                               SplitRng& stream, QueryLedger& ledger);

// Oblivious seed for the ball_simplex solver: one column index per matrix
// row per slot, row i drawn from entry_dist(i).
ObliviousSeed draw_entry_seed(const MatrixGame& game, std::size_t slots,
                              SplitRng& stream, QueryLedger& ledger);

// Variance-reduced stochastic prox iterations for the alpha-regularized
// problem anchored at center; ball_ball geometry, row/column estimator,
// zero entry queries.
Eigen::VectorXd vrmd2_subsolve(const MatrixGame& game,
                               const Eigen::VectorXd& center,
                               const InnerConfig& config,
                               const ObliviousSeed& seed, QueryLedger& ledger);

// ball_simplex variant: oblivious entry draws feed the simplex block, the
// ball block pays adaptive row queries sampled from |y - y_anchor|.
Eigen::VectorXd vrmd1_subsolve(const MatrixGame& game,
                               const Eigen::VectorXd& center,
                               const InnerConfig& config,
                               const ObliviousSeed& seed, SplitRng& chi,
                               QueryLedger& ledger);

struct CppConfig {
  double eps = 0.1;
  double alpha = -1.0;  // < 0 selects ||A||_F^(2/3) eps^(1/3)
  double delta = 0.05;
  double pi_eps = -1.0;
  double C = 1.0;
  double inner_c = 32.0;
  OuterType mode = OuterType::standard;
  int n_outer_override = 0;
  std::uint64_t master_seed = 0;
};

struct CppResult {
  Eigen::VectorXd z;
  double gap = 0.0;
  RunRecord record;
  int n_outer = 0;
  double alpha = 0.0;
  double eps_prime = 0.0;
  double tau = 0.0;
  std::size_t slots = 0;
};

double cpp_eps_prime(const MatrixGame& game, double eps);
int cpp_n_outer(const MatrixGame& game, const CppConfig& config, double alpha);

// Conceptual prox-point outer loop with uniform output weights.
CppResult cpp_solve(const MatrixGame& game, const CppConfig& config);

}  // namespace reusevr::games
