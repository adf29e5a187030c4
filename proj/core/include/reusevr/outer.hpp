#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reusevr/ledger.hpp"
#include "reusevr/rng.hpp"
#include "reusevr/seed.hpp"

namespace reusevr {

enum class OuterType { standard, noisy, reuse };

std::string to_string(OuterType type);
OuterType outer_type_from_string(const std::string& s);

// Noise map applied to intermediate iterates in noisy and reuse modes.
// Continuous: coordinatewise Unif(-tau, tau).  Grid: round down onto the
// beta-spaced grid, then move to a uniformly random grid point within
// l-infinity distance tau; requires 0 < beta <= tau.
struct NoiseConfig {
  double tau = 0.0;
  bool grid_mode = false;
  double beta = 0.0;
  bool allow_zero_tau = false;
};

struct OuterConfig {
  OuterType type = OuterType::standard;
  int n_outer = 1;
  NoiseConfig noise;
  std::uint64_t master_seed = 0;
};

// Sub-solver plugged into the outer loop.  draw_seed realizes an oblivious
// sample sequence (charging the ledger at draw time); solve maps the
// current iterate to the next intermediate point using only the seed's
// records for sample access plus the adaptive stream chi.
struct SubSolver {
  std::function<ObliviousSeed(SplitRng& seed_stream, QueryLedger&)> draw_seed;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& u,
                                const ObliviousSeed& seed, SplitRng& chi,
                                QueryLedger&)>
      solve;
};

// Deterministic post-process zeta(u_prev, u_half) -> u_next; may spend
// batch queries (e.g. a gradient evaluation at the projected point).
using PostProcess = std::function<Eigen::VectorXd(
    const Eigen::VectorXd&, const Eigen::VectorXd&, QueryLedger&)>;

// Output weight w(t) for 1-based t; the loop returns sum_t w(t) u_t.
using WeightFn = std::function<double(int t, int n_outer)>;

struct RunRecord {
  OuterConfig config;
  std::vector<Eigen::VectorXd> iterates;
  Eigen::VectorXd output;
  QueryLedger ledger;
  int seeds_drawn = 0;
  double wall_time_sec = 0.0;
};

Eigen::VectorXd add_noise(const Eigen::VectorXd& v, const NoiseConfig& noise,
                          SplitRng& noise_stream);

WeightFn last_iterate_weight();
WeightFn uniform_weight();

// Runs the meta-loop.  Standard: fresh seed each iteration, no noise.
// Noisy: fresh seed each iteration, noise on the intermediate point.
// Reuse: one seed drawn up front and replayed, noise on the intermediate
// point.  Throws std::invalid_argument on n_outer < 1 or on a noise-using
// mode with tau == 0 unless allow_zero_tau is set.
RunRecord run_outer(const OuterConfig& config, const Eigen::VectorXd& u0,
                    const SubSolver& sub, const PostProcess& post,
                    const WeightFn& weight);

// Iterated map Phi^T(u0) = zeta(., noisy-sub(.)) applied T times, with
// either a fresh seed per application or one fixed realized seed.  Used by
// the composition diagnostics.
Eigen::VectorXd iterate_composition(const Eigen::VectorXd& u0, int depth,
                                    const SubSolver& sub,
                                    const PostProcess& post,
                                    const NoiseConfig& noise,
                                    const ObliviousSeed* fixed_seed,
                                    SplitRng& seed_stream, SplitRng& chi_stream,
                                    SplitRng& noise_stream,
                                    QueryLedger& ledger);

// Pseudo-independence schedule: eta_prime = min(eta/2, eta*eps),
// tau = eta_prime / (2*eps).
double pseudo_independence_tau(double eta, double eps);

}  // namespace reusevr
