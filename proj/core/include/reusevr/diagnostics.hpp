#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reusevr/outer.hpp"
#include "reusevr/rng.hpp"

namespace reusevr::diagnostics {

struct TvEstimate {
  double tv = 0.0;
  double lo = 0.0;   // bootstrap interval, lower
  double hi = 0.0;   // bootstrap interval, upper
  int bins = 0;
};

// Plug-in binned total-variation estimate between two sample sets in R^p,
// p <= 2, on a shared bounding box with bins_per_dim cells per axis.  The
// plug-in estimator is biased upward at finite sample sizes, so treat the
// point estimate as an upper-leaning figure; the bootstrap interval is a
// percentile interval, not an exact one.
TvEstimate tv_estimate(const std::vector<Eigen::VectorXd>& a,
                       const std::vector<Eigen::VectorXd>& b,
                       int bins_per_dim = 100, int bootstrap = 200,
                       double confidence = 0.9,
                       std::uint64_t bootstrap_seed = 0);

struct ProbeConfig {
  int num_seeds = 50;
  int draws_per_seed = 2000;
  double delta = 0.05;
  double eps = 0.05;
  // The plug-in estimator's bias for identical distributions is about
  // sqrt(bins / (pi * draws)); 12 bins at 2000 draws keeps it near 0.04,
  // below the eps-level differences the probe must detect.
  int bins_per_dim = 12;
  int bootstrap = 60;  // resamples for the per-seed interval
  std::uint64_t master_seed = 0;
};

struct ProbeReport {
  std::vector<double> tv_per_seed;
  std::vector<double> half_width_per_seed;  // bootstrap interval half-width
  double threshold = 0.0;      // delta + eps
  double fail_fraction = 0.0;  // seeds whose TV exceeds the threshold
};

// For each realized seed, compares the noisy solver's output distribution
// (fixed seed, fresh noise) against the reference point plus the same
// noise, and estimates the per-seed total variation.
ProbeReport pseudoindependence_probe(
    const std::function<ObliviousSeed(SplitRng&)>& draw_seed,
    const std::function<Eigen::VectorXd(const ObliviousSeed&, SplitRng&)>&
        solve,
    const Eigen::VectorXd& reference, const NoiseConfig& noise,
    const ProbeConfig& config);

struct CompositionReport {
  TvEstimate estimate;
  double bound = 0.0;  // 2 * depth * (delta + eps)
  int depth = 0;
};

// Estimates the total variation between depth-fold compositions run with
// fresh seeds versus one fixed realized seed (fresh noise in both), and
// reports it against the 2 T (delta + eps) budget.
CompositionReport composition_probe(
    const Eigen::VectorXd& u0, int depth, const SubSolver& sub,
    const PostProcess& post, const NoiseConfig& noise, double delta,
    double eps, int trials, int bins_per_dim, std::uint64_t master_seed);

double clopper_pearson_lcb(int successes, int trials, double confidence);

struct SuccessReport {
  int trials = 0;
  int successes = 0;
  double lcb = 0.0;       // exact binomial lower confidence bound
  double mean_err = 0.0;  // average of the runner's error figure
};

// Repeats a randomized run; the runner returns (success, error_value) for
// the given trial seed.
SuccessReport success_harness(
    int trials, double confidence,
    const std::function<std::pair<bool, double>(int, std::uint64_t)>& runner,
    std::uint64_t master_seed);

}  // namespace reusevr::diagnostics
