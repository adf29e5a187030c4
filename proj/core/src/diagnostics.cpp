#include "reusevr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>

namespace reusevr::diagnostics {

namespace {

struct BinGrid {
  Eigen::VectorXd lo, hi;
  int dims = 0;
  int bins_per_dim = 0;

  int cell(const Eigen::VectorXd& x) const {
    int idx = 0;
    for (int d = 0; d < dims; ++d) {
      const double span = hi[d] - lo[d];
      int b = span > 0 ? static_cast<int>((x[d] - lo[d]) / span * bins_per_dim)
                       : 0;
      b = std::clamp(b, 0, bins_per_dim - 1);
      idx = idx * bins_per_dim + b;
    }
    return idx;
  }

  int total() const {
    int t = 1;
    for (int d = 0; d < dims; ++d) t *= bins_per_dim;
    return t;
  }
};

double binned_tv(const std::vector<int>& cells_a,
                 const std::vector<int>& cells_b, int total) {
  std::vector<double> pa(total, 0.0), pb(total, 0.0);
  for (const int c : cells_a) pa[c] += 1.0 / cells_a.size();
  for (const int c : cells_b) pb[c] += 1.0 / cells_b.size();
  double tv = 0;
  for (int c = 0; c < total; ++c) tv += std::abs(pa[c] - pb[c]);
  return 0.5 * tv;
}

}  // namespace

TvEstimate tv_estimate(const std::vector<Eigen::VectorXd>& a,
                       const std::vector<Eigen::VectorXd>& b,
                       int bins_per_dim, int bootstrap, double confidence,
                       std::uint64_t bootstrap_seed) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample set");
  const int dims = static_cast<int>(a.front().size());
  if (dims < 1 || dims > 2) {
    throw std::invalid_argument("tv_estimate supports 1 or 2 dimensions");
  }

  BinGrid grid;
  grid.dims = dims;
  grid.bins_per_dim = bins_per_dim;
  grid.lo = a.front();
  grid.hi = a.front();
  for (const auto* set : {&a, &b}) {
    for (const auto& x : *set) {
      grid.lo = grid.lo.cwiseMin(x);
      grid.hi = grid.hi.cwiseMax(x);
    }
  }

  std::vector<int> ca(a.size()), cb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ca[i] = grid.cell(a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) cb[i] = grid.cell(b[i]);

  TvEstimate est;
  est.bins = grid.total();
  est.tv = binned_tv(ca, cb, grid.total());
  est.lo = est.tv;
  est.hi = est.tv;
  if (bootstrap > 0) {
    SplitRng rng(bootstrap_seed);
    std::vector<double> reps(bootstrap);
    std::vector<int> ra(ca.size()), rb(cb.size());
    for (int r = 0; r < bootstrap; ++r) {
      for (std::size_t i = 0; i < ca.size(); ++i) {
        ra[i] = ca[rng.uniform_int(static_cast<std::int64_t>(ca.size()))];
      }
      for (std::size_t i = 0; i < cb.size(); ++i) {
        rb[i] = cb[rng.uniform_int(static_cast<std::int64_t>(cb.size()))];
      }
      reps[r] = binned_tv(ra, rb, grid.total());
    }
    std::sort(reps.begin(), reps.end());
    const double tail = (1.0 - confidence) / 2.0;
    const auto pick = [&](double q) {
      const auto idx = static_cast<std::size_t>(
          std::clamp(q * (bootstrap - 1), 0.0, bootstrap - 1.0));
      return reps[idx];
    };
    est.lo = pick(tail);
    est.hi = pick(1.0 - tail);
  }
  return est;
}

ProbeReport pseudoindependence_probe(
    const std::function<ObliviousSeed(SplitRng&)>& draw_seed,
    const std::function<Eigen::VectorXd(const ObliviousSeed&, SplitRng&)>&
        solve,
    const Eigen::VectorXd& reference, const NoiseConfig& noise,
    const ProbeConfig& config) {
  SplitRng root(config.master_seed);
  SplitRng seed_stream = root.split("probe-seeds");
  SplitRng chi_stream = root.split("probe-chi");
  SplitRng noise_stream = root.split("probe-noise");
  SplitRng boot_stream = root.split("probe-boot");

  ProbeReport report;
  report.threshold = config.delta + config.eps;
  int failures = 0;
  for (int k = 0; k < config.num_seeds; ++k) {
    const ObliviousSeed seed = draw_seed(seed_stream);
    std::vector<Eigen::VectorXd> fixed, ref;
    fixed.reserve(config.draws_per_seed);
    ref.reserve(config.draws_per_seed);
    for (int m = 0; m < config.draws_per_seed; ++m) {
      const Eigen::VectorXd out = solve(seed, chi_stream);
      fixed.push_back(add_noise(out, noise, noise_stream));
      ref.push_back(add_noise(reference, noise, noise_stream));
    }
    const TvEstimate est =
        tv_estimate(fixed, ref, config.bins_per_dim, config.bootstrap, 0.9,
                    boot_stream.next_u64());
    report.tv_per_seed.push_back(est.tv);
    report.half_width_per_seed.push_back(0.5 * (est.hi - est.lo));
    if (est.tv > report.threshold) ++failures;
  }
  report.fail_fraction =
      static_cast<double>(failures) / std::max(config.num_seeds, 1);
  return report;
}

CompositionReport composition_probe(
    const Eigen::VectorXd& u0, int depth, const SubSolver& sub,
    const PostProcess& post, const NoiseConfig& noise, double delta,
    double eps, int trials, int bins_per_dim, std::uint64_t master_seed) {
  SplitRng root(master_seed);
  SplitRng fixed_stream = root.split("fixed-seed");
  SplitRng seed_stream = root.split("fresh-seeds");
  SplitRng chi_stream = root.split("chi");
  SplitRng noise_stream = root.split("noise");

  QueryLedger scratch;
  std::vector<Eigen::VectorXd> fresh_out, fixed_out;
  fresh_out.reserve(trials);
  fixed_out.reserve(trials);
  for (int m = 0; m < trials; ++m) {
    fresh_out.push_back(iterate_composition(u0, depth, sub, post, noise,
                                            nullptr, seed_stream, chi_stream,
                                            noise_stream, scratch));
    // The shared seed is itself random: redraw it per composition so the
    // compared distributions both integrate over the seed draw.
    const ObliviousSeed fixed = sub.draw_seed(fixed_stream, scratch);
    fixed_out.push_back(iterate_composition(u0, depth, sub, post, noise,
                                            &fixed, seed_stream, chi_stream,
                                            noise_stream, scratch));
  }

  CompositionReport report;
  report.depth = depth;
  report.bound = 2.0 * depth * (delta + eps);
  report.estimate = tv_estimate(fresh_out, fixed_out, bins_per_dim, 200, 0.9,
                                root.split("boot").next_u64());
  return report;
}

double clopper_pearson_lcb(int successes, int trials, double confidence) {
  if (trials <= 0 || successes < 0 || successes > trials) {
    throw std::invalid_argument("bad success counts");
  }
  if (successes == 0) return 0.0;
  const boost::math::beta_distribution<double> dist(
      successes, trials - successes + 1);
  return boost::math::quantile(dist, 1.0 - confidence);
}

SuccessReport success_harness(
    int trials, double confidence,
    const std::function<std::pair<bool, double>(int, std::uint64_t)>& runner,
    std::uint64_t master_seed) {
  SplitRng root(master_seed);
  SplitRng trial_stream = root.split("trials");
  SuccessReport report;
  report.trials = trials;
  double err_sum = 0;
  for (int t = 0; t < trials; ++t) {
    const auto [ok, err] = runner(t, trial_stream.next_u64());
    if (ok) ++report.successes;
    err_sum += err;
  }
  report.mean_err = trials > 0 ? err_sum / trials : 0.0;
  report.lcb = clopper_pearson_lcb(report.successes, trials, confidence);
  return report;
}

}  // namespace reusevr::diagnostics
