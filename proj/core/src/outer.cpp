#include "reusevr/outer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace reusevr {

std::string to_string(OuterType type) {
  switch (type) {
    case OuterType::standard:
      return "standard";
    case OuterType::noisy:
      return "noisy";
    case OuterType::reuse:
      return "reuse";
  }
  throw std::logic_error("bad outer type");
}

OuterType outer_type_from_string(const std::string& s) {
  if (s == "standard") return OuterType::standard;
  if (s == "noisy") return OuterType::noisy;
  if (s == "reuse") return OuterType::reuse;
  throw std::invalid_argument("unknown mode: " + s);
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& v, const NoiseConfig& noise,
                          SplitRng& noise_stream) {
  if (noise.tau == 0.0) return v;
  Eigen::VectorXd out(v.size());
  if (!noise.grid_mode) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out[i] = v[i] + noise_stream.uniform(-noise.tau, noise.tau);
    }
    return out;
  }
  if (noise.beta <= 0.0 || noise.beta > noise.tau) {
    throw std::invalid_argument("grid noise needs 0 < beta <= tau");
  }
  // k grid steps fit inside tau on each side of the rounded point.
  const auto k = static_cast<std::int64_t>(std::floor(noise.tau / noise.beta));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double down = std::floor(v[i] / noise.beta) * noise.beta;
    const std::int64_t j = noise_stream.uniform_int(2 * k + 1) - k;
    out[i] = down + static_cast<double>(j) * noise.beta;
  }
  return out;
}

WeightFn last_iterate_weight() {
  return [](int t, int n_outer) { return t == n_outer ? 1.0 : 0.0; };
}

WeightFn uniform_weight() {
  return [](int, int n_outer) { return 1.0 / n_outer; };
}

namespace {

void validate(const OuterConfig& config) {
  if (config.n_outer < 1) throw std::invalid_argument("n_outer must be >= 1");
  const bool uses_noise = config.type != OuterType::standard;
  if (uses_noise && config.noise.tau == 0.0 && !config.noise.allow_zero_tau) {
    throw std::invalid_argument("noisy/reuse mode with tau == 0");
  }
}

}  // namespace

RunRecord run_outer(const OuterConfig& config, const Eigen::VectorXd& u0,
                    const SubSolver& sub, const PostProcess& post,
                    const WeightFn& weight) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();

  SplitRng root(config.master_seed);
  SplitRng seed_stream = root.split("oblivious");
  SplitRng chi_stream = root.split("adaptive");
  SplitRng noise_stream = root.split("noise");

  RunRecord rec;
  rec.config = config;
  const bool uses_noise = config.type != OuterType::standard;

  ObliviousSeed shared;
  if (config.type == OuterType::reuse) {
    shared = sub.draw_seed(seed_stream, rec.ledger);
    rec.seeds_drawn = 1;
  }

  Eigen::VectorXd u = u0;
  Eigen::VectorXd acc;
  for (int t = 1; t <= config.n_outer; ++t) {
    const ObliviousSeed* seed = &shared;
    ObliviousSeed fresh;
    if (config.type != OuterType::reuse) {
      fresh = sub.draw_seed(seed_stream, rec.ledger);
      ++rec.seeds_drawn;
      seed = &fresh;
    }
    Eigen::VectorXd half = sub.solve(u, *seed, chi_stream, rec.ledger);
    if (uses_noise) half = add_noise(half, config.noise, noise_stream);
    u = post(u, half, rec.ledger);
    rec.iterates.push_back(u);
    const double w = weight(t, config.n_outer);
    if (acc.size() == 0) {
      acc = w * u;
    } else {
      acc += w * u;
    }
  }
  rec.output = acc;
  rec.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

Eigen::VectorXd iterate_composition(const Eigen::VectorXd& u0, int depth,
                                    const SubSolver& sub,
                                    const PostProcess& post,
                                    const NoiseConfig& noise,
                                    const ObliviousSeed* fixed_seed,
                                    SplitRng& seed_stream, SplitRng& chi_stream,
                                    SplitRng& noise_stream,
                                    QueryLedger& ledger) {
  Eigen::VectorXd u = u0;
  for (int t = 0; t < depth; ++t) {
    ObliviousSeed fresh;
    const ObliviousSeed* seed = fixed_seed;
    if (seed == nullptr) {
      fresh = sub.draw_seed(seed_stream, ledger);
      seed = &fresh;
    }
    Eigen::VectorXd half = sub.solve(u, *seed, chi_stream, ledger);
    half = add_noise(half, noise, noise_stream);
    u = post(u, half, ledger);
  }
  return u;
}

double pseudo_independence_tau(double eta, double eps) {
  if (eta <= 0.0 || eps <= 0.0) {
    throw std::invalid_argument("eta and eps must be positive");
  }
  const double eta_prime = std::min(eta / 2.0, eta * eps);
  return eta_prime / (2.0 * eps);
}

}  // namespace reusevr
