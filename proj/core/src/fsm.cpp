#include "reusevr/fsm.hpp"

#include <cmath>

#include "reusevr/alias.hpp"
#include <stdexcept>

namespace reusevr::fsm {

Eigen::MatrixXd FiniteSum::quad_hessian() const {
  throw std::logic_error("objective is not quadratic");
}

Eigen::VectorXd FiniteSum::quad_linear() const {
  throw std::logic_error("objective is not quadratic");
}

GlmProblem::GlmProblem(Eigen::MatrixXd A, Eigen::VectorXd y, double mu,
                       std::string link)
    : A_(std::move(A)), y_(std::move(y)), mu_(mu), link_(std::move(link)) {
  if (A_.rows() != y_.size()) throw std::invalid_argument("rows != labels");
  if (mu_ <= 0) throw std::invalid_argument("mu must be positive");
  if (link_ != "squared" && link_ != "logistic") {
    throw std::invalid_argument("unknown link: " + link_);
  }
  row_sq_.resize(A_.rows());
  double max_sq = 0;
  for (Eigen::Index i = 0; i < A_.rows(); ++i) {
    row_sq_[i] = A_.row(i).squaredNorm();
    max_sq = std::max(max_sq, row_sq_[i]);
  }
  // Logistic losses are (1/4)-smooth in the margin.
  const double scale = link_ == "squared" ? 1.0 : 0.25;
  smoothness_ = scale * max_sq + mu_;
}

Eigen::VectorXd GlmProblem::grad_component(int i,
                                           const Eigen::VectorXd& x) const {
  const double margin = A_.row(i).dot(x);
  double slope;
  if (link_ == "squared") {
    slope = margin - y_[i];
  } else {
    slope = -y_[i] / (1.0 + std::exp(y_[i] * margin));
  }
  return slope * A_.row(i).transpose() + mu_ * x;
}

Eigen::VectorXd GlmProblem::batch_grad(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd margins = A_ * x;
  Eigen::VectorXd slopes(margins.size());
  if (link_ == "squared") {
    slopes = margins - y_;
  } else {
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      slopes[i] = -y_[i] / (1.0 + std::exp(y_[i] * margins[i]));
    }
  }
  return A_.transpose() * slopes / static_cast<double>(A_.rows()) + mu_ * x;
}

double GlmProblem::component_smoothness(int i) const {
  const double scale = link_ == "squared" ? 1.0 : 0.25;
  return scale * row_sq_[i] + mu_;
}

double GlmProblem::value(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd margins = A_ * x;
  double total = 0;
  if (link_ == "squared") {
    total = 0.5 * (margins - y_).squaredNorm();
  } else {
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      total += std::log1p(std::exp(-y_[i] * margins[i]));
    }
  }
  return total / static_cast<double>(A_.rows()) + 0.5 * mu_ * x.squaredNorm();
}

Eigen::MatrixXd GlmProblem::quad_hessian() const {
  if (!is_quadratic()) return FiniteSum::quad_hessian();
  const auto n = static_cast<double>(A_.rows());
  Eigen::MatrixXd H = A_.transpose() * A_ / n;
  H.diagonal().array() += mu_;
  return H;
}

Eigen::VectorXd GlmProblem::quad_linear() const {
  if (!is_quadratic()) return FiniteSum::quad_linear();
  return A_.transpose() * y_ / static_cast<double>(A_.rows());
}

Eigen::VectorXd exact_subproblem(const FiniteSum& problem,
                                 const Eigen::VectorXd& center,
                                 double lambda) {
  Eigen::MatrixXd H = problem.quad_hessian();
  H.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = problem.quad_linear() + lambda * center;
  return H.ldlt().solve(rhs);
}

Eigen::VectorXd exact_minimizer(const FiniteSum& problem) {
  return problem.quad_hessian().ldlt().solve(problem.quad_linear());
}

Eigen::VectorXd reference_minimizer(const FiniteSum& problem,
                                    const Eigen::VectorXd& center,
                                    double lambda) {
  if (problem.is_quadratic()) {
    if (lambda == 0.0) return exact_minimizer(problem);
    return exact_subproblem(problem, center, lambda);
  }
  // Damped Newton with a numeric Hessian; desk-scale dimensions only.
  const int d = problem.dim();
  Eigen::VectorXd x = center.size() == d ? center : Eigen::VectorXd::Zero(d);
  auto grad = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd g = problem.batch_grad(z);
    if (lambda > 0) g += lambda * (z - center);
    return g;
  };
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd g = grad(x);
    if (g.lpNorm<Eigen::Infinity>() < 1e-13) break;
    Eigen::MatrixXd H(d, d);
    const double h = 1e-6;
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      H.col(j) = (grad(xp) - grad(xm)) / (2 * h);
    }
    H = 0.5 * (H + H.transpose());
    const Eigen::VectorXd step = H.ldlt().solve(g);
    double t = 1.0;
    auto val = [&](const Eigen::VectorXd& z) {
      double v = problem.value(z);
      if (lambda > 0) v += 0.5 * lambda * (z - center).squaredNorm();
      return v;
    };
    const double f0 = val(x);
    while (t > 1e-8 && val(x - t * step) > f0 - 1e-4 * t * g.dot(step)) {
      t *= 0.5;
    }
    x -= t * step;
  }
  return x;
}

std::size_t svrg_epoch_length(const FiniteSum& problem, double lambda) {
  if (lambda <= 0) throw std::invalid_argument("lambda must be positive");
  return static_cast<std::size_t>(
      std::ceil(16.0 * (problem.smoothness() + lambda) / lambda));
}

std::size_t svrg_epochs(double c, double delta) {
  const double target = std::max(c, 2.0) / std::min(delta, 0.5);
  return static_cast<std::size_t>(std::ceil(std::log2(target))) + 2;
}

SeedSpec uniform_seed_spec(const FiniteSum& problem, double lambda, double c,
                           double delta, double /*C*/) {
  SeedSpec spec;
  spec.probs.assign(problem.n(), 1.0 / problem.n());
  spec.length = svrg_epochs(c, delta) * svrg_epoch_length(problem, lambda);
  return spec;
}

SeedSpec nonuniform_seed_spec(const FiniteSum& problem, double lambda, double c,
                              double delta, double C) {
  SeedSpec spec;
  const int n = problem.n();
  spec.probs.resize(n);
  double total = 0;
  double root_sum = 0;
  const double mu = problem.strong_convexity();
  for (int i = 0; i < n; ++i) {
    const double li = problem.component_smoothness(i);
    spec.probs[i] = std::sqrt(li);
    total += spec.probs[i];
    root_sum += std::sqrt(li / (n * mu));
  }
  for (double& p : spec.probs) p /= total;
  const double logs =
      std::log(std::max(2.0, std::max(c, 2.0) * n / std::min(delta, 0.5)));
  const std::size_t base =
      static_cast<std::size_t>(std::ceil(C * root_sum * logs));
  // Round up to whole epochs so svrg consumes the seed exactly.
  const std::size_t m = svrg_epoch_length(problem, lambda);
  spec.length = std::max<std::size_t>(1, (base + m - 1) / m) * m;
  return spec;
}

Eigen::VectorXd svrg_subsolve(const FiniteSum& problem,
                              const Eigen::VectorXd& center,
                              const SvrgConfig& config,
                              const ObliviousSeed& seed, QueryLedger& ledger) {
  const double lambda = config.lambda;
  const std::size_t m = svrg_epoch_length(problem, lambda);
  if (seed.length < m) throw std::invalid_argument("seed shorter than epoch");
  const std::size_t epochs = seed.length / m;
  const double step = 1.0 / (8.0 * (problem.smoothness() + lambda));
  const int n = problem.n();

  // Importance weights for non-uniform seeds; estimator divides by n p_i.
  std::vector<double> inv_np;
  if (seed.dist_id != "uniform") {
    if (static_cast<int>(config.probs.size()) != n) {
      throw std::invalid_argument("non-uniform seed needs probabilities");
    }
    inv_np.resize(n);
    for (int i = 0; i < n; ++i) inv_np[i] = 1.0 / (n * config.probs[i]);
  }

  Eigen::VectorXd x = center;
  std::size_t slot = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    const Eigen::VectorXd anchor = x;
    ledger.charge_batch();
    const Eigen::VectorXd full = problem.batch_grad(anchor);
    Eigen::VectorXd running = Eigen::VectorXd::Zero(x.size());
    for (std::size_t k = 0; k < m; ++k, ++slot) {
      const int i = seed.at(slot);
      Eigen::VectorXd g =
          problem.grad_component(i, x) - problem.grad_component(i, anchor);
      if (!inv_np.empty()) g *= inv_np[i];
      g += full + lambda * (x - center);
      x -= step * g;
      running += x;
    }
    x = running / static_cast<double>(m);
  }
  return x;
}

Eigen::VectorXd svrg_hp_subsolve(const FiniteSum& problem,
                                 const Eigen::VectorXd& center,
                                 const SvrgConfig& config,
                                 const ObliviousSeed& seed,
                                 QueryLedger& ledger) {
  SvrgConfig tightened = config;
  const double mu = problem.strong_convexity();
  const double lam = config.lambda;
  // Relative gap target converting function gap to a squared-distance
  // bound via (mu + lambda)-strong convexity of the regularized objective.
  tightened.c =
      std::max(config.c * mu / 2.0, 2.0 * config.c / (mu + lam));
  return svrg_subsolve(problem, center, tightened, seed, ledger);
}

double robust_subsolver_c(const FiniteSum& problem, double c, double safety) {
  const double mu = problem.strong_convexity();
  const double L = problem.smoothness();
  const double d = problem.dim();
  return std::max(2.0 * d * c / L, c * mu / 2.0) * safety;
}

int app_n_outer(const FiniteSum& problem, const AppConfig& config) {
  if (config.n_outer_override > 0) return config.n_outer_override;
  const double mu = problem.strong_convexity();
  const double rho = (mu + 2.0 * config.lambda) / mu;
  const double delta = std::min(config.delta, 0.5);
  const double logs = std::log(std::max(2.0, config.c * rho / delta));
  return static_cast<int>(std::ceil(config.C * std::sqrt(rho) * logs));
}

Eigen::VectorXd app_extrapolate(const FiniteSum& problem, double lambda,
                                const Eigen::VectorXd& u) {
  const int d = problem.dim();
  const double mu = problem.strong_convexity();
  const double rho = (mu + 2.0 * lambda) / mu;
  const double q = 1.0 / std::sqrt(rho);
  const Eigen::VectorXd x = u.head(d);
  const Eigen::VectorXd v = u.tail(d);
  return (x + q * v) / (1.0 + q);
}

Eigen::VectorXd app_post_process(const FiniteSum& problem, double lambda,
                                 const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& u_half) {
  const int d = problem.dim();
  const double mu = problem.strong_convexity();
  const double rho = (mu + 2.0 * lambda) / mu;
  const double q = 1.0 / std::sqrt(rho);
  const double iota = 2.0 / mu + 1.0 / lambda;
  const Eigen::VectorXd y = app_extrapolate(problem, lambda, u);
  const Eigen::VectorXd v = u.tail(d);
  Eigen::VectorXd next(2 * d);
  next.head(d) = u_half;
  next.tail(d) = (1.0 - q) * v + q * (y - iota * lambda * (y - u_half));
  return next;
}

AppResult app_solve(const FiniteSum& problem, const AppConfig& config) {
  const int d = problem.dim();
  const double lambda = config.lambda;
  if (lambda < problem.strong_convexity()) {
    throw std::invalid_argument("lambda must be at least mu");
  }
  const double c_rob = robust_subsolver_c(problem, config.c, 4.0);
  const double eps = config.eps > 0 ? config.eps : config.delta;

  SvrgConfig sub_config;
  sub_config.lambda = lambda;
  sub_config.c = c_rob;
  sub_config.delta = config.delta;
  sub_config.C = config.C;

  SeedSpec spec =
      config.nonuniform_seed
          ? nonuniform_seed_spec(problem, lambda, c_rob, config.delta,
                                 config.C)
          : uniform_seed_spec(problem, lambda, c_rob, config.delta, config.C);
  std::string dist_id = config.nonuniform_seed ? "sqrtL" : "uniform";
  if (!config.seed_probs_override.empty()) {
    spec.probs = config.seed_probs_override;
    dist_id = "custom";
  }
  if (dist_id != "uniform") sub_config.probs = spec.probs;

  OuterConfig outer;
  outer.type = config.mode;
  outer.n_outer = app_n_outer(problem, config);
  outer.master_seed = config.master_seed;
  outer.noise.grid_mode = config.grid_noise;
  outer.noise.beta = config.beta;

  AppResult result;
  if (config.mode != OuterType::standard) {
    if (config.tau_override >= 0) {
      outer.noise.tau = config.tau_override;
      outer.noise.allow_zero_tau = config.tau_override == 0;
    } else {
      // eta bounds the sub-solver's l-infinity accuracy from the initial
      // gap estimate ||grad F(x0)||^2 / (2 mu); one batch query.
      const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
      const double g0 = problem.batch_grad(x0).squaredNorm();
      const double gap0 =
          std::max(g0 / (2.0 * problem.strong_convexity()), 1e-12);
      // The robustness condition is relative to the current sub-problem
      // gap, which shrinks to gap0 / c by the end of the run; a fixed
      // noise level must respect it there, so eta^2 = gap0 / (c * c_rob).
      const double eta = std::sqrt(gap0 / (config.c * c_rob));
      outer.noise.tau = pseudo_independence_tau(eta, eps);
    }
  }
  result.tau = outer.noise.tau;

  SubSolver sub;
  sub.draw_seed = [&problem, spec, dist_id](SplitRng& stream,
                                            QueryLedger& ledger) {
    ObliviousSeed seed;
    seed.dist_id = dist_id;
    seed.length = spec.length;
    seed.width = 1;
    seed.data.resize(spec.length);
    if (dist_id == "uniform") {
      const auto n = static_cast<std::int64_t>(problem.n());
      for (std::size_t t = 0; t < spec.length; ++t) {
        seed.data[t] = static_cast<std::int32_t>(stream.uniform_int(n));
      }
    } else {
      const AliasTable table(spec.probs);
      for (std::size_t t = 0; t < spec.length; ++t) {
        seed.data[t] = table.sample(stream);
      }
    }
    for (std::size_t t = 0; t < spec.length; ++t) {
      ledger.charge_sample(seed.data[t]);
    }
    return seed;
  };
  sub.solve = [&problem, &sub_config](const Eigen::VectorXd& u,
                                      const ObliviousSeed& seed, SplitRng&,
                                      QueryLedger& ledger) {
    const Eigen::VectorXd center =
        app_extrapolate(problem, sub_config.lambda, u);
    return svrg_hp_subsolve(problem, center, sub_config, seed, ledger);
  };

  PostProcess post = [&problem, lambda](const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& half,
                                        QueryLedger&) {
    return app_post_process(problem, lambda, u, half);
  };

  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(2 * d);
  result.record = run_outer(outer, u0, sub, post, last_iterate_weight());
  result.x = result.record.output.head(d);
  result.n_outer = outer.n_outer;
  result.seed_length = spec.length;
  return result;
}

}  // namespace reusevr::fsm
