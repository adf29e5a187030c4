#include "reusevr/games.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "reusevr/alias.hpp"

namespace reusevr::games {

namespace {

constexpr double kSimplexFloor = 1e-12;

std::int64_t entry_key(const MatrixGame& game, int i, int j) {
  return static_cast<std::int64_t>(i) * game.dx() + j;
}

std::int64_t row_key(int i) { return 1000000000LL + i; }
std::int64_t col_key(int j) { return 2000000000LL + j; }

double spectral_norm(const Eigen::MatrixXd& A) {
  return A.jacobiSvd().singularValues()(0);
}

}  // namespace

double Composite::value(const Eigen::VectorXd& z) const {
  if (kind == "zero") return 0.0;
  if (kind == "linear") return b.dot(z);
  if (kind == "quadratic") return 0.5 * coef * z.squaredNorm();
  if (kind == "entropy") {
    double total = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double zi = std::max(z[i], kSimplexFloor);
      total += zi * std::log(zi);
    }
    return coef * total;
  }
  throw std::invalid_argument("unknown composite kind: " + kind);
}

Eigen::VectorXd Composite::grad(const Eigen::VectorXd& z) const {
  if (kind == "zero") return Eigen::VectorXd::Zero(z.size());
  if (kind == "linear") return b;
  if (kind == "quadratic") return coef * z;
  if (kind == "entropy") {
    Eigen::VectorXd g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      g[i] = coef * (std::log(std::max(z[i], kSimplexFloor)) + 1.0);
    }
    return g;
  }
  throw std::invalid_argument("unknown composite kind: " + kind);
}

SetupConstants setup_constants(const MatrixGame& game) {
  SetupConstants k;
  k.D = 1.0;
  k.c_dom = 1.0;
  if (game.domain == Domain::ball_ball) {
    k.L = spectral_norm(game.A);
    k.G = k.L;
    k.C_dom = game.dim();
    k.theta = 1.0;
  } else {
    double max_row = 0;
    double max_abs = 0;
    for (int i = 0; i < game.dy(); ++i) {
      max_row = std::max(max_row, game.A.row(i).norm());
      max_abs = std::max(max_abs, game.A.row(i).cwiseAbs().maxCoeff());
    }
    k.L = max_row;
    k.G = max_abs;
    k.C_dom = static_cast<double>(game.dim()) * game.dim();
    k.theta = 0.5 + std::log(static_cast<double>(game.dy()));
  }
  return k;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& z) {
  const double norm = z.norm();
  return norm > 1.0 ? Eigen::VectorXd(z / norm) : z;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size();
  std::vector<double> sorted(z.data(), z.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0;
  double theta = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += sorted[k];
    const double cand = (cum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - cand > 0) theta = cand;
  }
  Eigen::VectorXd out = (z.array() - theta).cwiseMax(0.0);
  out /= out.sum();
  return out;
}

Eigen::VectorXd project(const MatrixGame& game, const Eigen::VectorXd& z) {
  Eigen::VectorXd out(z.size());
  out.head(game.dx()) = project_ball(z.head(game.dx()));
  if (game.domain == Domain::ball_ball) {
    out.tail(game.dy()) = project_ball(z.tail(game.dy()));
  } else {
    out.tail(game.dy()) = project_simplex(z.tail(game.dy()));
  }
  return out;
}

double dgf_value(const MatrixGame& game, const Eigen::VectorXd& z) {
  double total = 0.5 * z.head(game.dx()).squaredNorm();
  if (game.domain == Domain::ball_ball) {
    total += 0.5 * z.tail(game.dy()).squaredNorm();
  } else {
    for (int i = 0; i < game.dy(); ++i) {
      const double yi = std::max(z[game.dx() + i], kSimplexFloor);
      total += yi * std::log(yi);
    }
  }
  return total;
}

Eigen::VectorXd prox_step(const MatrixGame& game, const Eigen::VectorXd& anchor,
                          const Eigen::VectorXd& g, double alpha) {
  Eigen::VectorXd out(anchor.size());
  out.head(game.dx()) =
      project_ball(anchor.head(game.dx()) - g.head(game.dx()) / alpha);
  if (game.domain == Domain::ball_ball) {
    out.tail(game.dy()) =
        project_ball(anchor.tail(game.dy()) - g.tail(game.dy()) / alpha);
    return out;
  }
  Eigen::VectorXd y(game.dy());
  double max_log = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.dy(); ++i) {
    y[i] = std::log(std::max(anchor[game.dx() + i], kSimplexFloor)) -
           g[game.dx() + i] / alpha;
    max_log = std::max(max_log, y[i]);
  }
  y = (y.array() - max_log).exp();
  y /= y.sum();
  y = y.cwiseMax(kSimplexFloor);
  y /= y.sum();
  out.tail(game.dy()) = y;
  return out;
}

Eigen::VectorXd gradient_mapping(const MatrixGame& game,
                                 const Eigen::VectorXd& z,
                                 QueryLedger& ledger) {
  ledger.charge_batch();
  const Eigen::VectorXd x = z.head(game.dx());
  const Eigen::VectorXd y = z.tail(game.dy());
  Eigen::VectorXd g(z.size());
  g.head(game.dx()) = game.A.transpose() * y + game.phi.grad(x);
  g.tail(game.dy()) = -game.A * x + game.psi.grad(y);
  return g;
}

namespace {

// max_y <c, y> - psi(y) over the y factor.
double best_response_y(const MatrixGame& game, const Eigen::VectorXd& c) {
  const Composite& psi = game.psi;
  if (game.domain == Domain::ball_ball) {
    Eigen::VectorXd shifted = c;
    if (psi.kind == "linear") shifted -= psi.b;
    if (psi.kind == "zero" || psi.kind == "linear") return shifted.norm();
    if (psi.kind == "quadratic") {
      const double norm = shifted.norm();
      if (norm <= psi.coef) return 0.5 * norm * norm / psi.coef;
      return norm - 0.5 * psi.coef;
    }
  } else {
    Eigen::VectorXd shifted = c;
    if (psi.kind == "linear") shifted -= psi.b;
    if (psi.kind == "zero" || psi.kind == "linear") return shifted.maxCoeff();
    if (psi.kind == "entropy") {
      const double m = shifted.maxCoeff();
      return m + psi.coef *
                     std::log(((shifted.array() - m) / psi.coef).exp().sum());
    }
  }
  throw std::invalid_argument("unsupported psi kind: " + psi.kind);
}

// min_x <c, x> + phi(x) over the unit ball.
double best_response_x(const MatrixGame& game, const Eigen::VectorXd& c) {
  const Composite& phi = game.phi;
  Eigen::VectorXd shifted = c;
  if (phi.kind == "linear") shifted += phi.b;
  if (phi.kind == "zero" || phi.kind == "linear") return -shifted.norm();
  if (phi.kind == "quadratic") {
    const double norm = shifted.norm();
    const double r = std::min(1.0, norm / phi.coef);
    return -norm * r + 0.5 * phi.coef * r * r;
  }
  throw std::invalid_argument("unsupported phi kind: " + phi.kind);
}

}  // namespace

double duality_gap(const MatrixGame& game, const Eigen::VectorXd& z) {
  const Eigen::VectorXd x = z.head(game.dx());
  const Eigen::VectorXd y = z.tail(game.dy());
  const double upper = game.phi.value(x) + best_response_y(game, game.A * x);
  const double lower =
      -game.psi.value(y) + best_response_x(game, game.A.transpose() * y);
  return upper - lower;
}

Eigen::VectorXd entry_dist(const MatrixGame& game, int row) {
  Eigen::VectorXd w = game.A.row(row).cwiseAbs2();
  const double total = w.sum();
  if (total <= 0) throw std::invalid_argument("zero matrix row");
  return w / total;
}

Eigen::VectorXd row_dist(const MatrixGame& game) {
  Eigen::VectorXd w = game.A.rowwise().squaredNorm();
  return w / w.sum();
}

Eigen::VectorXd col_dist(const MatrixGame& game) {
  Eigen::VectorXd w = game.A.colwise().squaredNorm();
  return w / w.sum();
}

InnerPlan vrmd_plan(const MatrixGame& game, const InnerConfig& config) {
  InnerPlan plan;
  const double frob2 = game.A.squaredNorm();
  const double ratio = std::max(1.0, frob2 / (config.alpha * config.alpha));
  plan.steps_per_epoch =
      static_cast<std::size_t>(std::ceil(config.inner_c * ratio));
  plan.epochs = static_cast<std::size_t>(std::ceil(
                    std::log2(std::max(2.0, 4.0 / config.eps)))) +
                1;
  plan.slots = plan.epochs * plan.steps_per_epoch;
  return plan;
}

ObliviousSeed draw_rowcol_seed(const MatrixGame& game, std::size_t slots,
                               SplitRng& stream, QueryLedger& ledger) {
  const Eigen::VectorXd rd = row_dist(game);
  const Eigen::VectorXd cd = col_dist(game);
  const AliasTable rows(std::vector<double>(rd.data(), rd.data() + game.dy()));
  const AliasTable cols(std::vector<double>(cd.data(), cd.data() + game.dx()));
  ObliviousSeed seed;
  seed.dist_id = "rowcol";
  seed.length = slots;
  seed.width = 2;
  seed.data.resize(2 * slots);
  for (std::size_t t = 0; t < slots; ++t) {
    const std::int32_t i = rows.sample(stream);
    const std::int32_t j = cols.sample(stream);
    seed.data[2 * t] = i;
    seed.data[2 * t + 1] = j;
    ledger.charge_sample(row_key(i));
    ledger.charge_sample(col_key(j));
    ledger.charge_channel("oblivious_rowcol", 2);
  }
  return seed;
}

ObliviousSeed draw_entry_seed(const MatrixGame& game, std::size_t slots,
                              SplitRng& stream, QueryLedger& ledger) {
  std::vector<AliasTable> tables;
  tables.reserve(game.dy());
  for (int i = 0; i < game.dy(); ++i) {
    const Eigen::VectorXd d = entry_dist(game, i);
    tables.emplace_back(std::vector<double>(d.data(), d.data() + d.size()));
  }
  ObliviousSeed seed;
  seed.dist_id = "entry";
  seed.length = slots;
  seed.width = static_cast<std::size_t>(game.dy());
  seed.data.resize(slots * seed.width);
  for (std::size_t t = 0; t < slots; ++t) {
    for (int i = 0; i < game.dy(); ++i) {
      const std::int32_t j = tables[i].sample(stream);
      seed.data[t * seed.width + i] = j;
      ledger.charge_sample(entry_key(game, i, j));
      ledger.charge_channel("oblivious_entry");
    }
  }
  return seed;
}

Eigen::VectorXd vrmd2_subsolve(const MatrixGame& game,
                               const Eigen::VectorXd& center,
                               const InnerConfig& config,
                               const ObliviousSeed& seed, QueryLedger& ledger) {
  if (game.domain != Domain::ball_ball) {
    throw std::invalid_argument("row/col solver needs ball_ball");
  }
  const InnerPlan plan = vrmd_plan(game, config);
  if (seed.length < plan.slots) throw std::invalid_argument("seed too short");
  const double alpha = config.alpha;
  const double frob2 = game.A.squaredNorm();
  const Eigen::VectorXd row_sq = game.A.rowwise().squaredNorm();
  const Eigen::VectorXd col_sq = game.A.colwise().squaredNorm();
  const int dx = game.dx();
  const int dy = game.dy();

  Eigen::VectorXd w = center;
  std::size_t slot = 0;
  for (std::size_t e = 0; e < plan.epochs; ++e) {
    const Eigen::VectorXd anchor = w;
    const Eigen::VectorXd gbar = gradient_mapping(game, anchor, ledger);
    Eigen::VectorXd tail_sum = Eigen::VectorXd::Zero(w.size());
    std::size_t tail_count = 0;
    const std::size_t k0 = static_cast<std::size_t>(
        std::ceil(4.0 * (frob2 + alpha * alpha) / (alpha * alpha)));
    for (std::size_t k = 0; k < plan.steps_per_epoch; ++k, ++slot) {
      const int i = seed.at(slot, 0);
      const int j = seed.at(slot, 1);
      Eigen::VectorXd g = gbar;
      const double dyi = w[dx + i] - anchor[dx + i];
      g.head(dx) += game.A.row(i).transpose() * (dyi * frob2 / row_sq[i]);
      const double dxj = w[j] - anchor[j];
      g.tail(dy) -= game.A.col(j) * (dxj * frob2 / col_sq[j]);
      g.head(dx) +=
          game.phi.grad(w.head(dx)) - game.phi.grad(anchor.head(dx));
      g.tail(dy) +=
          game.psi.grad(w.tail(dy)) - game.psi.grad(anchor.tail(dy));
      g += alpha * (w - center);
      const double step =
          2.0 / (alpha * static_cast<double>(k0 + k + 1));
      w.head(dx) = project_ball(w.head(dx) - step * g.head(dx));
      w.tail(dy) = project_ball(w.tail(dy) - step * g.tail(dy));
      if (2 * k >= plan.steps_per_epoch) {
        tail_sum += w;
        ++tail_count;
      }
    }
    if (tail_count > 0) w = tail_sum / static_cast<double>(tail_count);
  }
  return w;
}

Eigen::VectorXd vrmd1_subsolve(const MatrixGame& game,
                               const Eigen::VectorXd& center,
                               const InnerConfig& config,
                               const ObliviousSeed& seed, SplitRng& chi,
                               QueryLedger& ledger) {
  if (game.domain != Domain::ball_simplex) {
    throw std::invalid_argument("entry solver needs ball_simplex");
  }
  const InnerPlan plan = vrmd_plan(game, config);
  if (seed.length < plan.slots) throw std::invalid_argument("seed too short");
  const double alpha = config.alpha;
  const double frob2 = game.A.squaredNorm();
  const Eigen::VectorXd row_sq = game.A.rowwise().squaredNorm();
  const int dx = game.dx();
  const int dy = game.dy();
  const Eigen::VectorXd log_uy =
      center.tail(dy).cwiseMax(kSimplexFloor).array().log();

  Eigen::VectorXd w = center;
  std::size_t slot = 0;
  for (std::size_t e = 0; e < plan.epochs; ++e) {
    const Eigen::VectorXd anchor = w;
    const Eigen::VectorXd gbar = gradient_mapping(game, anchor, ledger);
    Eigen::VectorXd tail_sum = Eigen::VectorXd::Zero(w.size());
    std::size_t tail_count = 0;
    const std::size_t k0 = static_cast<std::size_t>(
        std::ceil(4.0 * (frob2 + alpha * alpha) / (alpha * alpha)));
    for (std::size_t k = 0; k < plan.steps_per_epoch; ++k, ++slot) {
      // Simplex block: oblivious entry estimate of A (x - x_anchor).
      Eigen::VectorXd gy = gbar.tail(dy);
      for (int i = 0; i < dy; ++i) {
        const int j = seed.at(slot, i);
        const double aij = game.A(i, j);
        gy[i] -= (w[j] - anchor[j]) * row_sq[i] / aij;
      }
      gy += game.psi.grad(w.tail(dy)) - game.psi.grad(anchor.tail(dy));
      gy += alpha *
            (w.tail(dy).cwiseMax(kSimplexFloor).array().log().matrix() -
             log_uy);

      // Ball block: adaptive row estimate of A^T (y - y_anchor).
      Eigen::VectorXd gx = gbar.head(dx);
      const Eigen::VectorXd d = w.tail(dy) - anchor.tail(dy);
      const double l1 = d.cwiseAbs().sum();
      if (l1 > 0) {
        const Eigen::VectorXd abs_d = d.cwiseAbs();
        const std::vector<double> weights(abs_d.data(), abs_d.data() + dy);
        const AliasTable table(weights);
        const int i = table.sample(chi);
        const double sign = d[i] >= 0 ? 1.0 : -1.0;
        gx += game.A.row(i).transpose() * (sign * l1);
        ledger.charge_sample(row_key(i));
        ledger.charge_channel("adaptive_rowcol");
      }
      gx += game.phi.grad(w.head(dx)) - game.phi.grad(anchor.head(dx));
      gx += alpha * (w.head(dx) - center.head(dx));

      const double step = 2.0 / (alpha * static_cast<double>(k0 + k + 1));
      w.head(dx) = project_ball(w.head(dx) - step * gx);
      Eigen::VectorXd logy =
          w.tail(dy).cwiseMax(kSimplexFloor).array().log().matrix() -
          step * gy;
      logy.array() -= logy.maxCoeff();
      Eigen::VectorXd y = logy.array().exp();
      y /= y.sum();
      y = y.cwiseMax(kSimplexFloor);
      y /= y.sum();
      w.tail(dy) = y;
      if (2 * k >= plan.steps_per_epoch) {
        tail_sum += w;
        ++tail_count;
      }
    }
    if (tail_count > 0) {
      w = tail_sum / static_cast<double>(tail_count);
      w.tail(dy) = w.tail(dy).cwiseMax(kSimplexFloor);
      w.tail(dy) /= w.tail(dy).sum();
    }
  }
  return w;
}

double cpp_eps_prime(const MatrixGame& game, double eps) {
  const SetupConstants k = setup_constants(game);
  return eps * k.c_dom /
         (4.0 * k.C_dom * (k.G + k.D * k.L) * game.dim());
}

int cpp_n_outer(const MatrixGame& game, const CppConfig& config, double alpha) {
  if (config.n_outer_override > 0) return config.n_outer_override;
  const SetupConstants k = setup_constants(game);
  return static_cast<int>(
             std::ceil(4.0 * config.C * alpha * k.theta / config.eps)) +
         1;
}

CppResult cpp_solve(const MatrixGame& game, const CppConfig& config) {
  CppResult result;
  result.alpha = config.alpha > 0
                     ? config.alpha
                     : std::pow(game.A.norm(), 2.0 / 3.0) *
                           std::cbrt(config.eps);
  result.eps_prime = cpp_eps_prime(game, config.eps);
  result.n_outer = cpp_n_outer(game, config, result.alpha);

  InnerConfig inner;
  inner.alpha = result.alpha;
  inner.eps = result.eps_prime;
  inner.inner_c = config.inner_c;
  const InnerPlan plan = vrmd_plan(game, inner);
  result.slots = plan.slots;

  OuterConfig outer;
  outer.type = config.mode;
  outer.n_outer = result.n_outer;
  outer.master_seed = config.master_seed;
  if (config.mode != OuterType::standard) {
    const double pi_eps = config.pi_eps > 0 ? config.pi_eps : config.delta;
    outer.noise.tau = pseudo_independence_tau(result.eps_prime, pi_eps);
  }
  result.tau = outer.noise.tau;

  SubSolver sub;
  if (game.domain == Domain::ball_ball) {
    sub.draw_seed = [&game, plan](SplitRng& stream, QueryLedger& ledger) {
      return draw_rowcol_seed(game, plan.slots, stream, ledger);
    };
    sub.solve = [&game, inner](const Eigen::VectorXd& u,
                               const ObliviousSeed& seed, SplitRng&,
                               QueryLedger& ledger) {
      return vrmd2_subsolve(game, u, inner, seed, ledger);
    };
  } else {
    sub.draw_seed = [&game, plan](SplitRng& stream, QueryLedger& ledger) {
      return draw_entry_seed(game, plan.slots, stream, ledger);
    };
    sub.solve = [&game, inner](const Eigen::VectorXd& u,
                               const ObliviousSeed& seed, SplitRng& chi,
                               QueryLedger& ledger) {
      return vrmd1_subsolve(game, u, inner, seed, chi, ledger);
    };
  }

  const double alpha = result.alpha;
  PostProcess post = [&game, alpha](const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& half,
                                    QueryLedger& ledger) {
    const Eigen::VectorXd snapped = project(game, half);
    const Eigen::VectorXd g = gradient_mapping(game, snapped, ledger);
    return prox_step(game, u, g, alpha);
  };

  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(game.dim());
  if (game.domain == Domain::ball_simplex) {
    u0.tail(game.dy()).setConstant(1.0 / game.dy());
  }
  result.record = run_outer(outer, u0, sub, post, uniform_weight());
  result.z = project(game, result.record.output);
  result.gap = duality_gap(game, result.z);
  return result;
}

}  // namespace reusevr::games
