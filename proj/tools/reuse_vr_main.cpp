// Experiment harness: problem ingestion, sweep execution over the
// batch/sample trade-off knob, and CSV/JSON emission.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "reusevr/diagnostics.hpp"
#include "reusevr/experiment.hpp"
#include "reusevr/fsm.hpp"
#include "reusevr/games.hpp"
#include "reusevr/io.hpp"
#include "reusevr/mdp.hpp"
#include "reusevr/outer.hpp"
#include "reusevr/topev.hpp"

namespace {

using reusevr::OuterType;
namespace experiment = reusevr::experiment;
namespace diagnostics = reusevr::diagnostics;

struct CommonFlags {
  std::vector<std::string> modes{"standard"};
  std::vector<double> knobs;
  int trials = 20;
  std::uint64_t seed = 1;
  std::string out = "sweep.csv";
  double eps = 0.05;
  double delta = 0.05;
  double c = 100.0;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--mode", flags.modes,
                  "loop types: standard, noisy, reuse")
      ->delimiter(',');
  cmd->add_option("--knob-grid", flags.knobs, "knob values for the sweep")
      ->delimiter(',');
  cmd->add_option("--trials", flags.trials, "trials per cell");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--out", flags.out, "CSV output path (JSON sidecar at .json)");
  cmd->add_option("--eps", flags.eps, "accuracy target");
  cmd->add_option("--delta", flags.delta, "failure probability");
  cmd->add_option("--c", flags.c, "relative accuracy constant");
  cmd->add_flag("--timing", flags.timing,
                "fill the secs column with measured wall time "
                "(artifacts are then not byte-reproducible)");
}

experiment::SweepConfig sweep_config(const CommonFlags& flags) {
  experiment::SweepConfig cfg;
  cfg.knobs = flags.knobs;
  cfg.trials = flags.trials;
  cfg.master_seed = flags.seed;
  cfg.timing = flags.timing;
  for (const std::string& m : flags.modes) {
    cfg.modes.push_back(reusevr::outer_type_from_string(m));
  }
  return cfg;
}

void emit(const std::string& out_path, const experiment::SweepResult& result) {
  experiment::write_text(out_path, experiment::csv_string(result.rows));
  experiment::write_text(out_path + ".json", result.sidecar.dump(2) + "\n");
  std::cout << experiment::csv_string(result.rows);
}

nlohmann::json echo_common(const std::string& command,
                           const CommonFlags& flags) {
  return {{"command", command}, {"modes", flags.modes},
          {"knob_grid", flags.knobs}, {"trials", flags.trials},
          {"seed", flags.seed},       {"eps", flags.eps},
          {"delta", flags.delta},     {"c", flags.c}};
}

int run_fsm(const CommonFlags& flags, const std::string& matrix,
            const std::string& labels, const std::string& meta) {
  const reusevr::io::GlmInstance inst =
      reusevr::io::load_glm(matrix, labels, meta);
  const reusevr::fsm::GlmProblem problem = inst.problem();
  const double mu = problem.strong_convexity();
  for (const double lambda : flags.knobs) {
    if (lambda < mu) {
      std::cerr << "knob " << lambda << " below mu = " << mu << "\n";
      return 1;
    }
  }
  const Eigen::VectorXd x_star = reusevr::fsm::reference_minimizer(
      problem, Eigen::VectorXd::Zero(problem.dim()), 0.0);
  const double f_star = problem.value(x_star);
  const double gap0 =
      problem.value(Eigen::VectorXd::Zero(problem.dim())) - f_star;

  auto runner = [&](double lambda, OuterType mode, int,
                    std::uint64_t trial_seed) {
    reusevr::fsm::AppConfig cfg;
    cfg.lambda = lambda;
    cfg.c = flags.c;
    cfg.delta = flags.delta;
    cfg.mode = mode;
    cfg.master_seed = trial_seed;
    const reusevr::fsm::AppResult res = reusevr::fsm::app_solve(problem, cfg);
    experiment::TrialOutcome out;
    out.err = problem.value(res.x) - f_star;
    out.success = out.err <= gap0 / flags.c;
    out.ledger = res.record.ledger;
    return out;
  };
  emit(flags.out, experiment::run_sweep(sweep_config(flags), runner,
                                        echo_common("fsm", flags)));
  return 0;
}

int run_dmdp(const CommonFlags& flags, const std::string& problem_path) {
  const reusevr::mdp::Dmdp m = reusevr::io::load_dmdp(problem_path);
  for (const double gp : flags.knobs) {
    if (gp >= m.gamma || gp <= 0) {
      std::cerr << "knob " << gp << " outside (0, gamma)\n";
      return 1;
    }
  }
  const Eigen::VectorXd v_star =
      reusevr::mdp::exact_solve(m, m.rewards, m.gamma).v;

  auto runner = [&](double gamma_prime, OuterType mode, int,
                    std::uint64_t trial_seed) {
    reusevr::mdp::PrmConfig cfg;
    cfg.eps = flags.eps;
    cfg.delta = flags.delta;
    cfg.gamma_prime = gamma_prime;
    cfg.mode = mode;
    cfg.master_seed = trial_seed;
    const reusevr::mdp::PrmResult res = reusevr::mdp::prm_solve(m, cfg);
    experiment::TrialOutcome out;
    out.err = (res.v - v_star).lpNorm<Eigen::Infinity>();
    out.success = out.err <= flags.eps;
    out.ledger = res.record.ledger;
    return out;
  };
  emit(flags.out, experiment::run_sweep(sweep_config(flags), runner,
                                        echo_common("dmdp", flags)));
  return 0;
}

int run_amdp(const CommonFlags& flags, const std::string& problem_path) {
  const reusevr::mdp::Dmdp m = reusevr::io::load_dmdp(problem_path);
  auto runner = [&](double t_mix, OuterType mode, int,
                    std::uint64_t trial_seed) {
    reusevr::mdp::AmdpConfig cfg;
    cfg.eps = flags.eps;
    cfg.t_mix = t_mix;
    cfg.delta = flags.delta;
    cfg.mode = mode;
    cfg.master_seed = trial_seed;
    const reusevr::mdp::AmdpResult res = reusevr::mdp::amdp_solve(m, cfg);
    reusevr::mdp::Dmdp shifted = m;
    shifted.gamma = res.gamma;
    const Eigen::VectorXd v_star =
        reusevr::mdp::exact_solve(shifted, shifted.rewards, res.gamma).v;
    experiment::TrialOutcome out;
    out.err = (res.discounted.v - v_star).lpNorm<Eigen::Infinity>();
    out.success = out.err <= flags.eps / (3.0 * (1.0 - res.gamma));
    out.ledger = res.discounted.record.ledger;
    return out;
  };
  emit(flags.out, experiment::run_sweep(sweep_config(flags), runner,
                                        echo_common("amdp", flags)));
  return 0;
}

int run_game(const CommonFlags& flags, const std::string& matrix,
             const std::string& config_path, reusevr::games::Domain expect) {
  reusevr::io::GameInstance inst =
      reusevr::io::load_game(matrix, config_path);
  if (inst.game.domain != expect) {
    std::cerr << "problem domain does not match the command\n";
    return 1;
  }
  const double eps = flags.eps > 0 ? flags.eps : inst.eps;
  auto runner = [&, eps](double alpha, OuterType mode, int,
                         std::uint64_t trial_seed) {
    reusevr::games::CppConfig cfg;
    cfg.eps = eps;
    cfg.alpha = alpha > 0 ? alpha : -1.0;
    cfg.delta = flags.delta;
    cfg.mode = mode;
    cfg.master_seed = trial_seed;
    const reusevr::games::CppResult res =
        reusevr::games::cpp_solve(inst.game, cfg);
    experiment::TrialOutcome out;
    out.err = res.gap;
    out.success = res.gap <= eps;
    out.ledger = res.record.ledger;
    return out;
  };
  const char* name =
      expect == reusevr::games::Domain::ball_ball ? "game22" : "game21";
  emit(flags.out, experiment::run_sweep(sweep_config(flags), runner,
                                        echo_common(name, flags)));
  return 0;
}

int run_topev(const CommonFlags& flags, const std::string& matrix) {
  const Eigen::MatrixXd A = reusevr::io::load_csv_matrix(matrix);
  const Eigen::MatrixXd cov = A.transpose() * A;
  const double lambda1 =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov)
          .eigenvalues()
          .maxCoeff();
  nlohmann::json details = nlohmann::json::array();
  auto runner = [&](double alpha, OuterType mode, int,
                    std::uint64_t trial_seed) {
    reusevr::topev::TopEvConfig cfg;
    cfg.eps = flags.eps;
    cfg.alpha = alpha;
    cfg.delta = flags.delta;
    cfg.mode = mode;
    cfg.master_seed = trial_seed;
    const reusevr::topev::TopEvResult res =
        reusevr::topev::shift_invert_solve(A, cfg);
    experiment::TrialOutcome out;
    out.err = (lambda1 - res.rayleigh) / lambda1;
    out.success = res.rayleigh >= (1.0 - flags.eps) * lambda1;
    out.ledger = res.ledger;
    details.push_back({{"rayleigh", res.rayleigh},
                       {"eps", flags.eps},
                       {"iterations", res.iterations},
                       {"ledger", res.ledger.to_json()}});
    return out;
  };
  experiment::SweepResult result = experiment::run_sweep(
      sweep_config(flags), runner, echo_common("topev", flags));
  result.sidecar["topev"] = details;
  emit(flags.out, result);
  return 0;
}

int run_tvcheck(const CommonFlags& flags) {
  // Scalar ridge probe instance: fixed data, one-dimensional iterates.
  Eigen::MatrixXd A(8, 1);
  A << 1.0, -0.5, 2.0, 0.75, -1.5, 1.25, 0.25, -2.0;
  Eigen::VectorXd y(8);
  y << 0.5, -0.25, 1.5, 0.5, -1.0, 1.0, 0.0, -1.75;
  const reusevr::fsm::GlmProblem problem(A, y, 0.5, "squared");
  const double lambda = 2.0 * problem.strong_convexity();

  reusevr::fsm::SvrgConfig sub;
  sub.lambda = lambda;
  sub.delta = flags.delta;
  const double mu = problem.strong_convexity();
  sub.c = std::max(flags.c * mu / 2.0, 2.0 * flags.c / (mu + lambda));
  const reusevr::fsm::SeedSpec spec = reusevr::fsm::uniform_seed_spec(
      problem, lambda, sub.c, flags.delta, 4.0);

  const Eigen::VectorXd center = Eigen::VectorXd::Constant(1, 0.8);
  const Eigen::VectorXd reference =
      reusevr::fsm::exact_subproblem(problem, center, lambda);
  const double gap0 =
      problem.value(center) +
      0.0 -  // the regularizer vanishes at the center
      (problem.value(reference) +
       0.5 * lambda * (reference - center).squaredNorm());
  // eta_prime bounds the sub-solver's l-infinity deviation from the exact
  // sub-problem solution; the smoothing noise is tau = eta' / (2 eps).
  const double eta_prime = std::sqrt(std::max(gap0, 1e-15) / flags.c);

  reusevr::NoiseConfig noise;
  noise.tau = eta_prime / (2.0 * flags.eps);

  diagnostics::ProbeConfig probe;
  probe.delta = flags.delta;
  probe.eps = flags.eps;
  probe.master_seed = flags.seed;

  reusevr::QueryLedger scratch;
  const auto draw = [&](reusevr::SplitRng& stream) {
    reusevr::ObliviousSeed seed;
    seed.dist_id = "uniform";
    seed.length = spec.length;
    seed.data.resize(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
      seed.data[t] = static_cast<std::int32_t>(
          stream.uniform_int(static_cast<std::int64_t>(problem.n())));
    }
    return seed;
  };
  const auto solve = [&](const reusevr::ObliviousSeed& seed,
                         reusevr::SplitRng&) {
    return reusevr::fsm::svrg_subsolve(problem, center, sub, seed, scratch);
  };
  const diagnostics::ProbeReport report =
      diagnostics::pseudoindependence_probe(draw, solve, reference, noise,
                                            probe);

  nlohmann::json j{{"threshold", report.threshold},
                   {"fail_fraction", report.fail_fraction},
                   {"tau", noise.tau},
                   {"eta_prime", eta_prime},
                   {"num_seeds", probe.num_seeds},
                   {"draws_per_seed", probe.draws_per_seed},
                   {"tv_per_seed", report.tv_per_seed},
                   {"half_width_per_seed", report.half_width_per_seed}};
  experiment::write_text(flags.out, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_validate(const std::string& kind,
                 const std::vector<std::string>& paths) {
  const reusevr::io::ValidationReport rep =
      reusevr::io::validate_problem(kind, paths);
  nlohmann::json j{{"ok", rep.ok}, {"issues", rep.issues},
                   {"summary", rep.summary}};
  std::cout << j.dump(2) << "\n";
  return rep.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sample-reuse experiment harness"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string matrix, labels, meta, problem_path, config_path, sweep_path;
  std::string validate_kind;
  std::vector<std::string> validate_paths;

  CLI::App* fsm = app.add_subcommand("fsm", "finite-sum minimization sweep");
  add_common(fsm, flags);
  fsm->add_option("--matrix", matrix)->required();
  fsm->add_option("--labels", labels)->required();
  fsm->add_option("--meta", meta)->required();

  CLI::App* dmdp = app.add_subcommand("dmdp", "discounted MDP sweep");
  add_common(dmdp, flags);
  dmdp->add_option("--problem", problem_path)->required();

  CLI::App* amdp = app.add_subcommand("amdp", "average-reward MDP sweep");
  add_common(amdp, flags);
  amdp->add_option("--problem", problem_path)->required();

  CLI::App* game22 = app.add_subcommand("game22", "ball-ball matrix game");
  add_common(game22, flags);
  game22->add_option("--matrix", matrix)->required();
  game22->add_option("--config", config_path)->required();

  CLI::App* game21 = app.add_subcommand("game21", "ball-simplex matrix game");
  add_common(game21, flags);
  game21->add_option("--matrix", matrix)->required();
  game21->add_option("--config", config_path)->required();

  CLI::App* topev = app.add_subcommand("topev", "top eigenvector sweep");
  add_common(topev, flags);
  topev->add_option("--matrix", matrix)->required();

  CLI::App* tvcheck =
      app.add_subcommand("tvcheck", "pseudo-independence probe");
  add_common(tvcheck, flags);

  CLI::App* sweep = app.add_subcommand("sweep", "run a JSON sweep config");
  sweep->add_option("--config", sweep_path)->required();

  CLI::App* validate = app.add_subcommand("validate", "validate a problem file");
  validate->add_option("--kind", validate_kind)->required();
  validate->add_option("--paths", validate_paths)->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(sweep)) {
      std::ifstream in(sweep_path);
      if (!in) throw std::runtime_error("cannot open " + sweep_path);
      const nlohmann::json cfg = nlohmann::json::parse(in);
      CommonFlags f;
      f.modes = cfg.value("modes", std::vector<std::string>{"standard"});
      f.knobs = cfg.value("knob_grid", std::vector<double>{});
      f.trials = cfg.value("trials", 20);
      f.seed = cfg.value("seed", std::uint64_t{1});
      f.out = cfg.value("out", std::string{"sweep.csv"});
      f.eps = cfg.value("eps", 0.05);
      f.delta = cfg.value("delta", 0.05);
      f.c = cfg.value("c", 100.0);
      f.timing = cfg.value("timing", false);
      const std::string command = cfg.at("command").get<std::string>();
      if (command == "fsm") {
        return run_fsm(f, cfg.at("matrix"), cfg.at("labels"), cfg.at("meta"));
      }
      if (command == "dmdp") return run_dmdp(f, cfg.at("problem"));
      if (command == "amdp") return run_amdp(f, cfg.at("problem"));
      if (command == "game22") {
        return run_game(f, cfg.at("matrix"), cfg.at("config"),
                        reusevr::games::Domain::ball_ball);
      }
      if (command == "game21") {
        return run_game(f, cfg.at("matrix"), cfg.at("config"),
                        reusevr::games::Domain::ball_simplex);
      }
      if (command == "topev") return run_topev(f, cfg.at("matrix"));
      if (command == "tvcheck") return run_tvcheck(f);
      throw std::runtime_error("unknown command in sweep config: " + command);
    }
    if (app.got_subcommand(fsm)) return run_fsm(flags, matrix, labels, meta);
    if (app.got_subcommand(dmdp)) return run_dmdp(flags, problem_path);
    if (app.got_subcommand(amdp)) return run_amdp(flags, problem_path);
    if (app.got_subcommand(game22)) {
      return run_game(flags, matrix, config_path,
                      reusevr::games::Domain::ball_ball);
    }
    if (app.got_subcommand(game21)) {
      return run_game(flags, matrix, config_path,
                      reusevr::games::Domain::ball_simplex);
    }
    if (app.got_subcommand(topev)) return run_topev(flags, matrix);
    if (app.got_subcommand(tvcheck)) return run_tvcheck(flags);
    if (app.got_subcommand(validate)) {
      return run_validate(validate_kind, validate_paths);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
