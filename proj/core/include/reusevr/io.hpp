#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "reusevr/fsm.hpp"
#include "reusevr/games.hpp"
#include "reusevr/mdp.hpp"

namespace reusevr::io {

Eigen::MatrixXd load_csv_matrix(const std::string& path);
Eigen::VectorXd load_csv_vector(const std::string& path);

struct GlmInstance {
  Eigen::MatrixXd A;
  Eigen::VectorXd y;
  double mu_hint = 0.0;
  std::string link;
  double lambda = 0.0;

  fsm::GlmProblem problem() const { return {A, y, mu_hint, link}; }
};

// matrix CSV + labels CSV + JSON metadata {mu_hint, link, lambda}.
GlmInstance load_glm(const std::string& matrix_path,
                     const std::string& labels_path,
                     const std::string& meta_path);

// JSON: {"states", "actions", "transitions": [{"s", "a",
// "probs": [[s', p], ...]}], "rewards", "gamma"}; validated on load.
mdp::Dmdp load_dmdp(const std::string& path);

struct GameInstance {
  games::MatrixGame game;
  double alpha = -1.0;
  double eps = 0.1;
};

// dense CSV matrix + JSON config {domain, phi, psi, alpha, eps}.
GameInstance load_game(const std::string& matrix_path,
                       const std::string& config_path);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> issues;
  nlohmann::json summary;
};

// kind: fsm | mdp | game | topev; paths as the respective loaders expect.
// Never mutates inputs; every violation is itemized with its location.
ValidationReport validate_problem(const std::string& kind,
                                  const std::vector<std::string>& paths);

}  // namespace reusevr::io
