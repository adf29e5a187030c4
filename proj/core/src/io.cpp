#include "reusevr/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace reusevr::io {

namespace {

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty file");
  return rows;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

games::Composite parse_composite(const nlohmann::json& j) {
  games::Composite c;
  c.kind = j.value("kind", "zero");
  c.coef = j.value("coef", 0.0);
  if (j.contains("b")) {
    const auto& b = j.at("b");
    c.b.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) c.b[i] = b[i].get<double>();
  }
  return c;
}

}  // namespace

Eigen::MatrixXd load_csv_matrix(const std::string& path) {
  const auto rows = read_csv_rows(path);
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  if (!M.allFinite()) throw std::runtime_error(path + ": non-finite entry");
  return M;
}

Eigen::VectorXd load_csv_vector(const std::string& path) {
  const Eigen::MatrixXd M = load_csv_matrix(path);
  if (M.cols() != 1 && M.rows() != 1) {
    throw std::runtime_error(path + ": expected a single column or row");
  }
  return M.cols() == 1 ? Eigen::VectorXd(M.col(0))
                       : Eigen::VectorXd(M.row(0).transpose());
}

GlmInstance load_glm(const std::string& matrix_path,
                     const std::string& labels_path,
                     const std::string& meta_path) {
  GlmInstance inst;
  inst.A = load_csv_matrix(matrix_path);
  inst.y = load_csv_vector(labels_path);
  const nlohmann::json meta = read_json(meta_path);
  inst.mu_hint = meta.at("mu_hint").get<double>();
  inst.link = meta.at("link").get<std::string>();
  inst.lambda = meta.at("lambda").get<double>();
  if (inst.A.rows() != inst.y.size()) {
    throw std::runtime_error("matrix rows != label count");
  }
  return inst;
}

mdp::Dmdp load_dmdp(const std::string& path) {
  const nlohmann::json j = read_json(path);
  mdp::Dmdp m;
  m.states = j.at("states").get<int>();
  m.actions = j.at("actions").get<int>();
  m.gamma = j.at("gamma").get<double>();
  m.rows.resize(static_cast<std::size_t>(m.states) * m.actions);
  const auto& rewards = j.at("rewards");
  if (static_cast<int>(rewards.size()) != m.pair_count()) {
    throw std::runtime_error(path + ": rewards length != states*actions");
  }
  m.rewards.resize(m.pair_count());
  for (int i = 0; i < m.pair_count(); ++i) {
    m.rewards[i] = rewards[i].get<double>();
  }
  for (const auto& t : j.at("transitions")) {
    const int s = t.at("s").get<int>();
    const int a = t.at("a").get<int>();
    if (s < 0 || s >= m.states || a < 0 || a >= m.actions) {
      throw std::runtime_error(path + ": transition with bad (s, a)");
    }
    auto& row = m.rows[m.row_index(s, a)];
    for (const auto& pair : t.at("probs")) {
      row.emplace_back(pair.at(0).get<int>(), pair.at(1).get<double>());
    }
  }
  m.validate();
  return m;
}

GameInstance load_game(const std::string& matrix_path,
                       const std::string& config_path) {
  GameInstance inst;
  inst.game.A = load_csv_matrix(matrix_path);
  const nlohmann::json cfg = read_json(config_path);
  const std::string domain = cfg.at("domain").get<std::string>();
  if (domain == "ball_ball") {
    inst.game.domain = games::Domain::ball_ball;
  } else if (domain == "ball_simplex") {
    inst.game.domain = games::Domain::ball_simplex;
  } else {
    throw std::runtime_error(config_path + ": unknown domain " + domain);
  }
  if (cfg.contains("phi")) inst.game.phi = parse_composite(cfg.at("phi"));
  if (cfg.contains("psi")) inst.game.psi = parse_composite(cfg.at("psi"));
  inst.alpha = cfg.value("alpha", -1.0);
  inst.eps = cfg.value("eps", 0.1);
  return inst;
}

ValidationReport validate_problem(const std::string& kind,
                                  const std::vector<std::string>& paths) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& msg) {
    rep.ok = false;
    rep.issues.push_back(msg);
  };
  try {
    if (kind == "fsm") {
      const GlmInstance inst = load_glm(paths.at(0), paths.at(1), paths.at(2));
      if (inst.mu_hint <= 0) fail("mu_hint must be positive");
      if (inst.link != "squared" && inst.link != "logistic") {
        fail("link must be squared or logistic");
      }
      if (inst.lambda < inst.mu_hint) fail("lambda below mu");
      rep.summary = {{"n", inst.A.rows()}, {"d", inst.A.cols()}};
    } else if (kind == "mdp") {
      const mdp::Dmdp m = load_dmdp(paths.at(0));
      rep.summary = {{"states", m.states},
                     {"actions", m.actions},
                     {"nnz", m.nnz()},
                     {"gamma", m.gamma}};
    } else if (kind == "game") {
      const GameInstance inst = load_game(paths.at(0), paths.at(1));
      if (!inst.game.A.allFinite()) fail("matrix has non-finite entries");
      if (inst.eps <= 0) fail("eps must be positive");
      rep.summary = {{"rows", inst.game.A.rows()},
                     {"cols", inst.game.A.cols()}};
    } else if (kind == "topev") {
      const Eigen::MatrixXd A = load_csv_matrix(paths.at(0));
      rep.summary = {{"rows", A.rows()}, {"cols", A.cols()}};
    } else {
      fail("unknown kind: " + kind);
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return rep;
}

}  // namespace reusevr::io
