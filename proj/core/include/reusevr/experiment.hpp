#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reusevr/ledger.hpp"
#include "reusevr/outer.hpp"

namespace reusevr::experiment {

struct TrialOutcome {
  bool success = false;
  double err = 0.0;
  QueryLedger ledger;
};

// One randomized run of the configured problem at (knob, mode) with the
// given trial seed; deterministic given the seed.
using TrialRunner = std::function<TrialOutcome(double knob, OuterType mode,
                                               int trial,
                                               std::uint64_t trial_seed)>;

struct SweepRow {
  double knob = 0.0;
  std::string mode;
  std::int64_t batch = 0;
  std::int64_t sample = 0;
  std::int64_t distinct = 0;
  double success_lcb = 0.0;
  double mean_err = 0.0;
  double secs = 0.0;
};

struct SweepConfig {
  std::vector<double> knobs;
  std::vector<OuterType> modes;
  int trials = 1;
  double confidence = 0.95;
  std::uint64_t master_seed = 0;
  // Wall-clock timing is opt-in: with it off the secs column is 0.000 and
  // artifacts are byte-identical across reruns of the same config.
  bool timing = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  nlohmann::json sidecar;
};

// Runs trials per knob x mode cell, aggregates ledgers, and computes the
// exact binomial lower confidence bound on the success rate.  Cell seeds
// derive from (master_seed, knob index, mode index), so row order and
// results are deterministic.
SweepResult run_sweep(const SweepConfig& config, const TrialRunner& runner,
                      const nlohmann::json& config_echo);

std::string csv_header();
std::string csv_row(const SweepRow& row);
std::string csv_string(const std::vector<SweepRow>& rows);

void write_text(const std::string& path, const std::string& content);

}  // namespace reusevr::experiment
