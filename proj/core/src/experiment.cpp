#include "reusevr/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "reusevr/diagnostics.hpp"
#include "reusevr/rng.hpp"

namespace reusevr::experiment {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config, const TrialRunner& runner,
                      const nlohmann::json& config_echo) {
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
  SweepResult result;
  result.sidecar["config"] = config_echo;
  result.sidecar["cells"] = nlohmann::json::array();

  SplitRng root(config.master_seed);
  for (std::size_t ki = 0; ki < config.knobs.size(); ++ki) {
    for (std::size_t mi = 0; mi < config.modes.size(); ++mi) {
      const double knob = config.knobs[ki];
      const OuterType mode = config.modes[mi];
      SplitRng cell_stream =
          root.split(ki * 1000 + mi).split("trials");

      const auto start = std::chrono::steady_clock::now();
      QueryLedger total;
      int successes = 0;
      double err_sum = 0;
      nlohmann::json trials_json = nlohmann::json::array();
      for (int t = 0; t < config.trials; ++t) {
        const TrialOutcome out =
            runner(knob, mode, t, cell_stream.next_u64());
        if (out.success) ++successes;
        err_sum += out.err;
        total.absorb(out.ledger);
        trials_json.push_back({{"success", out.success},
                               {"err", out.err},
                               {"ledger", out.ledger.to_json()}});
      }
      const double secs =
          config.timing
              ? std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count()
              : 0.0;

      SweepRow row;
      row.knob = knob;
      row.mode = to_string(mode);
      row.batch = total.batch();
      row.sample = total.sample();
      row.distinct = total.distinct();
      row.success_lcb = diagnostics::clopper_pearson_lcb(
          successes, config.trials, config.confidence);
      row.mean_err = err_sum / config.trials;
      row.secs = secs;
      result.rows.push_back(row);

      nlohmann::json cell{{"knob", knob},
                          {"mode", row.mode},
                          {"successes", successes},
                          {"ledger", total.to_json()},
                          {"trials", trials_json}};
      if (config.timing) cell["secs"] = secs;
      result.sidecar["cells"].push_back(cell);
    }
  }
  return result;
}

std::string csv_header() {
  return "knob,mode,batch,sample,distinct,success_lcb,mean_err,secs";
}

std::string csv_row(const SweepRow& row) {
  std::string out = fmt("%.10g", row.knob);
  out += "," + row.mode;
  out += "," + std::to_string(row.batch);
  out += "," + std::to_string(row.sample);
  out += "," + std::to_string(row.distinct);
  out += "," + fmt("%.6f", row.success_lcb);
  out += "," + fmt("%.10g", row.mean_err);
  out += "," + fmt("%.3f", row.secs);
  return out;
}

std::string csv_string(const std::vector<SweepRow>& rows) {
  std::string out = csv_header() + "\n";
  for (const SweepRow& row : rows) out += csv_row(row) + "\n";
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace reusevr::experiment
