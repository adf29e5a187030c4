#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace reusevr {

// Oracle cost accounting.  batch counts full-batch queries, sample counts
// individual sample-record draws (charged when a seed is drawn), distinct
// counts unique sample keys ever touched.
class QueryLedger {
 public:
  void charge_batch(std::int64_t n = 1) { batch_ += n; }

  void charge_sample(std::int64_t key, std::int64_t n = 1) {
    sample_ += n;
    keys_.insert(key);
  }

  // Named side channel for costs that need finer attribution than the
  // three headline counters (e.g. adaptive row/column queries in games).
  void charge_channel(const std::string& name, std::int64_t n = 1) {
    channels_[name] += n;
  }

  // Folds another ledger into this one; key spaces must agree.
  void absorb(const QueryLedger& other) {
    batch_ += other.batch_;
    sample_ += other.sample_;
    keys_.insert(other.keys_.begin(), other.keys_.end());
    for (const auto& [name, count] : other.channels_) channels_[name] += count;
  }

  std::int64_t batch() const { return batch_; }
  std::int64_t sample() const { return sample_; }
  std::int64_t distinct() const {
    return static_cast<std::int64_t>(keys_.size());
  }
  std::int64_t channel(const std::string& name) const {
    const auto it = channels_.find(name);
    return it == channels_.end() ? 0 : it->second;
  }
  const std::map<std::string, std::int64_t>& channels() const {
    return channels_;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"batch", batch_}, {"sample", sample_},
                     {"distinct", distinct()}};
    for (const auto& [name, count] : channels_) j[name] = count;
    return j;
  }

 private:
  std::int64_t batch_ = 0;
  std::int64_t sample_ = 0;
  std::unordered_set<std::int64_t> keys_;
  std::map<std::string, std::int64_t> channels_;
};

}  // namespace reusevr
