#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "reusevr/rng.hpp"

namespace reusevr {

// Walker alias table for O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw std::invalid_argument("alias table needs weights");
    double total = 0;
    for (const double w : weights) {
      if (w < 0) throw std::invalid_argument("negative weight");
      total += w;
    }
    if (total <= 0) throw std::invalid_argument("weights sum to zero");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;

    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      const std::size_t l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = static_cast<std::int32_t>(l);
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (const std::size_t i : large) prob_[i] = 1.0;
    for (const std::size_t i : small) prob_[i] = 1.0;
  }

  std::int32_t sample(SplitRng& rng) const {
    const auto i = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(prob_.size())));
    return rng.next_double() < prob_[i] ? static_cast<std::int32_t>(i)
                                        : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::int32_t> alias_;
};

}  // namespace reusevr
