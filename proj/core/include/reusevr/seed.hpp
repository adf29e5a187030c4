#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reusevr {

// Realized oblivious sample sequence: `length` slots of `width` integer
// records each, drawn ahead of any solver iterate.  Replaying the same
// seed re-reads the stored records and incurs no new oracle cost.
struct ObliviousSeed {
  std::string dist_id;
  std::size_t length = 0;
  std::size_t width = 1;
  std::vector<std::int32_t> data;

  std::int32_t at(std::size_t slot, std::size_t k = 0) const {
    return data[slot * width + k];
  }
};

}  // namespace reusevr
