#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trigraph/random.hpp"

namespace trigraph {

// Walker/Vose alias table: O(n) construction, O(1) draws with probability
// proportional to the construction weights.
class AliasTable {
 public:
  AliasTable() = default;
  // Weights must be non-negative with a positive sum.
  explicit AliasTable(std::span<const double> weights);

  std::size_t sample(Rng& rng) const {
    const std::size_t column = rng.below(prob_.size());
    return rng.uniform() < prob_[column] ? column : alias_[column];
  }

  std::size_t size() const { return prob_.size(); }
  bool empty() const { return prob_.empty(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace trigraph
