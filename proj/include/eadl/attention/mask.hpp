#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "eadl/attention/spec.hpp"

namespace eadl {

// Per-query sorted key lists (CSR layout) for one sequence length.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t n, std::vector<std::size_t> offsets, std::vector<std::uint32_t> keys);

  std::size_t length() const { return n_; }
  std::span<const std::uint32_t> keys(std::size_t query) const {
    return {keys_.data() + offsets_[query], offsets_[query + 1] - offsets_[query]};
  }
  std::span<const std::size_t> offsets() const { return offsets_; }
  std::size_t cardinality() const { return keys_.size(); }

  bool operator==(const AttentionMask&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> keys_;
};

AttentionMask build_mask(const AttentionSpec& spec, std::size_t n);

// Total allowed query-key pairs.
inline std::size_t mask_cardinality(const AttentionMask& mask) { return mask.cardinality(); }

// Score evaluations per head and sequence for any variant, Nystrom included
// (n·m + m·m + m·n for its three landmark products).
std::size_t attended_pairs(const AttentionSpec& spec, std::size_t n);

// One line per query: its sorted key indices separated by single spaces.
void write_mask(std::ostream& os, const AttentionMask& mask);

}  // namespace eadl
