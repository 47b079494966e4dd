#include "eadl/attention/mask.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "eadl/error.hpp"
#include "eadl/numcore/rng.hpp"

namespace eadl {

AttentionMask::AttentionMask(std::size_t n, std::vector<std::size_t> offsets, std::vector<std::uint32_t> keys)
    : n_(n), offsets_(std::move(offsets)), keys_(std::move(keys)) {
  require(offsets_.size() == n_ + 1 && offsets_.back() == keys_.size(), ErrorKind::contract, "malformed attention mask");
  for (std::size_t i = 0; i < n_; ++i)
    require(offsets_[i + 1] > offsets_[i], ErrorKind::contract, "attention mask row " + std::to_string(i) + " is empty");
}

namespace {

// Collects each query's keys, then sorts and deduplicates.
class MaskBuilder {
 public:
  explicit MaskBuilder(std::size_t n) : n_(n) { offsets_.push_back(0); }

  void add(std::size_t key) { row_.push_back(static_cast<std::uint32_t>(key)); }
  void add_range(std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < std::min(hi, n_); ++j) add(j);
  }
  void finish_row() {
    std::sort(row_.begin(), row_.end());
    row_.erase(std::unique(row_.begin(), row_.end()), row_.end());
    keys_.insert(keys_.end(), row_.begin(), row_.end());
    offsets_.push_back(keys_.size());
    row_.clear();
  }
  AttentionMask build() { return AttentionMask(n_, std::move(offsets_), std::move(keys_)); }

 private:
  std::size_t n_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> keys_;
  std::vector<std::uint32_t> row_;
};

AttentionMask full_mask(std::size_t n) {
  MaskBuilder b(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.add_range(0, n);
    b.finish_row();
  }
  return b.build();
}

AttentionMask window_mask(const SlidingWindow& s, std::size_t n) {
  for (auto g : s.global)
    require(g < n, ErrorKind::parameter,
            "global token " + std::to_string(g) + " outside sequence of length " + std::to_string(n));
  std::vector<char> is_global(n, 0);
  for (auto g : s.global) is_global[g] = 1;
  const std::size_t reach = s.window * s.dilation;
  MaskBuilder b(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_global[i]) {
      b.add_range(0, n);
    } else {
      const std::size_t steps_back = std::min(s.window, i / s.dilation);
      for (std::size_t j = i - steps_back * s.dilation; j <= i + reach && j < n; j += s.dilation) b.add(j);
      for (auto g : s.global) b.add(g);
    }
    b.finish_row();
  }
  return b.build();
}

AttentionMask block_sparse_mask(const BlockSparse& s, std::size_t n) {
  const std::size_t blocks = (n + s.block - 1) / s.block;
  const std::size_t global = std::min(s.global_blocks, blocks);
  const Rng root(s.seed);
  MaskBuilder b(n);
  std::vector<std::size_t> row_blocks;
  for (std::size_t qb = 0; qb < blocks; ++qb) {
    row_blocks.clear();
    if (qb < global) {
      row_blocks.resize(blocks);
      std::iota(row_blocks.begin(), row_blocks.end(), 0);
    } else {
      for (std::size_t kb = qb == 0 ? 0 : qb - 1; kb <= qb + 1 && kb < blocks; ++kb) row_blocks.push_back(kb);
      for (std::size_t kb = 0; kb < global; ++kb) row_blocks.push_back(kb);
      // Random blocks come from those not already visible, without replacement.
      std::vector<std::size_t> candidates;
      for (std::size_t kb = global; kb < blocks; ++kb)
        if (kb + 1 < qb || kb > qb + 1) candidates.push_back(kb);
      Rng rng = root.split(qb);
      const std::size_t draws = std::min(s.random_blocks, candidates.size());
      for (std::size_t d = 0; d < draws; ++d) {
        const std::size_t pick = d + rng.below(candidates.size() - d);
        std::swap(candidates[d], candidates[pick]);
        row_blocks.push_back(candidates[d]);
      }
    }
    for (std::size_t i = qb * s.block; i < std::min((qb + 1) * s.block, n); ++i) {
      for (auto kb : row_blocks) b.add_range(kb * s.block, (kb + 1) * s.block);
      b.finish_row();
    }
  }
  return b.build();
}

AttentionMask lsg_mask(const LocalSparseGlobal& s, std::size_t n) {
  const std::size_t block = std::max<std::size_t>(s.local, 1);
  const std::size_t global_tokens = std::min(n, s.global_blocks * block);
  const std::size_t sparse_reach = s.local + s.stride * block;
  MaskBuilder b(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < global_tokens) {
      b.add_range(0, n);
    } else {
      b.add_range(i >= s.local ? i - s.local : 0, i + s.local + 1);
      const std::size_t lo = i >= sparse_reach ? i - sparse_reach : 0;
      for (std::size_t j = (lo + s.stride - 1) / s.stride * s.stride; j <= i + sparse_reach && j < n; j += s.stride)
        b.add(j);
      b.add_range(0, global_tokens);
    }
    b.finish_row();
  }
  return b.build();
}

}  // namespace

AttentionMask build_mask(const AttentionSpec& spec, std::size_t n) {
  require(n >= 1, ErrorKind::parameter, "attention mask needs a sequence length >= 1");
  validate(spec);
  if (std::holds_alternative<FullAttention>(spec)) return full_mask(n);
  if (const auto* s = std::get_if<SlidingWindow>(&spec)) return window_mask(*s, n);
  if (const auto* s = std::get_if<BlockSparse>(&spec)) return block_sparse_mask(*s, n);
  if (const auto* s = std::get_if<LocalSparseGlobal>(&spec)) return lsg_mask(*s, n);
  fail(ErrorKind::unsupported, "nystrom attention is algebraic and has no mask");
}

std::size_t attended_pairs(const AttentionSpec& spec, std::size_t n) {
  if (const auto* s = std::get_if<Nystrom>(&spec)) {
    const std::size_t m = std::min(s->landmarks, n);
    return 2 * n * m + m * m;
  }
  return build_mask(spec, n).cardinality();
}

void write_mask(std::ostream& os, const AttentionMask& mask) {
  for (std::size_t i = 0; i < mask.length(); ++i) {
    auto keys = mask.keys(i);
    for (std::size_t j = 0; j < keys.size(); ++j) os << (j ? " " : "") << keys[j];
    os << '\n';
  }
}

}  // namespace eadl
