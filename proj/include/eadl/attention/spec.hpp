#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace eadl {

struct FullAttention {
  bool operator==(const FullAttention&) const = default;
};

// Dilated sliding window: key j is visible from query i when |i−j| ≤ window·dilation
// and (i−j) is a multiple of dilation. Global tokens see and are seen by everyone.
struct SlidingWindow {
  std::size_t window = 8;
  std::size_t dilation = 1;
  std::vector<std::size_t> global;
  bool operator==(const SlidingWindow&) const = default;
};

// Big Bird style: block diagonal band, leading global blocks and seeded random blocks.
struct BlockSparse {
  std::size_t block = 4;
  std::size_t random_blocks = 2;
  std::size_t global_blocks = 1;
  std::uint64_t seed = 7;
  bool operator==(const BlockSparse&) const = default;
};

// Landmark approximation of full softmax attention; not mask-based.
struct Nystrom {
  std::size_t landmarks = 8;
  std::size_t pinv_iters = 6;
  bool operator==(const Nystrom&) const = default;
};

// Local window, strided sparse context beyond it, and leading global blocks.
// Blocks are max(local, 1) tokens wide.
struct LocalSparseGlobal {
  std::size_t local = 4;
  std::size_t stride = 4;
  std::size_t global_blocks = 1;
  bool operator==(const LocalSparseGlobal&) const = default;
};

using AttentionSpec = std::variant<FullAttention, SlidingWindow, BlockSparse, Nystrom, LocalSparseGlobal>;

// Throws ErrorKind::parameter for out-of-range fields.
void validate(const AttentionSpec& spec);

// Command-line mini-grammar:
//   full | window:w=8,d=1,g=0 | bigbird:b=4,r=2,g=1,seed=7 | nystrom:m=8,it=6 | lsg:w=4,s=4,g=1
// For window, g is a count of leading global tokens; gset=0|5|9 lists them explicitly.
AttentionSpec parse_attention_spec(std::string_view text);
std::string to_string(const AttentionSpec& spec);

// Per-layer variant: block-sparse random draws use seed ⊕ layer.
AttentionSpec spec_for_layer(const AttentionSpec& spec, std::size_t layer);

// Marks position 0 as global for window and block patterns (used by conversion).
AttentionSpec with_leading_global(const AttentionSpec& spec);

bool is_masked(const AttentionSpec& spec);

}  // namespace eadl
