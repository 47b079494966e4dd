#pragma once

#include <cstdint>
#include <string_view>

#include "eadl/encoder/checkpoint.hpp"

namespace eadl {

enum class PositionInit { cyclic_copy, random_init };

PositionInit parse_position_init(std::string_view text);  // "cyclic" | "random"
const char* to_string(PositionInit p) noexcept;

struct ConvertPlan {
  AttentionSpec target_spec = SlidingWindow{};
  std::size_t new_max_positions = 0;
  PositionInit position_extension = PositionInit::cyclic_copy;
  std::uint64_t seed = 0;  // random_init only
};

// Swaps the attention pattern (token 0 becomes global for window and block
// patterns) and grows the position table. Rows below the old maximum and every
// other tensor are copied bit for bit.
Checkpoint convert(const Checkpoint& ckpt, const ConvertPlan& plan);

// Position table growth only; the attention pattern is kept.
Checkpoint extend_only(const Checkpoint& ckpt, std::size_t new_max_positions,
                       PositionInit init = PositionInit::cyclic_copy, std::uint64_t seed = 0);

}  // namespace eadl
