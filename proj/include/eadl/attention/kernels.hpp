#pragma once

#include <cstddef>

#include "eadl/attention/mask.hpp"
#include "eadl/numcore/tensor.hpp"

namespace eadl {

// Q, K, V are [G×n×d] where G enumerates (sequence, head) pairs. Each query
// attends only to the keys its mask row allows; work and score memory are
// proportional to the mask cardinality.
Tensor masked_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask& mask, real scale);

// softmax(s·Q·K̃ᵀ) · pinv(softmax(s·Q̃·K̃ᵀ)) · softmax(s·Q̃·Kᵀ) · V with segment-mean landmarks.
Tensor nystrom_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t landmarks,
                         std::size_t pinv_iters, real scale);

// Z₀ = Aᵀ/(‖A‖₁‖A‖∞); Z ← ¼·Z(13I − AZ(15I − AZ(7I − AZ))). A is [m×m] or [G×m×m].
Tensor iterative_pinv(const Tensor& a, std::size_t iters);

// Dispatch on the variant. Masked variants need a mask built for n.
Tensor attend(const AttentionSpec& spec, const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask* mask,
              real scale);

}  // namespace eadl
