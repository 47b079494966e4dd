#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "eadl/numcore/tensor.hpp"

namespace eadl {

struct MaskedTarget {
  std::size_t position;  // row of the logits matrix
  std::int32_t token;    // target class id
};

// −Σ_i p_i · log softmax_T(s)_i, averaged over rows when given [R×n].
// Every teacher row must sum to 1 within 1e-5.
Tensor cross_entropy_soft(const Tensor& student_logits, const Tensor& teacher_probs, real T);

// 1 − cos(a, b), averaged over rows when given [R×d]. Zero-norm rows are rejected.
Tensor cosine_embedding_loss(const Tensor& a, const Tensor& b);

// Mean negative log-likelihood over the listed rows of logits[L×V]. An empty
// target list gives a zero loss whose gradient is zero.
Tensor mlm_cross_entropy(const Tensor& logits, std::span<const MaskedTarget> targets);

// Shannon entropy (nats) of a probability vector.
double entropy(std::span<const real> probs);

}  // namespace eadl
