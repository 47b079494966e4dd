#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "eadl/numcore/rng.hpp"
#include "eadl/numcore/tensor.hpp"

// Differentiable tensor operations. Every op records a backward rule on the
// active tape when at least one input requires a gradient.
namespace eadl {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, real s);
// x[..., C] + bias[C]
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// [m×k]·[k×n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m×k]·[n×k]ᵀ
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// Batched over a leading group axis: [G×m×k]·[G×k×n]
Tensor bmm(const Tensor& a, const Tensor& b);
// [G×m×k]·[G×n×k]ᵀ
Tensor bmm_nt(const Tensor& a, const Tensor& b);
Tensor transpose_last2(const Tensor& x);
// c·I − X for every trailing square matrix of x.
Tensor identity_minus(const Tensor& x, real c);

Tensor gelu(const Tensor& x);
// Normalizes each row of x[R×C]; gamma and beta are [C].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, real eps = 1e-5f);
// Rows of table[V×C] selected by ids -> [N×C].
Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids);
// Inverted dropout. Identity when !training or p == 0.
Tensor dropout(const Tensor& x, real p, Rng& rng, bool training);

// exp(z_i/T) / Σ_j exp(z_j/T) along the last axis.
Tensor softmax_T(const Tensor& z, real T);

// x[R×C] -> [k×C]
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
// [B·L×H] -> [B·h × L × H/h] and back.
Tensor split_heads(const Tensor& x, std::size_t batch, std::size_t heads);
Tensor merge_heads(const Tensor& x, std::size_t batch, std::size_t heads);
// [G×n×d] -> [G×m×d]; segment k covers rows [⌊k·n/m⌋, ⌊(k+1)·n/m⌋).
Tensor segment_mean(const Tensor& x, std::size_t segments);
Tensor reshape(const Tensor& x, Shape shape);

}  // namespace eadl
