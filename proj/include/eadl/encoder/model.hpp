#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eadl/attention/spec.hpp"
#include "eadl/numcore/rng.hpp"
#include "eadl/numcore/tensor.hpp"

namespace eadl {

struct ModelConfig {
  std::size_t vocab_size = 64;
  std::size_t max_positions = 64;
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 32;
  std::size_t num_heads = 2;
  std::size_t ffn_dim = 64;
  AttentionSpec attention_spec = FullAttention{};
  real dropout_p = 0.1f;
  bool tie_mlm_head = true;
  std::size_t num_tags = 9;
  bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& config);

// Matrices are stored [in × out] so a projection is matmul(x, w).
struct LayerWeights {
  Tensor ln1_gamma, ln1_beta;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gamma, ln2_beta;
  Tensor w_in, b_in, w_out, b_out;
};

struct ModelWeights {
  Tensor token_embeddings;     // [vocab × hidden]
  Tensor position_embeddings;  // [max_positions × hidden]
  std::vector<LayerWeights> layers;
  Tensor final_gamma, final_beta;  // only when num_layers > 0
  Tensor mlm_weight;               // [vocab × hidden], only when the head is untied
  Tensor mlm_bias;                 // [vocab]
  Tensor cls_weight;               // [hidden × num_tags]
  Tensor cls_bias;                 // [num_tags]
};

using NamedTensor = std::pair<std::string, Tensor>;

// Every weight tensor in canonical manifest order; the handles share storage with `w`.
std::vector<NamedTensor> named_parameters(const ModelWeights& w);
std::vector<NamedTensor> named_parameters(const ModelWeights& w, std::size_t layer);

// Layer-norm parameters and biases are exempt from weight decay.
bool is_decayed(const std::string& name);

// Zero-filled weights with the shapes implied by `config`.
ModelWeights allocate_weights(const ModelConfig& config);
// N(0, 0.02²) matrices and embeddings, zero biases, unit layer-norm scales.
ModelWeights init_weights(const ModelConfig& config, std::uint64_t seed);
ModelWeights clone_weights(const ModelWeights& w);
void check_weights(const ModelConfig& config, const ModelWeights& w);

// Backbone parameters: embeddings, layers and the final norm. Heads are excluded.
std::size_t count_params(const ModelConfig& config);
std::size_t per_layer_params(const ModelConfig& config);

enum class Mode { train, eval };

struct TokenBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::int32_t> ids;  // row-major [batch × length]
};

// Hidden states are [batch·length × hidden], row b·length + i.
struct EncoderOutput {
  std::vector<Tensor> layers;  // output of each block, before the final norm
  Tensor final_hidden;
};

// Training mode applies dropout and requires `rng`.
EncoderOutput forward(const ModelConfig& config, const ModelWeights& w, const TokenBatch& tokens, Mode mode,
                      Rng* rng = nullptr);

Tensor mlm_logits(const ModelConfig& config, const ModelWeights& w, const Tensor& final_hidden);
Tensor token_classification_logits(const ModelWeights& w, const Tensor& final_hidden);

}  // namespace eadl
