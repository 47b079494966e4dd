#include "eadl/encoder/model.hpp"

#include <cmath>
#include <optional>

#include "eadl/attention/kernels.hpp"
#include "eadl/attention/mask.hpp"
#include "eadl/error.hpp"
#include "eadl/numcore/ops.hpp"

namespace eadl {

void validate(const ModelConfig& c) {
  require(c.vocab_size >= 1, ErrorKind::parameter, "vocab_size must be >= 1");
  require(c.max_positions >= 1, ErrorKind::parameter, "max_positions must be >= 1");
  require(c.hidden_dim >= 1 && c.num_heads >= 1, ErrorKind::parameter, "hidden_dim and num_heads must be >= 1");
  require(c.hidden_dim % c.num_heads == 0, ErrorKind::parameter,
          "hidden_dim " + std::to_string(c.hidden_dim) + " is not divisible by num_heads " +
              std::to_string(c.num_heads));
  require(c.ffn_dim >= 1, ErrorKind::parameter, "ffn_dim must be >= 1");
  require(c.dropout_p >= 0 && c.dropout_p < 1, ErrorKind::parameter, "dropout_p must be in [0, 1)");
  require(c.num_tags >= 1, ErrorKind::parameter, "num_tags must be >= 1");
  validate(c.attention_spec);
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void append_layer(std::vector<NamedTensor>& out, const LayerWeights& l, std::size_t i) {
  const std::string p = "layers." + std::to_string(i) + ".";
  out.emplace_back(p + "ln1.gamma", l.ln1_gamma);
  out.emplace_back(p + "ln1.beta", l.ln1_beta);
  out.emplace_back(p + "attn.q.weight", l.wq);
  out.emplace_back(p + "attn.q.bias", l.bq);
  out.emplace_back(p + "attn.k.weight", l.wk);
  out.emplace_back(p + "attn.k.bias", l.bk);
  out.emplace_back(p + "attn.v.weight", l.wv);
  out.emplace_back(p + "attn.v.bias", l.bv);
  out.emplace_back(p + "attn.out.weight", l.wo);
  out.emplace_back(p + "attn.out.bias", l.bo);
  out.emplace_back(p + "ln2.gamma", l.ln2_gamma);
  out.emplace_back(p + "ln2.beta", l.ln2_beta);
  out.emplace_back(p + "ffn.in.weight", l.w_in);
  out.emplace_back(p + "ffn.in.bias", l.b_in);
  out.emplace_back(p + "ffn.out.weight", l.w_out);
  out.emplace_back(p + "ffn.out.bias", l.b_out);
}

}  // namespace

std::vector<NamedTensor> named_parameters(const ModelWeights& w) {
  std::vector<NamedTensor> out;
  out.emplace_back("token_embeddings", w.token_embeddings);
  out.emplace_back("position_embeddings", w.position_embeddings);
  for (std::size_t i = 0; i < w.layers.size(); ++i) append_layer(out, w.layers[i], i);
  if (w.final_gamma.defined()) {
    out.emplace_back("final_norm.gamma", w.final_gamma);
    out.emplace_back("final_norm.beta", w.final_beta);
  }
  if (w.mlm_weight.defined()) out.emplace_back("mlm.weight", w.mlm_weight);
  out.emplace_back("mlm.bias", w.mlm_bias);
  out.emplace_back("cls.weight", w.cls_weight);
  out.emplace_back("cls.bias", w.cls_bias);
  return out;
}

std::vector<NamedTensor> named_parameters(const ModelWeights& w, std::size_t layer) {
  require(layer < w.layers.size(), ErrorKind::parameter, "layer index out of range");
  std::vector<NamedTensor> out;
  append_layer(out, w.layers[layer], layer);
  return out;
}

bool is_decayed(const std::string& name) { return ends_with(name, ".weight") || ends_with(name, "_embeddings"); }

ModelWeights allocate_weights(const ModelConfig& c) {
  validate(c);
  const std::size_t h = c.hidden_dim, f = c.ffn_dim;
  ModelWeights w;
  w.token_embeddings = Tensor::zeros({c.vocab_size, h});
  w.position_embeddings = Tensor::zeros({c.max_positions, h});
  w.layers.resize(c.num_layers);
  for (auto& l : w.layers) {
    l.ln1_gamma = Tensor::zeros({h});
    l.ln1_beta = Tensor::zeros({h});
    for (Tensor* m : {&l.wq, &l.wk, &l.wv, &l.wo}) *m = Tensor::zeros({h, h});
    for (Tensor* b : {&l.bq, &l.bk, &l.bv, &l.bo}) *b = Tensor::zeros({h});
    l.ln2_gamma = Tensor::zeros({h});
    l.ln2_beta = Tensor::zeros({h});
    l.w_in = Tensor::zeros({h, f});
    l.b_in = Tensor::zeros({f});
    l.w_out = Tensor::zeros({f, h});
    l.b_out = Tensor::zeros({h});
  }
  if (c.num_layers > 0) {
    w.final_gamma = Tensor::zeros({h});
    w.final_beta = Tensor::zeros({h});
  }
  if (!c.tie_mlm_head) w.mlm_weight = Tensor::zeros({c.vocab_size, h});
  w.mlm_bias = Tensor::zeros({c.vocab_size});
  w.cls_weight = Tensor::zeros({h, c.num_tags});
  w.cls_bias = Tensor::zeros({c.num_tags});
  return w;
}

ModelWeights init_weights(const ModelConfig& c, std::uint64_t seed) {
  ModelWeights w = allocate_weights(c);
  Rng rng(seed);
  for (auto& [name, t] : named_parameters(w)) {
    if (ends_with(name, ".gamma")) {
      for (auto& x : t.data()) x = 1;
    } else if (is_decayed(name)) {
      for (auto& x : t.data()) x = static_cast<real>(0.02 * rng.normal());
    }
  }
  return w;
}

ModelWeights clone_weights(const ModelWeights& w) {
  ModelWeights out = w;
  auto deep = [](Tensor& t) {
    if (t.defined()) t = t.clone();
  };
  deep(out.token_embeddings);
  deep(out.position_embeddings);
  for (auto& l : out.layers)
    for (Tensor* t : {&l.ln1_gamma, &l.ln1_beta, &l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo,
                      &l.ln2_gamma, &l.ln2_beta, &l.w_in, &l.b_in, &l.w_out, &l.b_out})
      deep(*t);
  deep(out.final_gamma);
  deep(out.final_beta);
  deep(out.mlm_weight);
  deep(out.mlm_bias);
  deep(out.cls_weight);
  deep(out.cls_bias);
  return out;
}

void check_weights(const ModelConfig& c, const ModelWeights& w) {
  const auto want = named_parameters(allocate_weights(c));
  const auto got = named_parameters(w);
  require(want.size() == got.size(), ErrorKind::contract, "weights do not match the model config");
  for (std::size_t i = 0; i < want.size(); ++i) {
    require(want[i].first == got[i].first && want[i].second.shape() == got[i].second.shape(), ErrorKind::contract,
            "weight " + got[i].first + " has shape " + shape_str(got[i].second.shape()) + ", config expects " +
                shape_str(want[i].second.shape()));
    require(got[i].second.all_finite(), ErrorKind::numeric, "weight " + got[i].first + " is not finite");
  }
}

std::size_t per_layer_params(const ModelConfig& c) {
  const std::size_t h = c.hidden_dim, f = c.ffn_dim;
  return 4 * h + 4 * (h * h + h) + h * f + f + f * h + h;
}

std::size_t count_params(const ModelConfig& c) {
  const std::size_t h = c.hidden_dim;
  return c.vocab_size * h + c.max_positions * h + c.num_layers * per_layer_params(c) + (c.num_layers > 0 ? 2 * h : 0);
}

EncoderOutput forward(const ModelConfig& c, const ModelWeights& w, const TokenBatch& tokens, Mode mode, Rng* rng) {
  const std::size_t B = tokens.batch, L = tokens.length;
  require(B >= 1 && L >= 1 && tokens.ids.size() == B * L, ErrorKind::dimension,
          "token batch holds " + std::to_string(tokens.ids.size()) + " ids for " + std::to_string(B) + "×" +
              std::to_string(L));
  require(L <= c.max_positions, ErrorKind::length,
          "sequence length " + std::to_string(L) + " exceeds max_positions " + std::to_string(c.max_positions));
  require(w.layers.size() == c.num_layers, ErrorKind::contract, "weights do not match the model config");
  const bool training = mode == Mode::train && c.dropout_p > 0;
  require(!training || rng != nullptr, ErrorKind::contract, "training-mode forward needs a random generator");
  Rng unused(0);
  Rng& drop_rng = rng ? *rng : unused;

  std::vector<std::int32_t> positions(B * L);
  for (std::size_t i = 0; i < B * L; ++i) positions[i] = static_cast<std::int32_t>(i % L);
  Tensor x = add(embedding_lookup(w.token_embeddings, tokens.ids), embedding_lookup(w.position_embeddings, positions));
  x = dropout(x, c.dropout_p, drop_rng, training);

  const std::size_t heads = c.num_heads;
  const real att_scale = static_cast<real>(1.0 / std::sqrt(static_cast<double>(c.hidden_dim / heads)));
  EncoderOutput out;
  std::optional<AttentionMask> mask;
  for (std::size_t li = 0; li < c.num_layers; ++li) {
    const LayerWeights& l = w.layers[li];
    const AttentionSpec spec = spec_for_layer(c.attention_spec, li);
    if (is_masked(spec) && (!mask || std::holds_alternative<BlockSparse>(spec))) mask = build_mask(spec, L);

    Tensor h = layer_norm(x, l.ln1_gamma, l.ln1_beta);
    Tensor q = split_heads(add_bias(matmul(h, l.wq), l.bq), B, heads);
    Tensor k = split_heads(add_bias(matmul(h, l.wk), l.bk), B, heads);
    Tensor v = split_heads(add_bias(matmul(h, l.wv), l.bv), B, heads);
    Tensor a = merge_heads(attend(spec, q, k, v, mask ? &*mask : nullptr, att_scale), B, heads);
    x = add(x, dropout(add_bias(matmul(a, l.wo), l.bo), c.dropout_p, drop_rng, training));

    h = layer_norm(x, l.ln2_gamma, l.ln2_beta);
    Tensor f = add_bias(matmul(gelu(add_bias(matmul(h, l.w_in), l.b_in)), l.w_out), l.b_out);
    x = add(x, dropout(f, c.dropout_p, drop_rng, training));
    out.layers.push_back(x);
  }
  out.final_hidden = c.num_layers > 0 ? layer_norm(x, w.final_gamma, w.final_beta) : x;
  return out;
}

Tensor mlm_logits(const ModelConfig& c, const ModelWeights& w, const Tensor& final_hidden) {
  const Tensor& proj = c.tie_mlm_head ? w.token_embeddings : w.mlm_weight;
  return add_bias(matmul_nt(final_hidden, proj), w.mlm_bias);
}

Tensor token_classification_logits(const ModelWeights& w, const Tensor& final_hidden) {
  return add_bias(matmul(final_hidden, w.cls_weight), w.cls_bias);
}

}  // namespace eadl
