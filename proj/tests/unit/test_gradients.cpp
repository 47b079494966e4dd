#include <cmath>
#include <functional>

#include "doctest.h"
#include "eadl/attention/kernels.hpp"
#include "eadl/attention/mask.hpp"
#include "eadl/encoder/model.hpp"
#include "eadl/error.hpp"
#include "eadl/numcore/gradcheck.hpp"
#include "eadl/numcore/loss.hpp"
#include "eadl/numcore/ops.hpp"
#include "support.hpp"

// Built against the 64-bit variant of the math modules.
static_assert(sizeof(eadl::real) == 8);

using namespace eadl;
using eadl::testing::random_tensor;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an eadl::Error");
  return ErrorKind::contract;
}

}  // namespace

TEST_CASE("finite_diff_check harness") {
  Rng rng(1);
  auto w = random_tensor({6}, rng, -2, 2, true);
  auto c = random_tensor({6}, rng);
  auto linear = finite_diff_check([&] { return sum(mul(w, c)); }, {w});
  CHECK(linear.max_rel_error < 1e-6);

  auto z = random_tensor({5}, rng, -2, 2, true);
  std::vector<std::size_t> first{0};
  auto soft = finite_diff_check(
      [&] { return sum(gather_rows(reshape(softmax_T(z, 2.0f), {5, 1}), first)); }, {z});
  CHECK(soft.max_rel_error < 1e-4);

  Rng noisy(4);
  CHECK(kind_of([&] {
          finite_diff_check([&] { return sum(dropout(w, 0.5f, noisy, true)); }, {w});
        }) == ErrorKind::protocol);
}

TEST_CASE("every differentiable op matches finite differences") {
  Rng rng(2024);
  GradCheckOptions opt;
  auto r = [&](Shape s) { return random_tensor(std::move(s), rng, -2, 2, true); };
  auto check = [&](const char* name, const std::function<Tensor()>& f, std::vector<Tensor> params) {
    auto rep = finite_diff_check(f, params, opt);
    INFO(name << " worst analytic " << rep.worst_analytic << " numeric " << rep.worst_numeric);
    CHECK(rep.max_rel_error < 1e-3);
  };
  // Weighted sums keep downstream gradients non-uniform.
  auto wsum = [&](const Tensor& t) {
    Rng wr(77);
    auto weights = random_tensor(t.shape(), wr);
    return sum(mul(t, weights));
  };

  auto a = r({3, 4}), b = r({3, 4}), m = r({4, 5}), n = r({5, 4});
  check("add", [&] { return wsum(add(a, b)); }, {a, b});
  check("sub", [&] { return wsum(sub(a, b)); }, {a, b});
  check("mul", [&] { return wsum(mul(a, b)); }, {a, b});
  check("scale", [&] { return wsum(scale(a, -1.7f)); }, {a});
  auto bias = r({4});
  check("add_bias", [&] { return wsum(add_bias(a, bias)); }, {a, bias});
  check("mean", [&] { return mean(mul(a, a)); }, {a});
  check("matmul", [&] { return wsum(matmul(a, m)); }, {a, m});
  check("matmul_nt", [&] { return wsum(matmul_nt(a, n)); }, {a, n});
  auto ga = r({2, 3, 4}), gb = r({2, 4, 3}), gc = r({2, 5, 4});
  check("bmm", [&] { return wsum(bmm(ga, gb)); }, {ga, gb});
  check("bmm_nt", [&] { return wsum(bmm_nt(ga, gc)); }, {ga, gc});
  check("transpose_last2", [&] { return wsum(transpose_last2(ga)); }, {ga});
  auto sq = r({2, 3, 3});
  check("identity_minus", [&] { return wsum(identity_minus(sq, 7.0f)); }, {sq});
  check("gelu", [&] { return wsum(gelu(a)); }, {a});
  auto gamma = r({4}), beta = r({4});
  check("layer_norm", [&] { return wsum(layer_norm(a, gamma, beta)); }, {a, gamma, beta});
  auto table = r({6, 3});
  std::vector<std::int32_t> ids{0, 5, 2, 5};
  check("embedding_lookup", [&] { return wsum(embedding_lookup(table, ids)); }, {table});
  check("softmax_T", [&] { return wsum(softmax_T(a, 2.0f)); }, {a});
  std::vector<std::size_t> rows{2, 0, 2};
  check("gather_rows", [&] { return wsum(gather_rows(a, rows)); }, {a});
  auto x = r({6, 4});
  check("split_heads", [&] { return wsum(split_heads(x, 2, 2)); }, {x});
  auto h = r({4, 3, 2});
  check("merge_heads", [&] { return wsum(merge_heads(h, 2, 2)); }, {h});
  auto seq = r({2, 7, 3});
  check("segment_mean", [&] { return wsum(segment_mean(seq, 3)); }, {seq});
  check("dropout (seeded per call)", [&] {
    Rng fixed(5);
    return wsum(dropout(a, 0.3f, fixed, true));
  }, {a});

  auto s = r({3, 5});
  auto t = softmax_T(random_tensor({3, 5}, rng), 1.0f);
  check("cross_entropy_soft", [&] { return cross_entropy_soft(s, t, 2.0f); }, {s});
  auto u = r({3, 5}), v = r({3, 5});
  check("cosine_embedding_loss", [&] { return cosine_embedding_loss(u, v); }, {u, v});
  std::vector<MaskedTarget> targets{{0, 1}, {2, 4}};
  check("mlm_cross_entropy", [&] { return mlm_cross_entropy(s, targets); }, {s});
}


TEST_CASE("attention kernels match finite differences") {
  Rng rng(31);
  GradCheckOptions opt;
  opt.samples = 60;
  const std::size_t n = 8, d = 4;
  auto q = random_tensor({2, n, d}, rng, -1, 1, true);
  auto k = random_tensor({2, n, d}, rng, -1, 1, true);
  auto v = random_tensor({2, n, d}, rng, -1, 1, true);
  Rng wr(9);
  auto weights = random_tensor({2, n, d}, wr);
  auto wsum = [&](const Tensor& t) { return sum(mul(t, weights)); };
  const real scale = 0.5;

  for (const AttentionSpec& spec : std::vector<AttentionSpec>{FullAttention{}, SlidingWindow{2, 1, {0}},
                                                              BlockSparse{2, 1, 1, 4}, LocalSparseGlobal{2, 2, 1}}) {
    const auto mask = build_mask(spec, n);
    auto rep = finite_diff_check([&] { return wsum(masked_attention(q, k, v, mask, scale)); }, {q, k, v}, opt);
    INFO(to_string(spec));
    CHECK(rep.max_rel_error < 1e-3);
  }

  auto a = random_tensor({2, 3, 3}, rng, -1, 1, true);
  auto pinv_weights = random_tensor({2, 3, 3}, wr);
  auto pinv = finite_diff_check([&] { return sum(mul(iterative_pinv(softmax_T(a, 1), 4), pinv_weights)); }, {a}, opt);
  CHECK(pinv.max_rel_error < 1e-3);

  for (std::size_t m : {2, 3, 8}) {
    auto rep = finite_diff_check([&] { return wsum(nystrom_attention(q, k, v, m, 4, scale)); }, {q, k, v}, opt);
    INFO("landmarks " << m);
    CHECK(rep.max_rel_error < 1e-3);
  }
}

TEST_CASE("tiny encoder matches finite differences") {
  ModelConfig c;
  c.vocab_size = 12;
  c.max_positions = 8;
  c.num_layers = 2;
  c.hidden_dim = 16;
  c.num_heads = 2;
  c.ffn_dim = 24;
  c.tie_mlm_head = true;
  auto w = init_weights(c, 3);
  Rng rng(4);
  for (auto& [name, t] : named_parameters(w))
    for (auto& x : t.data()) x += static_cast<real>(0.2 * rng.normal());
  TokenBatch tokens{1, 8, {1, 5, 2, 11, 0, 7, 7, 3}};
  std::vector<MaskedTarget> targets{{1, 4}, {4, 9}, {6, 2}};
  std::vector<Tensor> params;
  for (auto& [name, t] : named_parameters(w))
    if (name.rfind("cls.", 0) != 0) params.push_back(t);

  GradCheckOptions opt;
  opt.samples = 400;
  for (const AttentionSpec& spec : std::vector<AttentionSpec>{FullAttention{}, SlidingWindow{2, 1, {0}}}) {
    c.attention_spec = spec;
    auto rep = finite_diff_check(
        [&] { return mlm_cross_entropy(mlm_logits(c, w, forward(c, w, tokens, Mode::eval).final_hidden), targets); },
        params, opt);
    INFO(to_string(spec) << " worst analytic " << rep.worst_analytic << " numeric " << rep.worst_numeric);
    CHECK(rep.max_rel_error < 1e-3);
  }

  auto cls = finite_diff_check(
      [&] {
        auto logits = token_classification_logits(w, forward(c, w, tokens, Mode::eval).final_hidden);
        return cosine_embedding_loss(logits, Tensor::filled(logits.shape(), 1));
      },
      {w.cls_weight, w.cls_bias, w.layers[1].w_out}, opt);
  CHECK(cls.max_rel_error < 1e-3);
}
