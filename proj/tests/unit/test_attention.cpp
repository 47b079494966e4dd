#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "attention_oracle.hpp"
#include "doctest.h"
#include "eadl/attention/kernels.hpp"
#include "eadl/attention/mask.hpp"
#include "eadl/error.hpp"
#include "eadl/numcore/ops.hpp"
#include "support.hpp"

using namespace eadl;
using eadl::testing::dense_attention;
using eadl::testing::frobenius_error;
using eadl::testing::max_elementwise_error;
using eadl::testing::random_tensor;

namespace {

std::size_t brute_window_pairs(std::size_t n, std::size_t w) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((i > j ? i - j : j - i) <= w) ++count;
  return count;
}

}  // namespace

TEST_CASE("build_mask examples") {
  auto full = build_mask(FullAttention{}, 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::vector<std::uint32_t>(full.keys(i).begin(), full.keys(i).end()) ==
                                            std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(full.cardinality() == 16);

  auto win = build_mask(SlidingWindow{1, 1, {}}, 5);
  CHECK(std::vector<std::uint32_t>(win.keys(2).begin(), win.keys(2).end()) == std::vector<std::uint32_t>{1, 2, 3});
  CHECK(win.cardinality() == brute_window_pairs(5, 1));
  CHECK(win.cardinality() == 13);

  CHECK(build_mask(SlidingWindow{7, 1, {}}, 7) == build_mask(FullAttention{}, 7));

  CHECK_THROWS_AS(build_mask(Nystrom{}, 8), Error);
  try {
    build_mask(Nystrom{}, 8);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported);
  }
  try {
    build_mask(SlidingWindow{1, 1, {9}}, 5);
    FAIL("expected parameter error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parameter);
  }
  CHECK_THROWS_AS(build_mask(FullAttention{}, 0), Error);
}

TEST_CASE("dilated window and global closure") {
  auto mask = build_mask(SlidingWindow{2, 2, {3}}, 12);
  // query 8: offsets 0, ±2, ±4 plus global 3
  CHECK(std::vector<std::uint32_t>(mask.keys(8).begin(), mask.keys(8).end()) ==
        std::vector<std::uint32_t>{3, 4, 6, 8, 10});
  CHECK(mask.keys(3).size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    auto k = mask.keys(i);
    CHECK(std::binary_search(k.begin(), k.end(), 3u));
    CHECK(std::binary_search(k.begin(), k.end(), static_cast<std::uint32_t>(i)));
  }
}

TEST_CASE("mask_cardinality") {
  CHECK(mask_cardinality(build_mask(FullAttention{}, 512)) == 262144);
  // Enumeration and the closed form (2w+1)n − w(w+1) both give 24 here.
  CHECK(mask_cardinality(build_mask(SlidingWindow{2, 1, {}}, 6)) == 24);
  CHECK(brute_window_pairs(6, 2) == 24);
  for (std::size_t w : {1, 2, 3, 8})
    for (std::size_t n : {8, 16, 40, 128}) {
      if (n < 4 * w) continue;
      const auto c = mask_cardinality(build_mask(SlidingWindow{w, 1, {}}, n));
      CHECK(c == brute_window_pairs(n, w));
      CHECK(c == (2 * w + 1) * n - w * (w + 1));
      const auto c2 = mask_cardinality(build_mask(SlidingWindow{w, 1, {}}, 2 * n));
      CHECK(static_cast<double>(c2) / static_cast<double>(c) < 2.2);
      CHECK(mask_cardinality(build_mask(FullAttention{}, 2 * n)) == 4 * mask_cardinality(build_mask(FullAttention{}, n)));
    }
}

TEST_CASE("sparsity ceiling for sliding windows") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    const std::size_t w = rng.below(12);
    SlidingWindow s{w, 1, {}};
    const std::size_t globals = rng.below(4);
    std::set<std::size_t> g;
    for (std::size_t i = 0; i < globals; ++i) g.insert(rng.below(n));
    s.global.assign(g.begin(), g.end());
    CHECK(mask_cardinality(build_mask(s, n)) <= (2 * w + 1) * n + 2 * s.global.size() * n);
  }
}

TEST_CASE("masks always include the diagonal") {
  const std::vector<AttentionSpec> specs{FullAttention{}, SlidingWindow{3, 2, {0, 5}}, BlockSparse{4, 2, 1, 3},
                                         LocalSparseGlobal{3, 3, 1}, BlockSparse{5, 1, 0, 9}};
  for (const auto& spec : specs)
    for (std::size_t n : {7, 33, 64}) {
      auto mask = build_mask(spec, n);
      for (std::size_t i = 0; i < n; ++i) {
        auto k = mask.keys(i);
        CHECK(!k.empty());
        CHECK(std::is_sorted(k.begin(), k.end()));
        CHECK(std::adjacent_find(k.begin(), k.end()) == k.end());
        CHECK(std::binary_search(k.begin(), k.end(), static_cast<std::uint32_t>(i)));
      }
    }
}

TEST_CASE("block sparse masks") {
  BlockSparse spec{4, 2, 1, 11};
  auto a = build_mask(spec, 64);
  CHECK(a == build_mask(spec, 64));
  BlockSparse other = spec;
  other.seed = 12;
  CHECK_FALSE(a == build_mask(other, 64));

  // Global block closure: block 0 queries see every key, every query sees block 0.
  for (std::size_t i = 0; i < 64; ++i) {
    auto k = a.keys(i);
    CHECK(k[0] == 0);
    CHECK(std::binary_search(k.begin(), k.end(), 3u));
    if (i < 4) CHECK(k.size() == 64);
  }
  // Non-global row blocks: 3-block band (fewer at edges) + 1 global + 2 random blocks.
  CHECK(a.keys(32).size() == 4 * (3 + 1 + 2));

  // Per-layer seed derivation.
  CHECK(std::get<BlockSparse>(spec_for_layer(spec, 3)).seed == (11u ^ 3u));
  CHECK_FALSE(build_mask(spec_for_layer(spec, 1), 64) == build_mask(spec_for_layer(spec, 2), 64));
}

TEST_CASE("lsg mask stays linear") {
  LocalSparseGlobal spec{4, 4, 1};
  const auto c1 = mask_cardinality(build_mask(spec, 256));
  const auto c2 = mask_cardinality(build_mask(spec, 512));
  CHECK(static_cast<double>(c2) / static_cast<double>(c1) < 2.2);
  auto mask = build_mask(spec, 256);
  auto k = mask.keys(100);
  // local 96..104, strided sparse context at multiples of 4 within reach, global 0..3
  CHECK(std::binary_search(k.begin(), k.end(), 80u));
  CHECK_FALSE(std::binary_search(k.begin(), k.end(), 81u));
  CHECK(std::binary_search(k.begin(), k.end(), 2u));
}

TEST_CASE("masked_attention") {
  Rng rng(5);
  const std::size_t n = 12, d = 4;
  auto q = random_tensor({3, n, d}, rng);
  auto k = random_tensor({3, n, d}, rng);
  auto v = random_tensor({3, n, d}, rng);
  const real scale = 1 / std::sqrt(real(d));

  auto full = masked_attention(q, k, v, build_mask(FullAttention{}, n), scale);
  CHECK(max_elementwise_error(full.data(), dense_attention(q, k, v, scale)) < 1e-6);

  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::uint32_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = i + 1, keys[i] = static_cast<std::uint32_t>(i);
  auto self_only = masked_attention(q, k, v, AttentionMask(n, offsets, keys), scale);
  CHECK(self_only.bitwise_equal(v));

  auto wide = masked_attention(q, k, v, build_mask(SlidingWindow{n, 1, {}}, n), scale);
  CHECK(testing::max_abs_diff(wide.data(), full.data()) < 1e-6);

  CHECK_THROWS_AS(masked_attention(q, k, v, build_mask(FullAttention{}, n + 1), scale), Error);
}

TEST_CASE("score memory is proportional to attended pairs") {
  Rng rng(1);
  const std::size_t n = 256, d = 8;
  auto q = random_tensor({2, n, d}, rng);
  auto measure = [&](const AttentionSpec& spec) {
    auto mask = build_mask(spec, n);
    reset_alloc_peak();
    const auto base = alloc_stats().current_bytes;
    auto out = masked_attention(q, q, q, mask, 1);
    return alloc_stats().peak_bytes - base;
  };
  const auto full = measure(FullAttention{});
  const auto window = measure(SlidingWindow{4, 1, {}});
  const std::int64_t out_bytes = 2 * n * d * sizeof(real);
  CHECK(full == out_bytes + static_cast<std::int64_t>(2 * n * n * sizeof(real)));
  CHECK(window == out_bytes + static_cast<std::int64_t>(2 * (9 * n - 20) * sizeof(real)));
}

TEST_CASE("equivalently complete patterns match dense attention") {
  for (std::size_t n : {8, 32, 128}) {
    Rng rng(100 + n);
    const std::size_t d = 8;
    auto q = random_tensor({2, n, d}, rng);
    auto k = random_tensor({2, n, d}, rng);
    auto v = random_tensor({2, n, d}, rng);
    const real scale = 1 / std::sqrt(real(d));
    const auto oracle = dense_attention(q, k, v, scale);
    const std::vector<AttentionSpec> complete{
        SlidingWindow{n, 1, {}},
        BlockSparse{n, 0, 0, 1},
        BlockSparse{4, n, 0, 1},
        LocalSparseGlobal{n, 4, 0},
    };
    for (const auto& spec : complete) {
      auto mask = build_mask(spec, n);
      CHECK(mask.cardinality() == n * n);
      INFO(to_string(spec) << " n=" << n);
      CHECK(max_elementwise_error(masked_attention(q, k, v, mask, scale).data(), oracle) < 1e-5);
    }
  }
}

TEST_CASE("iterative_pinv") {
  auto eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  for (std::size_t iters : {1, 5, 20}) {
    auto z = iterative_pinv(eye, iters);
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(z.data()[i] - eye.data()[i]) < 1e-6);
  }

  auto diag = iterative_pinv(Tensor::from({2, 2}, {2, 0, 0, 4}), 20);
  CHECK(std::abs(diag.data()[0] - 0.5) < 1e-5);
  CHECK(std::abs(diag.data()[3] - 0.25) < 1e-5);
  CHECK(std::abs(diag.data()[1]) < 1e-5);

  Rng rng(8);
  auto a = softmax_T(random_tensor({4, 4}, rng, -1, 1), 1);
  auto z = iterative_pinv(a, 25);
  auto aza = matmul(matmul(a, z), a);
  double err = 0.0;
  for (std::size_t i = 0; i < 16; ++i) err += std::pow(aza.data()[i] - a.data()[i], 2);
  CHECK(std::sqrt(err) < 1e-4);
}

TEST_CASE("nystrom_attention") {
  Rng rng(3);
  const std::size_t n = 16, d = 4;
  const real scale = 1 / std::sqrt(real(d));
  auto q = random_tensor({1, n, d}, rng, -1, 1);
  auto k = random_tensor({1, n, d}, rng, -1, 1);
  auto v = random_tensor({1, n, d}, rng, -1, 1);
  const auto oracle = dense_attention(q, k, v, scale);

  CHECK(frobenius_error(nystrom_attention(q, k, v, n, 30, scale).data(), oracle) < 1e-3);

  auto zero = nystrom_attention(q, k, Tensor::zeros({1, n, d}), 4, 6, scale);
  for (real x : zero.data()) CHECK(x == 0);

  try {
    nystrom_attention(q, k, v, n + 1, 6, scale);
    FAIL("expected parameter error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parameter);
  }

  // Uneven segments still work (n not divisible by m).
  auto odd = nystrom_attention(q, k, v, 5, 10, scale);
  CHECK(odd.all_finite());
}

// With i.i.d. rows the landmark approximation only improves with m on
// average, so single draws are not compared.
TEST_CASE("nystrom error shrinks with more landmarks (median over seeds)") {
  {
    std::vector<double> err4, err2;
    for (std::uint64_t seed = 0; seed < 41; ++seed) {
      Rng rng(900 + seed);
      const std::size_t n = 16, d = 4;
      const real scale = 1 / std::sqrt(real(d));
      auto q = random_tensor({1, n, d}, rng, -0.5, 0.5);
      auto k = random_tensor({1, n, d}, rng, -0.5, 0.5);
      auto v = random_tensor({1, n, d}, rng, -0.5, 0.5);
      const auto oracle = dense_attention(q, k, v, scale);
      err4.push_back(frobenius_error(nystrom_attention(q, k, v, 4, 30, scale).data(), oracle));
      err2.push_back(frobenius_error(nystrom_attention(q, k, v, 2, 30, scale).data(), oracle));
    }
    std::nth_element(err4.begin(), err4.begin() + 20, err4.end());
    std::nth_element(err2.begin(), err2.begin() + 20, err2.end());
    CHECK(err4[20] < err2[20]);
  }

  std::vector<double> err16, err4;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    const std::size_t n = 32, d = 8;
    const real scale = 1 / std::sqrt(real(d));
    auto q = random_tensor({1, n, d}, rng, -1, 1);
    auto k = random_tensor({1, n, d}, rng, -1, 1);
    auto v = random_tensor({1, n, d}, rng, -1, 1);
    const auto oracle = dense_attention(q, k, v, scale);
    err16.push_back(frobenius_error(nystrom_attention(q, k, v, 16, 30, scale).data(), oracle));
    err4.push_back(frobenius_error(nystrom_attention(q, k, v, 4, 30, scale).data(), oracle));
  }
  std::nth_element(err16.begin(), err16.begin() + 10, err16.end());
  std::nth_element(err4.begin(), err4.begin() + 10, err4.end());
  CHECK(err16[10] < err4[10]);
}

TEST_CASE("attended_pairs") {
  CHECK(attended_pairs(FullAttention{}, 64) == 4096);
  CHECK(attended_pairs(Nystrom{8, 6}, 64) == 2 * 64 * 8 + 64);
  CHECK(attended_pairs(SlidingWindow{2, 1, {}}, 6) == 24);
  CHECK(attended_pairs(FullAttention{}, 1) == 1);
}

TEST_CASE("mask dump format") {
  std::ostringstream os;
  write_mask(os, build_mask(SlidingWindow{1, 1, {}}, 3));
  CHECK(os.str() == "0 1\n0 1 2\n1 2\n");
}

TEST_CASE("attention spec grammar") {
  const std::vector<std::string> texts{"full",           "window:w=8,d=1,g=0",         "window:w=4,d=2,g=2",
                                       "window:w=3,d=1,gset=0|5|9", "bigbird:b=4,r=2,g=1,seed=7", "nystrom:m=8,it=6",
                                       "lsg:w=4,s=4,g=1"};
  for (const auto& t : texts) CHECK(to_string(parse_attention_spec(t)) == t);
  CHECK(std::get<SlidingWindow>(parse_attention_spec("window:w=8")).dilation == 1);
  CHECK(std::get<SlidingWindow>(parse_attention_spec("window:w=2,g=2")).global == std::vector<std::size_t>{0, 1});
  for (const char* bad : {"window:w=x", "window:q=1", "lsg:s=1", "nystrom:m=0", "window:d=0", "sparse", "bigbird:b"})
    CHECK_THROWS_AS(parse_attention_spec(bad), Error);
  CHECK(std::get<SlidingWindow>(with_leading_global(SlidingWindow{2, 1, {4}})).global ==
        std::vector<std::size_t>{0, 4});
}
