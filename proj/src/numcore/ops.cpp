#include "eadl/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eadl/error.hpp"
#include "eadl/numcore/autograd.hpp"

namespace eadl {

using detail::grad_sink;
using detail::new_output;
using detail::record;
using detail::should_record;

namespace detail {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const real* a, const real* b, real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    real* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const real av = a[i * k + p];
      if (av == 0.0f) continue;
      const real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const real* a, const real* b, real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const real* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const real* brow = b + j * k;
      real acc = 0.0f;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const real* a, const real* b, real* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const real* arow = a + p * m;
    const real* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const real av = arow[i];
      if (av == 0.0f) continue;
      real* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

namespace {

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::dimension,
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void expect_rank(const Tensor& t, std::size_t rank, const char* op) {
  require(t.rank() == rank, ErrorKind::dimension,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
}

std::size_t last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "add");
  const bool track = should_record({a, b});
  Tensor out = new_output(a.shape(), track);
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  if (track) {
    record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      for (const Tensor* t : {&a, &b}) {
        auto s = grad_sink(*t);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "sub");
  const bool track = should_record({a, b});
  Tensor out = new_output(a.shape(), track);
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  if (track) {
    record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      auto sa = grad_sink(a);
      for (std::size_t i = 0; i < sa.size(); ++i) sa[i] += g[i];
      auto sb = grad_sink(b);
      for (std::size_t i = 0; i < sb.size(); ++i) sb[i] -= g[i];
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "mul");
  const bool track = should_record({a, b});
  Tensor out = new_output(a.shape(), track);
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  if (track) {
    record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      auto x = a.data();
      auto y = b.data();
      auto sa = grad_sink(a);
      for (std::size_t i = 0; i < sa.size(); ++i) sa[i] += g[i] * y[i];
      auto sb = grad_sink(b);
      for (std::size_t i = 0; i < sb.size(); ++i) sb[i] += g[i] * x[i];
    });
  }
  return out;
}

Tensor scale(const Tensor& a, real s) {
  const bool track = should_record({a});
  Tensor out = new_output(a.shape(), track);
  auto o = out.data();
  auto x = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * s;
  if (track) {
    record({a}, out, [a, out, s]() mutable {
      auto g = out.grad();
      auto sa = grad_sink(a);
      for (std::size_t i = 0; i < sa.size(); ++i) sa[i] += g[i] * s;
    });
  }
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  expect_rank(bias, 1, "add_bias");
  require(x.rank() >= 1 && last_dim(x) == bias.numel(), ErrorKind::dimension,
          "add_bias: " + shape_str(x.shape()) + " + " + shape_str(bias.shape()));
  const std::size_t cols = bias.numel();
  const bool track = should_record({x, bias});
  Tensor out = new_output(x.shape(), track);
  auto o = out.data();
  auto xv = x.data();
  auto bv = bias.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] + bv[i % cols];
  if (track) {
    record({x, bias}, out, [x, bias, out, cols]() mutable {
      auto g = out.grad();
      auto sx = grad_sink(x);
      for (std::size_t i = 0; i < sx.size(); ++i) sx[i] += g[i];
      auto sb = grad_sink(bias);
      if (!sb.empty())
        for (std::size_t i = 0; i < g.size(); ++i) sb[i % cols] += g[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  const bool track = should_record({x});
  Tensor out = new_output({1}, track);
  double acc = 0.0;
  for (real v : x.data()) acc += v;
  out.data()[0] = static_cast<real>(acc);
  if (track) {
    record({x}, out, [x, out]() mutable {
      const real g = out.grad()[0];
      for (auto& s : grad_sink(x)) s += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  require(x.numel() > 0, ErrorKind::dimension, "mean of empty tensor");
  return scale(sum(x), 1.0f / static_cast<real>(x.numel()));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  expect_rank(a, 2, "matmul");
  expect_rank(b, 2, "matmul");
  require(a.dim(1) == b.dim(0), ErrorKind::dimension,
          "matmul: inner dimensions differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const bool track = should_record({a, b});
  Tensor out = new_output({m, n}, track);
  detail::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data().data());
  if (track) {
    record({a, b}, out, [a, b, out, m, n, k]() mutable {
      const real* g = out.grad().data();
      if (a.requires_grad()) detail::gemm_nt(m, k, n, g, b.data().data(), grad_sink(a).data());
      if (b.requires_grad()) detail::gemm_tn(k, n, m, a.data().data(), g, grad_sink(b).data());
    });
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  expect_rank(a, 2, "matmul_nt");
  expect_rank(b, 2, "matmul_nt");
  require(a.dim(1) == b.dim(1), ErrorKind::dimension,
          "matmul_nt: inner dimensions differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "ᵀ");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  const bool track = should_record({a, b});
  Tensor out = new_output({m, n}, track);
  detail::gemm_nt(m, n, k, a.data().data(), b.data().data(), out.data().data());
  if (track) {
    record({a, b}, out, [a, b, out, m, n, k]() mutable {
      const real* g = out.grad().data();
      // dA = g·B, dB = gᵀ·A
      if (a.requires_grad()) detail::gemm_nn(m, k, n, g, b.data().data(), grad_sink(a).data());
      if (b.requires_grad()) detail::gemm_tn(n, k, m, g, a.data().data(), grad_sink(b).data());
    });
  }
  return out;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  expect_rank(a, 3, "bmm");
  expect_rank(b, 3, "bmm");
  require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(1), ErrorKind::dimension,
          "bmm: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t groups = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  const bool track = should_record({a, b});
  Tensor out = new_output({groups, m, n}, track);
  for (std::size_t g = 0; g < groups; ++g)
    detail::gemm_nn(m, n, k, a.data().data() + g * m * k, b.data().data() + g * k * n, out.data().data() + g * m * n);
  if (track) {
    record({a, b}, out, [a, b, out, groups, m, n, k]() mutable {
      const real* go = out.grad().data();
      for (std::size_t g = 0; g < groups; ++g) {
        if (a.requires_grad())
          detail::gemm_nt(m, k, n, go + g * m * n, b.data().data() + g * k * n, grad_sink(a).data() + g * m * k);
        if (b.requires_grad())
          detail::gemm_tn(k, n, m, a.data().data() + g * m * k, go + g * m * n, grad_sink(b).data() + g * k * n);
      }
    });
  }
  return out;
}

Tensor bmm_nt(const Tensor& a, const Tensor& b) {
  expect_rank(a, 3, "bmm_nt");
  expect_rank(b, 3, "bmm_nt");
  require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2), ErrorKind::dimension,
          "bmm_nt: " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "ᵀ");
  const std::size_t groups = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(1);
  const bool track = should_record({a, b});
  Tensor out = new_output({groups, m, n}, track);
  for (std::size_t g = 0; g < groups; ++g)
    detail::gemm_nt(m, n, k, a.data().data() + g * m * k, b.data().data() + g * n * k, out.data().data() + g * m * n);
  if (track) {
    record({a, b}, out, [a, b, out, groups, m, n, k]() mutable {
      const real* go = out.grad().data();
      for (std::size_t g = 0; g < groups; ++g) {
        if (a.requires_grad())
          detail::gemm_nn(m, k, n, go + g * m * n, b.data().data() + g * n * k, grad_sink(a).data() + g * m * k);
        if (b.requires_grad())
          detail::gemm_tn(n, k, m, go + g * m * n, a.data().data() + g * m * k, grad_sink(b).data() + g * n * k);
      }
    });
  }
  return out;
}

Tensor transpose_last2(const Tensor& x) {
  require(x.rank() >= 2, ErrorKind::dimension, "transpose_last2 needs rank >= 2");
  Shape shape = x.shape();
  const std::size_t r = shape[shape.size() - 2], c = shape.back();
  std::swap(shape[shape.size() - 2], shape.back());
  const std::size_t groups = x.numel() / (r * c);
  const bool track = should_record({x});
  Tensor out = new_output(shape, track);
  auto in = x.data();
  auto o = out.data();
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) o[g * r * c + j * r + i] = in[g * r * c + i * c + j];
  if (track) {
    record({x}, out, [x, out, groups, r, c]() mutable {
      auto go = out.grad();
      auto s = grad_sink(x);
      for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) s[g * r * c + i * c + j] += go[g * r * c + j * r + i];
    });
  }
  return out;
}

Tensor identity_minus(const Tensor& x, real c) {
  require(x.rank() >= 2 && x.shape().back() == x.shape()[x.rank() - 2], ErrorKind::dimension,
          "identity_minus needs trailing square matrices, got " + shape_str(x.shape()));
  const std::size_t n = x.shape().back();
  const bool track = should_record({x});
  Tensor out = new_output(x.shape(), track);
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const std::size_t within = i % (n * n);
    o[i] = (within / n == within % n ? c : 0.0f) - in[i];
  }
  if (track) {
    record({x}, out, [x, out]() mutable {
      auto g = out.grad();
      auto s = grad_sink(x);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] -= g[i];
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  const bool track = should_record({x});
  Tensor out = new_output(x.shape(), track);
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = 0.5f * in[i] * (1.0f + std::erf(in[i] * std::numbers::sqrt2_v<real> * 0.5f));
  if (track) {
    record({x}, out, [x, out]() mutable {
      auto g = out.grad();
      auto in = x.data();
      auto s = grad_sink(x);
      const real inv_sqrt_2pi = 0.5f * std::numbers::inv_sqrtpi_v<real> * std::numbers::sqrt2_v<real>;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const real v = in[i];
        const real cdf = 0.5f * (1.0f + std::erf(v * std::numbers::sqrt2_v<real> * 0.5f));
        const real pdf = inv_sqrt_2pi * std::exp(-0.5f * v * v);
        s[i] += g[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, real eps) {
  expect_rank(gamma, 1, "layer_norm");
  expect_rank(beta, 1, "layer_norm");
  const std::size_t cols = gamma.numel();
  require(x.rank() >= 1 && last_dim(x) == cols && beta.numel() == cols, ErrorKind::dimension,
          "layer_norm: " + shape_str(x.shape()) + " with scale " + shape_str(gamma.shape()));
  const std::size_t rows = x.numel() / cols;
  const bool track = should_record({x, gamma, beta});
  Tensor out = new_output(x.shape(), track);
  std::vector<real> xhat(track ? x.numel() : 0);
  std::vector<real> rstd(rows);
  auto in = x.data();
  auto o = out.data();
  auto gv = gamma.data();
  auto bv = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const real* row = in.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(cols);
    const real inv = static_cast<real>(1.0 / std::sqrt(var + eps));
    rstd[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      const real h = static_cast<real>(row[c] - mu) * inv;
      if (track) xhat[r * cols + c] = h;
      o[r * cols + c] = h * gv[c] + bv[c];
    }
  }
  if (track) {
    record({x, gamma, beta}, out,
           [x, gamma, beta, out, rows, cols, xhat = std::move(xhat), rstd = std::move(rstd)]() mutable {
             auto g = out.grad();
             auto gv = gamma.data();
             auto sg = grad_sink(gamma);
             auto sb = grad_sink(beta);
             auto sx = grad_sink(x);
             std::vector<real> dxhat(cols);
             for (std::size_t r = 0; r < rows; ++r) {
               const real* grow = g.data() + r * cols;
               const real* hrow = xhat.data() + r * cols;
               double m1 = 0.0, m2 = 0.0;
               for (std::size_t c = 0; c < cols; ++c) {
                 if (!sg.empty()) sg[c] += grow[c] * hrow[c];
                 if (!sb.empty()) sb[c] += grow[c];
                 dxhat[c] = grow[c] * gv[c];
                 m1 += dxhat[c];
                 m2 += dxhat[c] * hrow[c];
               }
               if (sx.empty()) continue;
               m1 /= static_cast<double>(cols);
               m2 /= static_cast<double>(cols);
               for (std::size_t c = 0; c < cols; ++c)
                 sx[r * cols + c] += rstd[r] * static_cast<real>(dxhat[c] - m1 - hrow[c] * m2);
             }
           });
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids) {
  expect_rank(table, 2, "embedding_lookup");
  const std::size_t vocab = table.dim(0), cols = table.dim(1);
  for (auto id : ids)
    require(id >= 0 && static_cast<std::size_t>(id) < vocab, ErrorKind::input,
            "embedding id " + std::to_string(id) + " outside table of " + std::to_string(vocab) + " rows");
  const bool track = should_record({table});
  Tensor out = new_output({ids.size(), cols}, track);
  auto t = table.data();
  auto o = out.data();
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(t.data() + static_cast<std::size_t>(ids[i]) * cols, cols, o.data() + i * cols);
  if (track) {
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    record({table}, out, [table, out, cols, saved = std::move(saved)]() mutable {
      auto g = out.grad();
      auto s = grad_sink(table);
      for (std::size_t i = 0; i < saved.size(); ++i) {
        real* dst = s.data() + static_cast<std::size_t>(saved[i]) * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += g[i * cols + c];
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, real p, Rng& rng, bool training) {
  require(p >= 0.0f && p < 1.0f, ErrorKind::parameter, "dropout probability must be in [0, 1)");
  if (!training || p == 0.0f) return x;
  const real keep_scale = 1.0f / (1.0f - p);
  std::vector<real> mask(x.numel());
  for (auto& m : mask) m = rng.uniform() < p ? 0.0f : keep_scale;
  const bool track = should_record({x});
  Tensor out = new_output(x.shape(), track);
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * mask[i];
  if (track) {
    record({x}, out, [x, out, mask = std::move(mask)]() mutable {
      auto g = out.grad();
      auto s = grad_sink(x);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += g[i] * mask[i];
    });
  }
  return out;
}

Tensor softmax_T(const Tensor& z, real T) {
  require(T > 0.0f, ErrorKind::parameter, "softmax temperature must be positive");
  require(z.rank() >= 1 && z.numel() > 0, ErrorKind::dimension, "softmax of empty tensor");
  const std::size_t cols = last_dim(z);
  const std::size_t rows = z.numel() / cols;
  const bool track = should_record({z});
  Tensor out = new_output(z.shape(), track);
  auto in = z.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const real* row = in.data() + r * cols;
    real* dst = o.data() + r * cols;
    const real hi = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      dst[c] = std::exp((row[c] - hi) / T);
      total += dst[c];
    }
    const real inv = static_cast<real>(1.0 / total);
    for (std::size_t c = 0; c < cols; ++c) dst[c] *= inv;
  }
  if (track) {
    record({z}, out, [z, out, rows, cols, T]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto s = grad_sink(z);
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c;
          s[i] += y[i] * static_cast<real>(g[i] - dot) / T;
        }
      }
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  expect_rank(x, 2, "gather_rows");
  const std::size_t n = x.dim(0), cols = x.dim(1);
  for (auto r : rows) require(r < n, ErrorKind::input, "gather_rows: row " + std::to_string(r) + " out of range");
  const bool track = should_record({x});
  Tensor out = new_output({rows.size(), cols}, track);
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(in.data() + rows[i] * cols, cols, o.data() + i * cols);
  if (track) {
    std::vector<std::size_t> saved(rows.begin(), rows.end());
    record({x}, out, [x, out, cols, saved = std::move(saved)]() mutable {
      auto g = out.grad();
      auto s = grad_sink(x);
      for (std::size_t i = 0; i < saved.size(); ++i)
        for (std::size_t c = 0; c < cols; ++c) s[saved[i] * cols + c] += g[i * cols + c];
    });
  }
  return out;
}

namespace {

// Index map between [B·L×H] and [B·h×L×dh]; returns source index for each output element.
template <class F>
void for_each_head_element(std::size_t batch, std::size_t len, std::size_t heads, std::size_t head_dim, F&& f) {
  const std::size_t hidden = heads * head_dim;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t d = 0; d < head_dim; ++d)
          f(((b * heads + h) * len + t) * head_dim + d, (b * len + t) * hidden + h * head_dim + d);
}

}  // namespace

Tensor split_heads(const Tensor& x, std::size_t batch, std::size_t heads) {
  expect_rank(x, 2, "split_heads");
  require(batch > 0 && heads > 0 && x.dim(0) % batch == 0 && x.dim(1) % heads == 0, ErrorKind::dimension,
          "split_heads: " + shape_str(x.shape()) + " into " + std::to_string(batch) + " sequences, " +
              std::to_string(heads) + " heads");
  const std::size_t len = x.dim(0) / batch, head_dim = x.dim(1) / heads;
  const bool track = should_record({x});
  Tensor out = new_output({batch * heads, len, head_dim}, track);
  auto in = x.data();
  auto o = out.data();
  for_each_head_element(batch, len, heads, head_dim, [&](std::size_t dst, std::size_t src) { o[dst] = in[src]; });
  if (track) {
    record({x}, out, [x, out, batch, len, heads, head_dim]() mutable {
      auto g = out.grad();
      auto s = grad_sink(x);
      for_each_head_element(batch, len, heads, head_dim, [&](std::size_t dst, std::size_t src) { s[src] += g[dst]; });
    });
  }
  return out;
}

Tensor merge_heads(const Tensor& x, std::size_t batch, std::size_t heads) {
  expect_rank(x, 3, "merge_heads");
  require(batch > 0 && heads > 0 && x.dim(0) == batch * heads, ErrorKind::dimension,
          "merge_heads: " + shape_str(x.shape()) + " from " + std::to_string(batch) + " sequences");
  const std::size_t len = x.dim(1), head_dim = x.dim(2);
  const bool track = should_record({x});
  Tensor out = new_output({batch * len, heads * head_dim}, track);
  auto in = x.data();
  auto o = out.data();
  for_each_head_element(batch, len, heads, head_dim, [&](std::size_t src, std::size_t dst) { o[dst] = in[src]; });
  if (track) {
    record({x}, out, [x, out, batch, len, heads, head_dim]() mutable {
      auto g = out.grad();
      auto s = grad_sink(x);
      for_each_head_element(batch, len, heads, head_dim, [&](std::size_t src, std::size_t dst) { s[src] += g[dst]; });
    });
  }
  return out;
}

Tensor segment_mean(const Tensor& x, std::size_t segments) {
  expect_rank(x, 3, "segment_mean");
  const std::size_t groups = x.dim(0), n = x.dim(1), d = x.dim(2);
  require(segments >= 1 && segments <= n, ErrorKind::parameter,
          "segment_mean: " + std::to_string(segments) + " segments over " + std::to_string(n) + " rows");
  std::vector<std::size_t> bounds(segments + 1);
  for (std::size_t k = 0; k <= segments; ++k) bounds[k] = k * n / segments;
  const bool track = should_record({x});
  Tensor out = new_output({groups, segments, d}, track);
  auto in = x.data();
  auto o = out.data();
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t k = 0; k < segments; ++k) {
      const real inv = 1.0f / static_cast<real>(bounds[k + 1] - bounds[k]);
      real* dst = o.data() + (g * segments + k) * d;
      for (std::size_t r = bounds[k]; r < bounds[k + 1]; ++r)
        for (std::size_t c = 0; c < d; ++c) dst[c] += in[(g * n + r) * d + c];
      for (std::size_t c = 0; c < d; ++c) dst[c] *= inv;
    }
  if (track) {
    record({x}, out, [x, out, groups, n, d, segments, bounds = std::move(bounds)]() mutable {
      auto go = out.grad();
      auto s = grad_sink(x);
      for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t k = 0; k < segments; ++k) {
          const real inv = 1.0f / static_cast<real>(bounds[k + 1] - bounds[k]);
          for (std::size_t r = bounds[k]; r < bounds[k + 1]; ++r)
            for (std::size_t c = 0; c < d; ++c) s[(g * n + r) * d + c] += go[(g * segments + k) * d + c] * inv;
        }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(), ErrorKind::dimension,
          "reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  const bool track = should_record({x});
  Tensor out = Tensor::from(std::move(shape), x.data(), track);
  if (track) {
    record({x}, out, [x, out]() mutable {
      auto g = out.grad();
      auto s = grad_sink(x);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += g[i];
    });
  }
  return out;
}

}  // namespace eadl
