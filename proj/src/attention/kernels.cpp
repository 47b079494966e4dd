#include "eadl/attention/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "eadl/error.hpp"
#include "eadl/numcore/autograd.hpp"
#include "eadl/numcore/ops.hpp"

namespace eadl {

using detail::grad_sink;
using detail::record;
using detail::should_record;

namespace {

void check_qkv(const Tensor& q, const Tensor& k, const Tensor& v, const char* op) {
  require(q.rank() == 3 && q.shape() == k.shape() && q.shape() == v.shape(), ErrorKind::dimension,
          std::string(op) + ": Q/K/V must share a [G×n×d] shape, got " + shape_str(q.shape()) + ", " +
              shape_str(k.shape()) + ", " + shape_str(v.shape()));
}

// Z₀ = Aᵀ / (max column abs-sum · max row abs-sum), per group.
Tensor pinv_init(const Tensor& a) {
  const std::size_t groups = a.dim(0), m = a.dim(1);
  const bool track = should_record({a});
  Tensor out = detail::new_output(a.shape(), track);
  std::vector<real> norms(groups);
  std::vector<std::size_t> best_col(groups), best_row(groups);
  std::vector<double> col_norm(groups), row_norm(groups);
  auto x = a.data();
  auto o = out.data();
  for (std::size_t g = 0; g < groups; ++g) {
    const real* ag = x.data() + g * m * m;
    double c1 = -1.0, c2 = -1.0;
    for (std::size_t j = 0; j < m; ++j) {
      double col = 0.0, row = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        col += std::abs(ag[i * m + j]);
        row += std::abs(ag[j * m + i]);
      }
      if (col > c1) c1 = col, best_col[g] = j;
      if (row > c2) c2 = row, best_row[g] = j;
    }
    require(c1 > 0.0 && c2 > 0.0, ErrorKind::numeric, "iterative_pinv: zero matrix");
    col_norm[g] = c1;
    row_norm[g] = c2;
    const real inv = static_cast<real>(1.0 / (c1 * c2));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) o[g * m * m + i * m + j] = ag[j * m + i] * inv;
  }
  if (track) {
    record({a}, out, [a, out, groups, m, best_col, best_row, col_norm, row_norm]() mutable {
      auto go = out.grad();
      auto x = a.data();
      auto s = grad_sink(a);
      for (std::size_t g = 0; g < groups; ++g) {
        const real* ag = x.data() + g * m * m;
        const real* gg = go.data() + g * m * m;
        real* sg = s.data() + g * m * m;
        const double c = col_norm[g] * row_norm[g];
        // out = Aᵀ/c: direct term plus the dependence of c on A.
        double gz = 0.0;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            sg[j * m + i] += static_cast<real>(gg[i * m + j] / c);
            gz += gg[i * m + j] * ag[j * m + i];
          }
        const double dc = -gz / (c * c);
        auto sign = [](real v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };
        for (std::size_t i = 0; i < m; ++i) {
          const std::size_t jc = best_col[g];
          sg[i * m + jc] += static_cast<real>(dc * row_norm[g] * sign(ag[i * m + jc]));
          const std::size_t ir = best_row[g];
          sg[ir * m + i] += static_cast<real>(dc * col_norm[g] * sign(ag[ir * m + i]));
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor masked_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask& mask, real scale) {
  check_qkv(q, k, v, "masked_attention");
  const std::size_t groups = q.dim(0), n = q.dim(1), d = q.dim(2);
  require(mask.length() == n, ErrorKind::dimension,
          "masked_attention: mask built for length " + std::to_string(mask.length()) + ", input has " +
              std::to_string(n));
  const std::size_t pairs = mask.cardinality();
  const bool track = should_record({q, k, v});
  Tensor out = detail::new_output({groups, n, d}, track);
  // Probabilities over allowed pairs only: the score material is G·|mask|.
  Tensor probs = Tensor::zeros({groups, pairs});
  auto qd = q.data();
  auto kd = k.data();
  auto vd = v.data();
  auto od = out.data();
  auto pd = probs.data();
  const auto offsets = mask.offsets();
  for (std::size_t g = 0; g < groups; ++g) {
    const real* qg = qd.data() + g * n * d;
    const real* kg = kd.data() + g * n * d;
    const real* vg = vd.data() + g * n * d;
    real* og = od.data() + g * n * d;
    real* pg = pd.data() + g * pairs;
    for (std::size_t i = 0; i < n; ++i) {
      auto keys = mask.keys(i);
      real* p = pg + offsets[i];
      const real* qi = qg + i * d;
      real hi = -INFINITY;
      for (std::size_t t = 0; t < keys.size(); ++t) {
        const real* kj = kg + keys[t] * d;
        real s = 0;
        for (std::size_t c = 0; c < d; ++c) s += qi[c] * kj[c];
        p[t] = s * scale;
        hi = std::max(hi, p[t]);
      }
      double total = 0.0;
      for (std::size_t t = 0; t < keys.size(); ++t) {
        p[t] = std::exp(p[t] - hi);
        total += p[t];
      }
      const real inv = static_cast<real>(1.0 / total);
      real* oi = og + i * d;
      for (std::size_t t = 0; t < keys.size(); ++t) {
        p[t] *= inv;
        const real* vj = vg + keys[t] * d;
        for (std::size_t c = 0; c < d; ++c) oi[c] += p[t] * vj[c];
      }
    }
  }
  if (track) {
    record({q, k, v}, out, [q, k, v, out, probs, mask, groups, n, d, pairs, scale]() mutable {
      auto go = out.grad();
      auto qd = q.data();
      auto kd = k.data();
      auto vd = v.data();
      auto pd = probs.data();
      auto sq = grad_sink(q);
      auto sk = grad_sink(k);
      auto sv = grad_sink(v);
      const auto offsets = mask.offsets();
      std::vector<real> dp;
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = g * n * d;
        for (std::size_t i = 0; i < n; ++i) {
          auto keys = mask.keys(i);
          const real* p = pd.data() + g * pairs + offsets[i];
          const real* doi = go.data() + base + i * d;
          dp.assign(keys.size(), 0);
          double dot = 0.0;
          for (std::size_t t = 0; t < keys.size(); ++t) {
            const std::size_t j = keys[t];
            const real* vj = vd.data() + base + j * d;
            real acc = 0;
            for (std::size_t c = 0; c < d; ++c) acc += doi[c] * vj[c];
            dp[t] = acc;
            dot += p[t] * acc;
            if (!sv.empty())
              for (std::size_t c = 0; c < d; ++c) sv[base + j * d + c] += p[t] * doi[c];
          }
          for (std::size_t t = 0; t < keys.size(); ++t) {
            const std::size_t j = keys[t];
            const real ds = p[t] * static_cast<real>(dp[t] - dot) * scale;
            if (!sq.empty())
              for (std::size_t c = 0; c < d; ++c) sq[base + i * d + c] += ds * kd[base + j * d + c];
            if (!sk.empty())
              for (std::size_t c = 0; c < d; ++c) sk[base + j * d + c] += ds * qd[base + i * d + c];
          }
        }
      }
    });
  }
  return out;
}

Tensor iterative_pinv(const Tensor& a, std::size_t iters) {
  require(iters >= 1, ErrorKind::parameter, "iterative_pinv needs at least one iteration");
  require((a.rank() == 2 || a.rank() == 3) && a.shape().back() == a.shape()[a.rank() - 2], ErrorKind::dimension,
          "iterative_pinv expects square matrices, got " + shape_str(a.shape()));
  const bool single = a.rank() == 2;
  const Tensor batched = single ? reshape(a, {1, a.dim(0), a.dim(1)}) : a;
  Tensor z = pinv_init(batched);
  for (std::size_t it = 0; it < iters; ++it) {
    Tensor az = bmm(batched, z);
    Tensor inner = bmm(az, identity_minus(az, 7));
    inner = bmm(az, identity_minus(inner, 15));
    z = scale(bmm(z, identity_minus(inner, 13)), 0.25f);
  }
  require(z.all_finite(), ErrorKind::numeric, "iterative_pinv diverged");
  return single ? reshape(z, a.shape()) : z;
}

Tensor nystrom_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t landmarks,
                         std::size_t pinv_iters, real scale_factor) {
  check_qkv(q, k, v, "nystrom_attention");
  const std::size_t n = q.dim(1);
  require(landmarks >= 1 && landmarks <= n, ErrorKind::parameter,
          "nystrom_attention: " + std::to_string(landmarks) + " landmarks for length " + std::to_string(n));
  Tensor q_land = segment_mean(q, landmarks);
  Tensor k_land = segment_mean(k, landmarks);
  Tensor left = softmax_T(scale(bmm_nt(q, k_land), scale_factor), 1);          // [G×n×m]
  Tensor core = softmax_T(scale(bmm_nt(q_land, k_land), scale_factor), 1);     // [G×m×m]
  Tensor right = softmax_T(scale(bmm_nt(q_land, k), scale_factor), 1);         // [G×m×n]
  Tensor core_inv = iterative_pinv(core, pinv_iters);
  return bmm(left, bmm(core_inv, bmm(right, v)));
}

Tensor attend(const AttentionSpec& spec, const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask* mask,
              real scale) {
  if (const auto* s = std::get_if<Nystrom>(&spec))
    return nystrom_attention(q, k, v, std::min(s->landmarks, q.dim(1)), s->pinv_iters, scale);
  require(mask != nullptr, ErrorKind::contract, "masked attention variant called without a mask");
  return masked_attention(q, k, v, *mask, scale);
}

}  // namespace eadl
