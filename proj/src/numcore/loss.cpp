#include "eadl/numcore/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "eadl/error.hpp"
#include "eadl/numcore/autograd.hpp"

namespace eadl {

using detail::grad_sink;
using detail::new_output;
using detail::record;
using detail::should_record;

namespace {

// log-softmax of row/T, written into dst; returns nothing.
void log_softmax_row(const real* row, std::size_t n, real T, double* dst) {
  const real hi = *std::max_element(row, row + n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::exp(static_cast<double>(row[i] - hi) / T);
  const double log_total = std::log(total);
  for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<double>(row[i] - hi) / T - log_total;
}

}  // namespace

Tensor cross_entropy_soft(const Tensor& student_logits, const Tensor& teacher_probs, real T) {
  require(T > 0.0f, ErrorKind::parameter, "temperature must be positive");
  require(student_logits.shape() == teacher_probs.shape() && student_logits.rank() >= 1 && student_logits.rank() <= 2,
          ErrorKind::dimension,
          "cross_entropy_soft: " + shape_str(student_logits.shape()) + " vs " + shape_str(teacher_probs.shape()));
  const std::size_t n = student_logits.shape().back();
  const std::size_t rows = student_logits.numel() / n;
  auto p = teacher_probs.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += p[r * n + i];
    require(std::abs(total - 1.0) <= 1e-5, ErrorKind::input,
            "teacher probabilities in row " + std::to_string(r) + " sum to " + std::to_string(total));
  }

  const bool track = should_record({student_logits});
  Tensor out = new_output({1}, track);
  std::vector<double> logq(n);
  auto s = student_logits.data();
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    log_softmax_row(s.data() + r * n, n, T, logq.data());
    for (std::size_t i = 0; i < n; ++i)
      if (p[r * n + i] != 0.0f) loss -= p[r * n + i] * logq[i];
  }
  out.data()[0] = static_cast<real>(loss / static_cast<double>(rows));

  if (track) {
    record({student_logits, teacher_probs}, out, [student_logits, teacher_probs, out, n, rows, T]() mutable {
      const double g = out.grad()[0] / static_cast<double>(rows);
      auto sink = grad_sink(student_logits);
      auto s = student_logits.data();
      auto p = teacher_probs.data();
      std::vector<double> logq(n);
      for (std::size_t r = 0; r < rows; ++r) {
        log_softmax_row(s.data() + r * n, n, T, logq.data());
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += p[r * n + i];
        // d/ds_i = (mass·q_i − p_i) / T
        for (std::size_t i = 0; i < n; ++i)
          sink[r * n + i] += static_cast<real>(g * (mass * std::exp(logq[i]) - p[r * n + i]) / T);
      }
    });
  }
  return out;
}

Tensor cosine_embedding_loss(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape() && a.rank() >= 1 && a.rank() <= 2, ErrorKind::dimension,
          "cosine_embedding_loss: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  auto x = a.data();
  auto y = b.data();
  std::vector<double> dots(rows), na(rows), nb(rows);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double u = x[r * d + i], v = y[r * d + i];
      dot += u * v;
      aa += u * u;
      bb += v * v;
    }
    require(aa > 0.0 && bb > 0.0, ErrorKind::numeric, "cosine_embedding_loss: zero-norm vector in row " + std::to_string(r));
    dots[r] = dot;
    na[r] = std::sqrt(aa);
    nb[r] = std::sqrt(bb);
    loss += 1.0 - dot / (na[r] * nb[r]);
  }
  const bool track = should_record({a, b});
  Tensor out = new_output({1}, track);
  out.data()[0] = static_cast<real>(loss / static_cast<double>(rows));

  if (track) {
    record({a, b}, out, [a, b, out, d, rows, dots = std::move(dots), na = std::move(na), nb = std::move(nb)]() mutable {
      const double g = out.grad()[0] / static_cast<double>(rows);
      auto x = a.data();
      auto y = b.data();
      auto sa = grad_sink(a);
      auto sb = grad_sink(b);
      for (std::size_t r = 0; r < rows; ++r) {
        const double cos = dots[r] / (na[r] * nb[r]);
        for (std::size_t i = 0; i < d; ++i) {
          const double u = x[r * d + i], v = y[r * d + i];
          // ∂cos/∂a = b/(|a||b|) − cos·a/|a|²
          if (!sa.empty()) sa[r * d + i] -= static_cast<real>(g * (v / (na[r] * nb[r]) - cos * u / (na[r] * na[r])));
          if (!sb.empty()) sb[r * d + i] -= static_cast<real>(g * (u / (na[r] * nb[r]) - cos * v / (nb[r] * nb[r])));
        }
      }
    });
  }
  return out;
}

Tensor mlm_cross_entropy(const Tensor& logits, std::span<const MaskedTarget> targets) {
  require(logits.rank() == 2, ErrorKind::dimension, "mlm_cross_entropy expects [L×V] logits");
  const std::size_t len = logits.dim(0), vocab = logits.dim(1);
  for (const auto& t : targets) {
    require(t.position < len, ErrorKind::input, "masked position " + std::to_string(t.position) + " beyond length");
    require(t.token >= 0 && static_cast<std::size_t>(t.token) < vocab, ErrorKind::input,
            "target id " + std::to_string(t.token) + " outside vocabulary");
  }
  const bool track = should_record({logits});
  Tensor out = new_output({1}, track);
  std::vector<MaskedTarget> saved(targets.begin(), targets.end());
  std::vector<double> logq(vocab);
  auto z = logits.data();
  double loss = 0.0;
  for (const auto& t : saved) {
    log_softmax_row(z.data() + t.position * vocab, vocab, 1.0f, logq.data());
    loss -= logq[static_cast<std::size_t>(t.token)];
  }
  if (!saved.empty()) loss /= static_cast<double>(saved.size());
  out.data()[0] = static_cast<real>(loss);

  if (track) {
    record({logits}, out, [logits, out, vocab, saved = std::move(saved)]() mutable {
      if (saved.empty()) return;
      const double g = out.grad()[0] / static_cast<double>(saved.size());
      auto z = logits.data();
      auto sink = grad_sink(logits);
      std::vector<double> logq(vocab);
      for (const auto& t : saved) {
        log_softmax_row(z.data() + t.position * vocab, vocab, 1.0f, logq.data());
        real* row = sink.data() + t.position * vocab;
        for (std::size_t i = 0; i < vocab; ++i) row[i] += static_cast<real>(g * std::exp(logq[i]));
        row[static_cast<std::size_t>(t.token)] -= static_cast<real>(g);
      }
    });
  }
  return out;
}

double entropy(std::span<const real> probs) {
  double h = 0.0;
  for (real p : probs)
    if (p > 0.0f) h -= p * std::log(static_cast<double>(p));
  return h;
}

}  // namespace eadl
