#include "eadl/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "eadl/error.hpp"
#include "eadl/numcore/rng.hpp"

namespace eadl {

namespace {

real evaluate(const std::function<Tensor()>& f) {
  NoGradScope no_grad;
  Tensor v = f();
  require(v.defined() && v.numel() == 1, ErrorKind::dimension, "finite_diff_check: f must return a scalar");
  return v.item();
}

bool same_bits(real a, real b) { return std::memcmp(&a, &b, sizeof(real)) == 0; }

}  // namespace

GradCheckReport finite_diff_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  const GradCheckOptions& options) {
  require(options.eps > 0.0f, ErrorKind::parameter, "finite_diff_check: eps must be positive");
  require(!params.empty(), ErrorKind::parameter, "finite_diff_check: no parameters");

  for (auto& p : params) {
    p.set_requires_grad(true);
    p.drop_grad();
  }
  real taped_value = 0.0f;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f();
    taped_value = loss.item();
    backward(loss, tape);
  }
  for (auto& p : params) p.ensure_grad();

  const real base = evaluate(f);
  require(same_bits(base, evaluate(f)) && same_bits(base, taped_value), ErrorKind::protocol,
          "finite_diff_check: f is not deterministic (disable dropout or seed it per call)");

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const auto& p : params) total += p.numel();
  if (total <= options.samples) {
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i].numel(); ++j) coords.emplace_back(i, j);
  } else {
    Rng rng(options.seed);
    for (std::size_t s = 0; s < options.samples; ++s) {
      std::size_t flat = rng.below(total);
      std::size_t i = 0;
      while (flat >= params[i].numel()) flat -= params[i++].numel();
      coords.emplace_back(i, flat);
    }
  }

  GradCheckReport report;
  for (auto [i, j] : coords) {
    auto data = params[i].data();
    const real original = data[j];
    const real up = original + options.eps;
    const real down = original - options.eps;
    data[j] = up;
    const double f_up = evaluate(f);
    data[j] = down;
    const double f_down = evaluate(f);
    data[j] = original;

    const double numeric = (f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down));
    const double analytic = params[i].grad()[j];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), options.denom_floor});
    const double rel = std::abs(numeric - analytic) / denom;
    ++report.coordinates;
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = i;
      report.worst_index = j;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace eadl
