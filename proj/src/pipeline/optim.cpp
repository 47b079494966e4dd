#include "eadl/pipeline/optim.hpp"

#include <cmath>

#include "eadl/error.hpp"

namespace eadl {

void validate(const OptimizerConfig& c) {
  require(c.lr >= 0, ErrorKind::parameter, "learning rate must be >= 0");
  require(c.beta1 >= 0 && c.beta1 < 1 && c.beta2 >= 0 && c.beta2 < 1, ErrorKind::parameter,
          "adam betas must be in [0, 1)");
  require(c.eps > 0, ErrorKind::parameter, "adam eps must be > 0");
  require(c.weight_decay >= 0, ErrorKind::parameter, "weight_decay must be >= 0");
  require(c.warmup_fraction >= 0 && c.warmup_fraction <= 1, ErrorKind::parameter,
          "warmup_fraction must be in [0, 1]");
}

double scheduled_lr(const OptimizerConfig& c, std::size_t step, std::size_t total) {
  if (total == 0) return c.lr;
  const auto warmup = static_cast<std::size_t>(std::ceil(c.warmup_fraction * static_cast<double>(total)));
  if (step < warmup) return c.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (step >= total) return 0.0;
  return c.lr * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

void adamw_step(std::vector<AdamParam>& params, AdamState& state, const OptimizerConfig& c, double lr) {
  if (state.m.size() != params.size()) {
    require(state.step == 0, ErrorKind::contract, "optimizer state does not match the parameter list");
    state.m.resize(params.size());
    state.v.resize(params.size());
  }
  ++state.step;
  const double bc1 = 1 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].value;
    if (!p.has_grad()) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.empty()) {
      m.assign(p.numel(), 0.0);
      v.assign(p.numel(), 0.0);
    }
    require(m.size() == p.numel(), ErrorKind::contract, "optimizer moment shape drifted");
    auto g = p.grad();
    auto x = p.data();
    const double decay = params[i].decay ? lr * c.weight_decay : 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1 - c.beta2) * double(g[k]) * g[k];
      const double update = (m[k] / bc1) / (std::sqrt(v[k] / bc2) + c.eps);
      x[k] = static_cast<real>(x[k] - decay * x[k] - lr * update);
    }
  }
}

std::vector<AdamParam> adam_params(const ModelWeights& w, const std::vector<std::string>& skip_prefixes) {
  std::vector<AdamParam> out;
  for (auto& [name, t] : named_parameters(w)) {
    bool skip = false;
    for (const auto& prefix : skip_prefixes) skip |= name.rfind(prefix, 0) == 0;
    if (!skip) out.push_back({t, is_decayed(name)});
  }
  return out;
}

}  // namespace eadl
