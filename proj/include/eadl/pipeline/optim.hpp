#pragma once

#include <cstddef>
#include <vector>

#include "eadl/encoder/model.hpp"

namespace eadl {

struct OptimizerConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  bool operator==(const OptimizerConfig&) const = default;
};

void validate(const OptimizerConfig& config);

// Linear warmup over ⌈warmup_fraction·total⌉ steps, then linear decay to zero.
double scheduled_lr(const OptimizerConfig& config, std::size_t step, std::size_t total_steps);

struct AdamParam {
  Tensor value;
  bool decay = true;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t step = 0;
};

// One decoupled-weight-decay Adam update with bias correction. Parameters without a
// gradient buffer are left untouched (their moments do not advance).
void adamw_step(std::vector<AdamParam>& params, AdamState& state, const OptimizerConfig& config, double lr);

// Trainable parameters of a model, with the decay flag taken from the parameter name.
// Names starting with any of `skip_prefixes` are left out.
std::vector<AdamParam> adam_params(const ModelWeights& w, const std::vector<std::string>& skip_prefixes = {});

}  // namespace eadl
