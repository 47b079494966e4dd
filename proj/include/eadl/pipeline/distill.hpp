#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eadl/encoder/checkpoint.hpp"
#include "eadl/numcore/loss.hpp"
#include "eadl/pipeline/optim.hpp"

namespace eadl {

struct DistillRecipe {
  double alpha = 2.0;
  double beta = 5.0;
  double gamma = 1.0;
  double temperature = 2.0;
  OptimizerConfig optimizer;
  std::size_t steps = 200;
  std::size_t batch_size = 8;
  std::size_t grad_accum = 1;
  std::uint64_t seed = 0;
  bool ce_all_positions = false;  // default: soft targets at masked positions only
  bool cse_layer_pairs = false;   // default: final hidden states only
};

void validate(const DistillRecipe& recipe);

// Student layer k is a copy of teacher layer 2k; everything else is copied as is.
Checkpoint init_student(const Checkpoint& teacher);

struct ModelOutputs {
  Tensor logits;        // [N × vocab]
  Tensor final_hidden;  // [N × hidden]
  std::vector<Tensor> layers;
};

ModelOutputs run_model(const Checkpoint& ckpt, const TokenBatch& tokens, Mode mode, Rng* rng = nullptr);

struct DistillLoss {
  Tensor total, mlm, ce, cse;
};

// total = α·mlm + β·ce + γ·cse. ce compares student logits against
// softmax_T(teacher logits, T); cse is 1 − cos between hidden states, averaged over positions.
// The teacher outputs are treated as constants.
DistillLoss distill_loss(const ModelOutputs& teacher, const ModelOutputs& student,
                         std::span<const MaskedTarget> targets, const DistillRecipe& recipe);

}  // namespace eadl
