#include "eadl/pipeline/distill.hpp"

#include <algorithm>

#include "eadl/error.hpp"
#include "eadl/numcore/ops.hpp"

namespace eadl {

void validate(const DistillRecipe& r) {
  require(r.temperature > 0, ErrorKind::parameter, "temperature must be > 0");
  require(r.alpha >= 0 && r.beta >= 0 && r.gamma >= 0, ErrorKind::parameter, "loss weights must be >= 0");
  require(r.alpha > 0 || r.beta > 0 || r.gamma > 0, ErrorKind::parameter, "at least one loss weight must be > 0");
  require(r.batch_size >= 1 && r.grad_accum >= 1, ErrorKind::parameter, "batch_size and grad_accum must be >= 1");
  validate(r.optimizer);
}

Checkpoint init_student(const Checkpoint& teacher) {
  const std::size_t depth = teacher.config.num_layers;
  require(depth >= 2 && depth % 2 == 0, ErrorKind::parameter,
          "student initialisation needs an even, non-zero teacher depth, got " + std::to_string(depth));
  check_weights(teacher.config, teacher.weights);
  Checkpoint student = clone_checkpoint(teacher);
  auto copies = std::move(student.weights.layers);
  student.weights.layers.clear();
  for (std::size_t k = 0; k < depth / 2; ++k) student.weights.layers.push_back(copies[2 * k]);
  student.config.num_layers = depth / 2;
  return student;
}

ModelOutputs run_model(const Checkpoint& ckpt, const TokenBatch& tokens, Mode mode, Rng* rng) {
  auto enc = forward(ckpt.config, ckpt.weights, tokens, mode, rng);
  ModelOutputs out;
  out.logits = mlm_logits(ckpt.config, ckpt.weights, enc.final_hidden);
  out.final_hidden = enc.final_hidden;
  out.layers = std::move(enc.layers);
  return out;
}

DistillLoss distill_loss(const ModelOutputs& teacher, const ModelOutputs& student,
                         std::span<const MaskedTarget> targets, const DistillRecipe& recipe) {
  validate(recipe);
  require(teacher.final_hidden.shape() == student.final_hidden.shape(), ErrorKind::contract,
          "teacher and student hidden states differ: " + shape_str(teacher.final_hidden.shape()) + " vs " +
              shape_str(student.final_hidden.shape()));
  require(teacher.logits.shape() == student.logits.shape(), ErrorKind::contract,
          "teacher and student logits differ in shape");
  const real T = static_cast<real>(recipe.temperature);

  DistillLoss out;
  out.mlm = mlm_cross_entropy(student.logits, targets);

  std::vector<std::size_t> rows;
  if (recipe.ce_all_positions) {
    rows.resize(student.logits.dim(0));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  } else {
    for (const auto& t : targets) rows.push_back(t.position);
  }
  if (rows.empty()) {
    out.ce = Tensor::zeros({1});
  } else {
    Tensor soft;
    {
      NoGradScope constant;
      soft = softmax_T(gather_rows(teacher.logits, rows), T);
    }
    out.ce = cross_entropy_soft(gather_rows(student.logits, rows), soft, T);
  }

  const Tensor teacher_hidden = teacher.final_hidden.requires_grad() ? teacher.final_hidden.detach() : teacher.final_hidden;
  if (recipe.cse_layer_pairs) {
    // Student block k starts from teacher block 2k and ends where teacher block 2k+1 does.
    require(teacher.layers.size() == 2 * student.layers.size(), ErrorKind::contract,
            "layer-pair cosine loss needs a teacher exactly twice as deep");
    Tensor acc = cosine_embedding_loss(student.final_hidden, teacher_hidden);
    for (std::size_t k = 0; k < student.layers.size(); ++k)
      acc = add(acc, cosine_embedding_loss(student.layers[k], teacher.layers[2 * k + 1].detach()));
    out.cse = scale(acc, static_cast<real>(1.0 / static_cast<double>(student.layers.size() + 1)));
  } else {
    out.cse = cosine_embedding_loss(student.final_hidden, teacher_hidden);
  }

  out.total = add(add(scale(out.mlm, static_cast<real>(recipe.alpha)), scale(out.ce, static_cast<real>(recipe.beta))),
                  scale(out.cse, static_cast<real>(recipe.gamma)));
  return out;
}

}  // namespace eadl
