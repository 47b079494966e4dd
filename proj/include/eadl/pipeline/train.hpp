#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "eadl/corpus/conll.hpp"
#include "eadl/corpus/tokenizer.hpp"
#include "eadl/pipeline/distill.hpp"

namespace eadl {

struct StepRecord {
  std::size_t step = 0;
  double total = 0, mlm = 0, ce = 0, cse = 0, lr = 0;
};

enum class RunStatus { complete, corpus_exhausted };
const char* to_string(RunStatus s) noexcept;

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepRecord> log;
  RunStatus status = RunStatus::complete;
  std::size_t steps_done = 0;
};

// step,loss_total,loss_mlm,loss_ce,loss_cse,lr
void write_loss_csv(std::ostream& os, const std::vector<StepRecord>& log);

using BatchSource = std::function<std::optional<MaskedBatch>()>;
inline BatchSource source_of(BatchStream& stream) {
  return [&stream] { return stream.next(); };
}

// Each optimizer step consumes recipe.grad_accum batches. If the source runs dry the
// run stops with corpus_exhausted and the partially trained model is returned.
TrainResult run_distillation(const Checkpoint& teacher, const BatchSource& batches, const DistillRecipe& recipe);
TrainResult run_mlm_pretrain(const Checkpoint& start, const BatchSource& batches, const DistillRecipe& recipe);

struct TaggedBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::int32_t> ids;
  std::vector<MaskedTarget> labels;  // padding positions are left out
};

// Sentences encoded with `vocab`, cut at max_length, grouped into batches padded to the
// longest member. Order is reshuffled each epoch from the seed.
class TaggedStream {
 public:
  TaggedStream(const std::vector<TaggedSentence>& sentences, const Vocabulary& vocab, std::size_t max_length,
               std::size_t batch_size, std::size_t epochs, std::uint64_t seed);
  std::optional<TaggedBatch> next();

 private:
  std::vector<std::vector<std::int32_t>> ids_, tags_;
  std::size_t batch_size_, epochs_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0, cursor_ = 0;
  std::vector<std::size_t> order_;
  void start_epoch();
};

using TaggedSource = std::function<std::optional<TaggedBatch>()>;
TrainResult run_finetune_tokencls(const Checkpoint& start, const TaggedSource& batches, const DistillRecipe& recipe);

// Per-token argmax tags, one sentence at a time (no padding).
std::vector<std::vector<std::string>> predict_tags(const Checkpoint& ckpt, const Vocabulary& vocab,
                                                   const std::vector<TaggedSentence>& sentences);

// Top-1 accuracy of the MLM head at masked positions.
double masked_token_accuracy(const Checkpoint& ckpt, const std::vector<MaskedSequence>& chunks);

}  // namespace eadl
