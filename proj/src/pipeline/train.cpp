#include "eadl/pipeline/train.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>

#include "eadl/error.hpp"
#include "eadl/numcore/ops.hpp"

namespace eadl {

const char* to_string(RunStatus s) noexcept { return s == RunStatus::complete ? "complete" : "corpus_exhausted"; }

void write_loss_csv(std::ostream& os, const std::vector<StepRecord>& log) {
  os << "step,loss_total,loss_mlm,loss_ce,loss_cse,lr\n";
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(9);
  for (const auto& r : log)
    os << r.step << ',' << r.total << ',' << r.mlm << ',' << r.ce << ',' << r.cse << ',' << r.lr << '\n';
  os.flags(flags);
  os.precision(precision);
}

namespace {

// Returns the loss parts for micro-batch `index`, or nothing once the data runs out.
using MicroLoss = std::function<std::optional<DistillLoss>(std::size_t index)>;

TrainResult train_loop(Checkpoint model, const DistillRecipe& recipe, const std::vector<std::string>& frozen,
                       const MicroLoss& micro_loss) {
  validate(recipe);
  TrainResult out;
  auto params = adam_params(model.weights, frozen);
  for (auto& p : params) p.value.set_requires_grad(true);
  AdamState state;
  const double inv_accum = 1.0 / static_cast<double>(recipe.grad_accum);

  for (std::size_t step = 0; step < recipe.steps; ++step) {
    StepRecord rec;
    rec.step = step;
    rec.lr = scheduled_lr(recipe.optimizer, step, recipe.steps);
    bool dry = false;
    for (std::size_t micro = 0; micro < recipe.grad_accum && !dry; ++micro) {
      Tape tape;
      TapeScope scope(tape);
      auto parts = micro_loss(step * recipe.grad_accum + micro);
      if (!parts) {
        dry = true;
        break;
      }
      const Tensor objective =
          recipe.grad_accum == 1 ? parts->total : scale(parts->total, static_cast<real>(inv_accum));
      backward(objective, tape);
      rec.total += parts->total.item() * inv_accum;
      rec.mlm += parts->mlm.item() * inv_accum;
      rec.ce += parts->ce.item() * inv_accum;
      rec.cse += parts->cse.item() * inv_accum;
    }
    if (dry) {
      out.status = RunStatus::corpus_exhausted;
      break;
    }
    adamw_step(params, state, recipe.optimizer, rec.lr);
    for (auto& p : params) p.value.drop_grad();
    out.log.push_back(rec);
    ++out.steps_done;
  }
  for (auto& p : params) {
    p.value.drop_grad();
    p.value.set_requires_grad(false);
  }
  out.checkpoint = std::move(model);
  return out;
}

TokenBatch tokens_of(const MaskedBatch& b) { return TokenBatch{b.batch, b.length, b.input_ids}; }

}  // namespace

TrainResult run_distillation(const Checkpoint& teacher, const BatchSource& batches, const DistillRecipe& recipe) {
  Checkpoint student = init_student(teacher);
  const Rng root(recipe.seed);
  auto micro = [&](std::size_t index) -> std::optional<DistillLoss> {
    auto batch = batches();
    if (!batch) return std::nullopt;
    const TokenBatch tokens = tokens_of(*batch);
    ModelOutputs t;
    {
      NoGradScope frozen;
      t = run_model(teacher, tokens, Mode::eval);
    }
    Rng drop = root.split(index);
    auto s = run_model(student, tokens, Mode::train, &drop);
    return distill_loss(t, s, batch->targets, recipe);
  };
  // Checkpoint copies share tensor storage, so the loop updates what `micro` reads.
  return train_loop(student, recipe, {"cls."}, micro);
}

TrainResult run_mlm_pretrain(const Checkpoint& start, const BatchSource& batches, const DistillRecipe& recipe) {
  Checkpoint model = clone_checkpoint(start);
  const Rng root(recipe.seed);
  auto micro = [&](std::size_t index) -> std::optional<DistillLoss> {
    auto batch = batches();
    if (!batch) return std::nullopt;
    Rng drop = root.split(index);
    auto out = run_model(model, tokens_of(*batch), Mode::train, &drop);
    DistillLoss parts;
    parts.mlm = mlm_cross_entropy(out.logits, batch->targets);
    parts.ce = Tensor::zeros({1});
    parts.cse = Tensor::zeros({1});
    parts.total = parts.mlm;
    return parts;
  };
  return train_loop(model, recipe, {"cls."}, micro);
}

TaggedStream::TaggedStream(const std::vector<TaggedSentence>& sentences, const Vocabulary& vocab,
                           std::size_t max_length, std::size_t batch_size, std::size_t epochs, std::uint64_t seed)
    : batch_size_(batch_size), epochs_(epochs), seed_(seed) {
  require(batch_size >= 1 && max_length >= 1, ErrorKind::parameter, "batch_size and max_length must be >= 1");
  for (const auto& s : sentences) {
    require(s.tokens.size() == s.tags.size(), ErrorKind::input, "sentence tokens and tags differ in length");
    if (s.tokens.empty()) continue;
    const std::size_t n = std::min(max_length, s.tokens.size());
    std::vector<std::string> words(s.tokens.begin(), s.tokens.begin() + static_cast<std::ptrdiff_t>(n));
    ids_.push_back(vocab.encode_words(words));
    std::vector<std::int32_t> tags;
    for (std::size_t i = 0; i < n; ++i) tags.push_back(tag_index(s.tags[i]));
    tags_.push_back(std::move(tags));
  }
  if (!ids_.empty()) start_epoch();
}

void TaggedStream::start_epoch() {
  order_.resize(ids_.size());
  std::iota(order_.begin(), order_.end(), 0);
  Rng rng = Rng(seed_).split(epoch_);
  for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng.below(i)]);
  cursor_ = 0;
}

std::optional<TaggedBatch> TaggedStream::next() {
  if (ids_.empty() || epoch_ >= epochs_) return std::nullopt;
  const std::size_t batch = std::min(batch_size_, ids_.size());
  TaggedBatch out;
  out.batch = batch;
  for (std::size_t b = 0; b < batch; ++b) out.length = std::max(out.length, ids_[order_[cursor_ + b]].size());
  out.ids.assign(batch * out.length, Vocabulary::kPad);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& ids = ids_[order_[cursor_ + b]];
    const auto& tags = tags_[order_[cursor_ + b]];
    std::copy(ids.begin(), ids.end(), out.ids.begin() + static_cast<std::ptrdiff_t>(b * out.length));
    for (std::size_t i = 0; i < tags.size(); ++i) out.labels.push_back({b * out.length + i, tags[i]});
  }
  cursor_ += batch;
  if (cursor_ + batch > ids_.size()) {
    ++epoch_;
    if (epoch_ < epochs_) start_epoch();
  }
  return out;
}

TrainResult run_finetune_tokencls(const Checkpoint& start, const TaggedSource& batches, const DistillRecipe& recipe) {
  Checkpoint model = clone_checkpoint(start);
  require(model.config.num_tags == kBioLabels.size(), ErrorKind::contract,
          "token classification expects a head over the nine BIO labels");
  const Rng root(recipe.seed);
  auto micro = [&](std::size_t index) -> std::optional<DistillLoss> {
    auto batch = batches();
    if (!batch) return std::nullopt;
    Rng drop = root.split(index);
    auto enc = forward(model.config, model.weights, TokenBatch{batch->batch, batch->length, batch->ids}, Mode::train,
                       &drop);
    DistillLoss parts;
    parts.total = mlm_cross_entropy(token_classification_logits(model.weights, enc.final_hidden), batch->labels);
    parts.mlm = Tensor::zeros({1});
    parts.ce = Tensor::zeros({1});
    parts.cse = Tensor::zeros({1});
    return parts;
  };
  auto result = train_loop(model, recipe, {"mlm."}, micro);
  result.checkpoint.tag_labels = bio_label_list();
  return result;
}

std::vector<std::vector<std::string>> predict_tags(const Checkpoint& ckpt, const Vocabulary& vocab,
                                                   const std::vector<TaggedSentence>& sentences) {
  NoGradScope inference;
  std::vector<std::vector<std::string>> out;
  for (const auto& s : sentences) {
    std::vector<std::string> tags;
    if (!s.tokens.empty()) {
      TokenBatch tokens{1, s.tokens.size(), vocab.encode_words(s.tokens)};
      auto logits = token_classification_logits(ckpt.weights,
                                                forward(ckpt.config, ckpt.weights, tokens, Mode::eval).final_hidden);
      const std::size_t k = logits.dim(1);
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        auto row = logits.data().subspan(i * k, k);
        const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        tags.emplace_back(best < kBioLabels.size() ? kBioLabels[best] : "O");
      }
    }
    out.push_back(std::move(tags));
  }
  return out;
}

double masked_token_accuracy(const Checkpoint& ckpt, const std::vector<MaskedSequence>& chunks) {
  NoGradScope inference;
  std::size_t hits = 0, total = 0;
  for (const auto& c : chunks) {
    if (c.targets.empty()) continue;
    auto logits = run_model(ckpt, TokenBatch{1, c.input_ids.size(), c.input_ids}, Mode::eval).logits;
    const std::size_t v = logits.dim(1);
    for (const auto& t : c.targets) {
      auto row = logits.data().subspan(t.position * v, v);
      hits += std::max_element(row.begin(), row.end()) - row.begin() == t.token;
      ++total;
    }
  }
  require(total > 0, ErrorKind::input, "no masked positions to score");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace eadl
