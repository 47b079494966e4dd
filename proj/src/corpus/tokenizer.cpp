#include "eadl/corpus/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "eadl/error.hpp"

namespace eadl {

namespace {
const std::vector<std::string> kSpecials{"[PAD]", "[UNK]", "[SEP]", "[MASK]"};
}

Vocabulary::Vocabulary() : Vocabulary(kSpecials) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  require(tokens_.size() >= kSpecials.size() && std::equal(kSpecials.begin(), kSpecials.end(), tokens_.begin()),
          ErrorKind::input, "vocabulary must start with [PAD] [UNK] [SEP] [MASK]");
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    require(index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second, ErrorKind::input,
            "duplicate vocabulary entry '" + tokens_[i] + "'");
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t max_size, std::size_t min_count) {
  require(max_size >= kSpecials.size(), ErrorKind::parameter, "vocabulary size must leave room for special tokens");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts)
    for (auto& w : split_whitespace(t)) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = kSpecials;
  for (const auto& [word, count] : ranked) {
    if (tokens.size() >= max_size || count < min_count) break;
    if (std::find(kSpecials.begin(), kSpecials.end(), word) == kSpecials.end()) tokens.push_back(word);
  }
  return Vocabulary(std::move(tokens));
}

std::int32_t Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), ErrorKind::input,
          "token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::encode(std::string_view text) const { return encode_words(split_whitespace(text)); }

std::vector<std::int32_t> Vocabulary::encode_words(const std::vector<std::string>& words) const {
  std::vector<std::int32_t> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(id(w));
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

void validate(const MaskPolicy& p) {
  require(p.rate >= 0 && p.rate <= 1, ErrorKind::parameter, "mask rate must be in [0, 1]");
  require(p.mask_frac >= 0 && p.random_frac >= 0 && p.mask_frac + p.random_frac <= 1, ErrorKind::parameter,
          "mask and random fractions must be non-negative and sum to at most 1");
}

MaskedSequence mask_sequence(const std::vector<std::int32_t>& ids, std::size_t vocab_size, const MaskPolicy& policy,
                             Rng& rng) {
  MaskedSequence out{ids, {}};
  const std::size_t words = vocab_size > Vocabulary::kFirstWord ? vocab_size - Vocabulary::kFirstWord : 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (Vocabulary::is_special(ids[i])) continue;
    if (!(rng.uniform() < policy.rate)) continue;
    out.targets.push_back({i, ids[i]});
    const double r = rng.uniform();
    if (r < policy.mask_frac)
      out.input_ids[i] = Vocabulary::kMask;
    else if (r < policy.mask_frac + policy.random_frac && words > 0)
      out.input_ids[i] = Vocabulary::kFirstWord + static_cast<std::int32_t>(rng.below(words));
  }
  return out;
}

std::vector<std::vector<std::int32_t>> pack_sequences(const std::vector<std::string>& texts, const Vocabulary& vocab,
                                                      std::size_t seq_len) {
  require(seq_len >= 1, ErrorKind::parameter, "seq_len must be >= 1");
  std::vector<std::int32_t> stream;
  for (const auto& t : texts) {
    auto ids = vocab.encode(t);
    if (ids.empty()) continue;
    stream.insert(stream.end(), ids.begin(), ids.end());
    stream.push_back(Vocabulary::kSep);
  }
  std::vector<std::vector<std::int32_t>> chunks;
  for (std::size_t start = 0; start + seq_len <= stream.size(); start += seq_len)
    chunks.emplace_back(stream.begin() + static_cast<std::ptrdiff_t>(start),
                        stream.begin() + static_cast<std::ptrdiff_t>(start + seq_len));
  return chunks;
}

PackedCorpus tokenize_pack(const std::vector<std::string>& texts, const Vocabulary& vocab, std::size_t seq_len,
                           const MaskPolicy& policy, std::uint64_t seed) {
  validate(policy);
  PackedCorpus out;
  const Rng root(seed);
  for (const auto& chunk : pack_sequences(texts, vocab, seq_len)) {
    Rng rng = root.split(out.chunks.size());
    out.chunks.push_back(mask_sequence(chunk, vocab.size(), policy, rng));
  }
  out.status = out.chunks.empty() ? StreamStatus::empty : StreamStatus::ok;
  return out;
}

BatchStream::BatchStream(std::vector<std::vector<std::int32_t>> chunks, std::size_t vocab_size, Options options)
    : chunks_(std::move(chunks)), vocab_size_(vocab_size), options_(options) {
  require(options_.batch_size >= 1, ErrorKind::parameter, "batch_size must be >= 1");
  validate(options_.mask);
  for (const auto& c : chunks_)
    require(c.size() == chunks_.front().size(), ErrorKind::input, "packed chunks must share one length");
  if (!chunks_.empty()) start_epoch();
}

std::size_t BatchStream::batches_per_epoch() const {
  if (chunks_.empty()) return 0;
  return chunks_.size() / std::min(options_.batch_size, chunks_.size());
}

bool BatchStream::exhausted() const { return chunks_.empty() || epoch_ >= options_.epochs; }

void BatchStream::start_epoch() {
  order_.resize(chunks_.size());
  std::iota(order_.begin(), order_.end(), 0);
  Rng rng = Rng(options_.seed).split(2 * epoch_);
  for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng.below(i)]);
  cursor_ = 0;
}

std::optional<MaskedBatch> BatchStream::next() {
  if (exhausted()) return std::nullopt;
  const std::size_t batch = std::min(options_.batch_size, chunks_.size());
  const std::size_t len = chunks_.front().size();
  const std::size_t index = epoch_ * batches_per_epoch() + cursor_ / batch;
  Rng mask_root = Rng(options_.seed).split(2 * epoch_ + 1);
  MaskedBatch out{batch, len, {}, {}, {}};
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& chunk = chunks_[order_[cursor_ + b]];
    Rng rng = mask_root.split(index * batch + b);
    auto masked = mask_sequence(chunk, vocab_size_, options_.mask, rng);
    out.input_ids.insert(out.input_ids.end(), masked.input_ids.begin(), masked.input_ids.end());
    out.original_ids.insert(out.original_ids.end(), chunk.begin(), chunk.end());
    for (auto t : masked.targets) out.targets.push_back({b * len + t.position, t.token});
  }
  cursor_ += batch;
  if (cursor_ + batch > chunks_.size()) {
    ++epoch_;
    if (epoch_ < options_.epochs) start_epoch();
  }
  return out;
}

}  // namespace eadl
