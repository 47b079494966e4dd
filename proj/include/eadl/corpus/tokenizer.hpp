#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eadl/numcore/loss.hpp"
#include "eadl/numcore/rng.hpp"

namespace eadl {

// Whitespace tokenizer over a closed vocabulary. Ids 0..3 are reserved.
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0, kUnk = 1, kSep = 2, kMask = 3;
  static constexpr std::int32_t kFirstWord = 4;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);  // must start with the four specials

  // Most frequent words first, ties broken lexicographically; capped at max_size entries
  // including the specials.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t max_size, std::size_t min_count = 1);

  std::int32_t id(std::string_view word) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::int32_t> encode(std::string_view text) const;
  std::vector<std::int32_t> encode_words(const std::vector<std::string>& words) const;
  static bool is_special(std::int32_t id) { return id < kFirstWord; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);

// Of the selected positions: mask_frac become [MASK], random_frac a random word,
// the rest stay unchanged. Special tokens are never selected.
struct MaskPolicy {
  double rate = 0.15;
  double mask_frac = 0.8;
  double random_frac = 0.1;
};

void validate(const MaskPolicy& policy);

struct MaskedSequence {
  std::vector<std::int32_t> input_ids;
  std::vector<MaskedTarget> targets;  // original ids at the selected positions
};

MaskedSequence mask_sequence(const std::vector<std::int32_t>& ids, std::size_t vocab_size, const MaskPolicy& policy,
                             Rng& rng);

// Texts joined by [SEP] and cut into seq_len chunks; the tail that does not fill a chunk is dropped.
std::vector<std::vector<std::int32_t>> pack_sequences(const std::vector<std::string>& texts, const Vocabulary& vocab,
                                                      std::size_t seq_len);

enum class StreamStatus { ok, empty };

struct PackedCorpus {
  StreamStatus status = StreamStatus::empty;
  std::vector<MaskedSequence> chunks;
};

// Chunk i is masked with Rng(seed).split(i).
PackedCorpus tokenize_pack(const std::vector<std::string>& texts, const Vocabulary& vocab, std::size_t seq_len,
                           const MaskPolicy& policy, std::uint64_t seed);

struct MaskedBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::int32_t> input_ids;  // [batch × length]
  std::vector<std::int32_t> original_ids;
  std::vector<MaskedTarget> targets;  // positions index the flattened batch
};

// Walks the packed chunks for a fixed number of epochs. Each epoch shuffles the
// chunk order and re-draws masks from the seed, so the sequence of batches is a
// pure function of (chunks, options).
class BatchStream {
 public:
  struct Options {
    std::size_t batch_size = 8;
    std::size_t epochs = 1;
    MaskPolicy mask;
    std::uint64_t seed = 0;
  };

  BatchStream(std::vector<std::vector<std::int32_t>> chunks, std::size_t vocab_size, Options options);

  std::optional<MaskedBatch> next();
  bool exhausted() const;
  std::size_t batches_per_epoch() const;
  std::size_t chunk_count() const { return chunks_.size(); }

 private:
  std::vector<std::vector<std::int32_t>> chunks_;
  std::size_t vocab_size_;
  Options options_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
  void start_epoch();
};

}  // namespace eadl
