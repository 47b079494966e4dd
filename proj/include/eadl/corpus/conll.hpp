#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace eadl {

// The nine-label BIO inventory, in classifier index order.
inline constexpr std::array<std::string_view, 9> kBioLabels{"O",     "B-PER", "I-PER",  "B-ORG", "I-ORG",
                                                            "B-LOC", "I-LOC", "B-MISC", "I-MISC"};
inline constexpr std::array<std::string_view, 4> kEntityTypes{"PER", "ORG", "LOC", "MISC"};

// Index into kBioLabels; ErrorKind::input for anything else.
std::int32_t tag_index(std::string_view label);
std::vector<std::string> bio_label_list();

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  bool operator==(const TaggedSentence&) const = default;
};

// Stray I-X (after O or another type) becomes B-X. Returns the number of changes.
std::size_t repair_bio(std::vector<std::string>& tags);

struct ConllData {
  std::vector<TaggedSentence> sentences;
  std::size_t repairs = 0;
};

// Token in the first column, tag in the last; blank lines end sentences and
// -DOCSTART- lines are skipped. Malformed lines raise ErrorKind::input with the line number.
ConllData parse_conll(std::istream& is);
ConllData load_conll(const std::filesystem::path& path);
void write_conll(std::ostream& os, const std::vector<TaggedSentence>& sentences);
void write_conll(const std::filesystem::path& path, const std::vector<TaggedSentence>& sentences);

// Caps every sentence at max_tokens (evaluation-time truncation).
std::vector<TaggedSentence> truncate_sentences(std::vector<TaggedSentence> sentences, std::size_t max_tokens);

}  // namespace eadl
