#include "eadl/corpus/conll.hpp"

#include <algorithm>
#include <fstream>

#include "eadl/corpus/tokenizer.hpp"
#include "eadl/error.hpp"

namespace eadl {

std::int32_t tag_index(std::string_view label) {
  for (std::size_t i = 0; i < kBioLabels.size(); ++i)
    if (kBioLabels[i] == label) return static_cast<std::int32_t>(i);
  fail(ErrorKind::input, "unknown tag '" + std::string(label) + "'");
}

std::vector<std::string> bio_label_list() { return {kBioLabels.begin(), kBioLabels.end()}; }

std::size_t repair_bio(std::vector<std::string>& tags) {
  std::size_t repairs = 0;
  std::string_view prev_type;
  for (auto& tag : tags) {
    tag_index(tag);
    if (tag == "O") {
      prev_type = {};
      continue;
    }
    const std::string_view type = std::string_view(tag).substr(2);
    if (tag[0] == 'I' && type != prev_type) {
      tag[0] = 'B';
      ++repairs;
    }
    prev_type = std::string_view(tag).substr(2);
  }
  return repairs;
}

ConllData parse_conll(std::istream& is) {
  ConllData out;
  TaggedSentence current;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    out.repairs += repair_bio(current.tags);
    out.sentences.push_back(std::move(current));
    current = {};
  };
  std::string line;
  for (std::size_t n = 1; std::getline(is, line); ++n) {
    auto cols = split_whitespace(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols.front() == "-DOCSTART-") continue;
    require(cols.size() >= 2, ErrorKind::input, "line " + std::to_string(n) + ": expected a token and a tag column");
    try {
      tag_index(cols.back());
    } catch (const Error& e) {
      fail(ErrorKind::input, "line " + std::to_string(n) + ": " + e.what());
    }
    current.tokens.push_back(cols.front());
    current.tags.push_back(cols.back());
  }
  flush();
  return out;
}

ConllData load_conll(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::input, "cannot open " + path.string());
  return parse_conll(is);
}

void write_conll(std::ostream& os, const std::vector<TaggedSentence>& sentences) {
  for (const auto& s : sentences) {
    require(s.tokens.size() == s.tags.size(), ErrorKind::input, "sentence tokens and tags differ in length");
    for (std::size_t i = 0; i < s.tokens.size(); ++i) os << s.tokens[i] << ' ' << s.tags[i] << '\n';
    os << '\n';
  }
}

void write_conll(const std::filesystem::path& path, const std::vector<TaggedSentence>& sentences) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::input, "cannot open " + path.string() + " for writing");
  write_conll(os, sentences);
}

std::vector<TaggedSentence> truncate_sentences(std::vector<TaggedSentence> sentences, std::size_t max_tokens) {
  for (auto& s : sentences) {
    if (s.tokens.size() <= max_tokens) continue;
    s.tokens.resize(max_tokens);
    s.tags.resize(max_tokens);
  }
  return sentences;
}

}  // namespace eadl
