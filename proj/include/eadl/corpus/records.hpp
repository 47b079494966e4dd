#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace eadl {

// One JSONL line: {"text", "lang", "lang_prob", "ppl", "flags", "categories"}.
// Absent fields stay empty so the filter can reject them instead of failing.
struct CorpusRecord {
  std::optional<std::string> text;
  std::optional<std::string> lang;
  std::optional<double> lang_prob;
  std::optional<double> perplexity;
  std::optional<std::set<std::string>> quality_flags;
  std::optional<std::set<std::string>> categories;
};

CorpusRecord parse_record(const std::string& line);
std::string record_to_json(const CorpusRecord& r);
// Throws ErrorKind::input naming the offending line.
std::vector<CorpusRecord> read_records(std::istream& is);
void write_records(std::ostream& os, const std::vector<CorpusRecord>& records);

struct DedupPolicy {
  bool exact_hash = true;
  bool shingle = false;
  std::size_t k = 5;
  double jaccard_threshold = 0.8;
};

struct FilterPolicy {
  std::string language = "en";
  double min_lang_prob = 0.80;
  double min_perplexity_exclusive = 13.51;  // kept only when ppl > this
  std::set<std::string> banned_flags{"tiny", "short", "noisy"};
  std::set<std::string> banned_categories;
  DedupPolicy dedup;
};

void validate(const FilterPolicy& policy);

enum class FilterVerdict { keep, missing_metadata, language, quality, perplexity, category };
inline constexpr std::array<FilterVerdict, 6> kAllVerdicts{FilterVerdict::keep,       FilterVerdict::missing_metadata,
                                                           FilterVerdict::language,   FilterVerdict::quality,
                                                           FilterVerdict::perplexity, FilterVerdict::category};
const char* to_string(FilterVerdict v) noexcept;

// First failing check in the order language, quality, perplexity, category.
FilterVerdict filter_record(const CorpusRecord& record, const FilterPolicy& policy);

struct FilterResult {
  std::vector<CorpusRecord> kept;
  std::map<FilterVerdict, std::size_t> counts;  // every verdict present, zero when unused
  std::size_t duplicates = 0;
};

// Filters, then deduplicates the survivors.
FilterResult filter_stream(const std::vector<CorpusRecord>& records, const FilterPolicy& policy);
// reason,count rows; "duplicate" follows the filter verdicts.
void write_filter_report(std::ostream& os, const FilterResult& result);

// Lowercased, whitespace runs collapsed to one space, trimmed.
std::string normalize_text(const std::string& text);
double shingle_jaccard(const std::string& a, const std::string& b, std::size_t k);
// First occurrence kept, order preserved. Records without text are passed through.
std::vector<CorpusRecord> dedup_stream(const std::vector<CorpusRecord>& records, const DedupPolicy& policy,
                                       std::size_t* dropped = nullptr);

}  // namespace eadl
