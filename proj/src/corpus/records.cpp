#include "eadl/corpus/records.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "eadl/error.hpp"
#include "json.hpp"

namespace eadl {

using nlohmann::json;

CorpusRecord parse_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("corpus record is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorKind::input, "corpus record must be a JSON object");
  CorpusRecord r;
  try {
    if (j.contains("text")) r.text = j["text"].get<std::string>();
    if (j.contains("lang")) r.lang = j["lang"].get<std::string>();
    if (j.contains("lang_prob")) r.lang_prob = j["lang_prob"].get<double>();
    if (j.contains("ppl")) r.perplexity = j["ppl"].get<double>();
    if (j.contains("flags")) r.quality_flags = j["flags"].get<std::set<std::string>>();
    if (j.contains("categories")) r.categories = j["categories"].get<std::set<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("corpus record field has the wrong type: ") + e.what());
  }
  return r;
}

std::string record_to_json(const CorpusRecord& r) {
  json j = json::object();
  if (r.text) j["text"] = *r.text;
  if (r.lang) j["lang"] = *r.lang;
  if (r.lang_prob) j["lang_prob"] = *r.lang_prob;
  if (r.perplexity) j["ppl"] = *r.perplexity;
  if (r.quality_flags) j["flags"] = *r.quality_flags;
  if (r.categories) j["categories"] = *r.categories;
  return j.dump();
}

std::vector<CorpusRecord> read_records(std::istream& is) {
  std::vector<CorpusRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(is, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_records(std::ostream& os, const std::vector<CorpusRecord>& records) {
  for (const auto& r : records) os << record_to_json(r) << '\n';
}

void validate(const FilterPolicy& p) {
  require(p.min_lang_prob >= 0 && p.min_lang_prob <= 1, ErrorKind::parameter, "min_lang_prob must be in [0, 1]");
  require(p.min_perplexity_exclusive >= 0, ErrorKind::parameter, "min_perplexity_exclusive must be >= 0");
  require(p.dedup.jaccard_threshold > 0 && p.dedup.jaccard_threshold <= 1, ErrorKind::parameter,
          "jaccard_threshold must be in (0, 1]");
  require(p.dedup.k >= 1, ErrorKind::parameter, "shingle k must be >= 1");
}

const char* to_string(FilterVerdict v) noexcept {
  switch (v) {
    case FilterVerdict::keep: return "keep";
    case FilterVerdict::missing_metadata: return "missing_metadata";
    case FilterVerdict::language: return "language";
    case FilterVerdict::quality: return "quality";
    case FilterVerdict::perplexity: return "perplexity";
    case FilterVerdict::category: return "category";
  }
  return "unknown";
}

namespace {

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& x : a)
    if (b.count(x)) return true;
  return false;
}

std::unordered_set<std::string> shingles(const std::string& normalized, std::size_t k) {
  std::unordered_set<std::string> out;
  if (normalized.size() <= k) {
    if (!normalized.empty()) out.insert(normalized);
    return out;
  }
  for (std::size_t i = 0; i + k <= normalized.size(); ++i) out.insert(normalized.substr(i, k));
  return out;
}

double jaccard(const std::unordered_set<std::string>& a, const std::unordered_set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  const auto& small = a.size() < b.size() ? a : b;
  const auto& large = a.size() < b.size() ? b : a;
  std::size_t common = 0;
  for (const auto& s : small) common += large.count(s);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

FilterVerdict filter_record(const CorpusRecord& r, const FilterPolicy& p) {
  if (!r.text || !r.lang || !r.lang_prob || !r.perplexity || !r.quality_flags || !r.categories)
    return FilterVerdict::missing_metadata;
  if (*r.lang != p.language || !(*r.lang_prob >= p.min_lang_prob)) return FilterVerdict::language;
  if (intersects(*r.quality_flags, p.banned_flags)) return FilterVerdict::quality;
  if (!(*r.perplexity > p.min_perplexity_exclusive)) return FilterVerdict::perplexity;
  if (intersects(*r.categories, p.banned_categories)) return FilterVerdict::category;
  return FilterVerdict::keep;
}

FilterResult filter_stream(const std::vector<CorpusRecord>& records, const FilterPolicy& policy) {
  validate(policy);
  FilterResult out;
  for (auto v : kAllVerdicts) out.counts[v] = 0;
  std::vector<CorpusRecord> passed;
  for (const auto& r : records) {
    const auto v = filter_record(r, policy);
    ++out.counts[v];
    if (v == FilterVerdict::keep) passed.push_back(r);
  }
  out.kept = dedup_stream(passed, policy.dedup, &out.duplicates);
  return out;
}

void write_filter_report(std::ostream& os, const FilterResult& result) {
  os << "reason,count\n";
  for (const auto& [verdict, count] : result.counts) os << to_string(verdict) << ',' << count << '\n';
  os << "duplicate," << result.duplicates << '\n';
}

std::string normalize_text(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

double shingle_jaccard(const std::string& a, const std::string& b, std::size_t k) {
  return jaccard(shingles(normalize_text(a), k), shingles(normalize_text(b), k));
}

std::vector<CorpusRecord> dedup_stream(const std::vector<CorpusRecord>& records, const DedupPolicy& policy,
                                       std::size_t* dropped) {
  std::vector<CorpusRecord> out;
  std::unordered_set<std::string> seen;
  std::vector<std::unordered_set<std::string>> retained;
  std::size_t drops = 0;
  for (const auto& r : records) {
    if (!r.text) {
      out.push_back(r);
      continue;
    }
    const std::string norm = normalize_text(*r.text);
    if (policy.exact_hash && seen.count(norm)) {
      ++drops;
      continue;
    }
    if (policy.shingle) {
      auto sh = shingles(norm, policy.k);
      const bool near = std::any_of(retained.begin(), retained.end(),
                                    [&](const auto& other) { return jaccard(sh, other) >= policy.jaccard_threshold; });
      if (near) {
        ++drops;
        continue;
      }
      retained.push_back(std::move(sh));
    }
    seen.insert(norm);
    out.push_back(r);
  }
  if (dropped) *dropped = drops;
  return out;
}

}  // namespace eadl
