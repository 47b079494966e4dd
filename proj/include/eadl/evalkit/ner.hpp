#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace eadl {

struct NerSpan {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::string type;       // PER, ORG, LOC or MISC
  auto operator<=>(const NerSpan&) const = default;
};

// B-X opens a span, I-X extends a span of the same type and otherwise opens one,
// O closes. Unknown labels raise ErrorKind::input.
std::vector<NerSpan> decode_bio(const std::vector<std::string>& tags);

struct PrfScore {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;  // 0 when a denominator is 0
  std::size_t support() const { return tp + fn; }
};

struct EntityScores {
  std::map<std::string, PrfScore> per_type;  // every entity type, present or not
  PrfScore overall;                          // micro average
};

// Exact (start, end, type) matching. Sequences must pair up with equal lengths.
EntityScores entity_f1(const std::vector<std::vector<std::string>>& pred,
                       const std::vector<std::vector<std::string>>& gold);
EntityScores entity_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

// tag,precision,recall,f1,support with one row per entity type then "overall".
void write_metrics_csv(std::ostream& os, const EntityScores& scores);

}  // namespace eadl
