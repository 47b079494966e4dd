#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "eadl/corpus/conll.hpp"

namespace eadl {

struct LengthStats {
  double mean = 0, std_dev = 0, min = 0, p25 = 0, p50 = 0, p75 = 0, max = 0;
};

enum class Deviation { population, sample };

// Percentiles interpolate linearly between closest ranks (rank = p·(n−1)).
LengthStats length_stats(const std::vector<double>& lengths, Deviation dev = Deviation::population);
LengthStats sentence_length_stats(const std::vector<TaggedSentence>& sentences,
                                  Deviation dev = Deviation::population);
double percentile(std::vector<double> values, double p);

// Rows "mean", "std. dev.", "min", "25%", "50%", "75%", "max" under the header statistic,value.
void write_length_report(std::ostream& os, const LengthStats& stats);

struct TagDistribution {
  std::array<std::size_t, 9> counts{};  // kBioLabels order
  std::size_t total = 0, entity_total = 0;
  std::array<double, 9> p{};
  std::array<double, 9> p_entity{};  // over non-O tokens; O stays 0
  bool entity_defined = false;       // false when there are no non-O tokens
};

TagDistribution tag_distribution(const std::vector<TaggedSentence>& sentences);

// type,count,p,p1 per label, O's p1 as "-", then a Total row.
void write_tag_report(std::ostream& os, const TagDistribution& dist);

struct FrequencyRow {
  std::string key;
  std::size_t count = 0;
  double pdf = 0, cdf = 0;
};

// Sorted by descending count, ties by key.
std::vector<FrequencyRow> frequency_table(const std::vector<std::string>& keys);

// student / teacher; teacher must be > 0.
double retention(double student_metric, double teacher_metric);
// (new − old) / old; old must be > 0. Negative means faster.
double speedup(double new_time, double old_time);

}  // namespace eadl
