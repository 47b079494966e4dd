#include "eadl/evalkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>

#include "eadl/error.hpp"

namespace eadl {

double percentile(std::vector<double> values, double p) {
  require(!values.empty(), ErrorKind::input, "percentile of an empty list");
  require(p >= 0 && p <= 1, ErrorKind::parameter, "percentile must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double rank = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

LengthStats length_stats(const std::vector<double>& lengths, Deviation dev) {
  require(!lengths.empty(), ErrorKind::input, "length statistics need at least one sequence");
  require(dev == Deviation::population || lengths.size() > 1, ErrorKind::input,
          "sample standard deviation needs at least two sequences");
  LengthStats s;
  double sum = 0;
  for (double x : lengths) sum += x;
  s.mean = sum / static_cast<double>(lengths.size());
  double sq = 0;
  for (double x : lengths) sq += (x - s.mean) * (x - s.mean);
  s.std_dev = std::sqrt(sq / static_cast<double>(dev == Deviation::population ? lengths.size() : lengths.size() - 1));
  auto sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.p25 = percentile(sorted, 0.25);
  s.p50 = percentile(sorted, 0.50);
  s.p75 = percentile(sorted, 0.75);
  return s;
}

LengthStats sentence_length_stats(const std::vector<TaggedSentence>& sentences, Deviation dev) {
  std::vector<double> lengths;
  lengths.reserve(sentences.size());
  for (const auto& s : sentences) lengths.push_back(static_cast<double>(s.tokens.size()));
  return length_stats(lengths, dev);
}

void write_length_report(std::ostream& os, const LengthStats& s) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::fixed << std::setprecision(1) << "statistic,value\n"
     << "mean," << s.mean << "\nstd. dev.," << s.std_dev << "\nmin," << s.min << "\n25%," << s.p25 << "\n50%,"
     << s.p50 << "\n75%," << s.p75 << "\nmax," << s.max << '\n';
  os.flags(flags);
  os.precision(precision);
}

TagDistribution tag_distribution(const std::vector<TaggedSentence>& sentences) {
  TagDistribution d;
  for (const auto& s : sentences)
    for (const auto& t : s.tags) ++d.counts[static_cast<std::size_t>(tag_index(t))];
  for (std::size_t i = 0; i < 9; ++i) {
    d.total += d.counts[i];
    if (i > 0) d.entity_total += d.counts[i];
  }
  d.entity_defined = d.entity_total > 0;
  for (std::size_t i = 0; i < 9; ++i) {
    if (d.total) d.p[i] = static_cast<double>(d.counts[i]) / static_cast<double>(d.total);
    if (i > 0 && d.entity_defined) d.p_entity[i] = static_cast<double>(d.counts[i]) / static_cast<double>(d.entity_total);
  }
  return d;
}

void write_tag_report(std::ostream& os, const TagDistribution& d) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::fixed << std::setprecision(3) << "type,count,p,p1\n";
  double p_sum = 0, e_sum = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    os << kBioLabels[i] << ',' << d.counts[i] << ',' << d.p[i] << ',';
    if (i == 0)
      os << '-';
    else
      os << d.p_entity[i];
    os << '\n';
    p_sum += d.p[i];
    e_sum += d.p_entity[i];
  }
  os << "Total," << d.total << ',' << p_sum << ',' << e_sum << '\n';
  os.flags(flags);
  os.precision(precision);
}

std::vector<FrequencyRow> frequency_table(const std::vector<std::string>& keys) {
  std::map<std::string, std::size_t> counts;
  for (const auto& k : keys) ++counts[k];
  std::vector<FrequencyRow> rows;
  for (const auto& [k, c] : counts) rows.push_back({k, c, 0, 0});
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  double cdf = 0;
  for (auto& r : rows) {
    r.pdf = static_cast<double>(r.count) / static_cast<double>(keys.size());
    cdf += r.pdf;
    r.cdf = cdf;
  }
  return rows;
}

double retention(double student_metric, double teacher_metric) {
  require(teacher_metric > 0, ErrorKind::input, "retention needs a positive teacher metric");
  return student_metric / teacher_metric;
}

double speedup(double new_time, double old_time) {
  require(old_time > 0, ErrorKind::input, "speedup needs a positive reference time");
  return (new_time - old_time) / old_time;
}

}  // namespace eadl
