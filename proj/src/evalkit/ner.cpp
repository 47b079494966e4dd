#include "eadl/evalkit/ner.hpp"

#include <algorithm>
#include <iomanip>
#include <set>

#include "eadl/corpus/conll.hpp"
#include "eadl/error.hpp"

namespace eadl {

std::vector<NerSpan> decode_bio(const std::vector<std::string>& tags) {
  std::vector<NerSpan> out;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& tag = tags[i];
    tag_index(tag);  // rejects unknown labels
    if (tag == "O") {
      open = false;
      continue;
    }
    const std::string type = tag.substr(2);
    if (tag[0] == 'I' && open && out.back().type == type) {
      out.back().end = i + 1;
      continue;
    }
    out.push_back({i, i + 1, type});
    open = true;
  }
  return out;
}

namespace {

void finish(PrfScore& s) {
  s.precision = s.tp + s.fp ? double(s.tp) / double(s.tp + s.fp) : 0.0;
  s.recall = s.tp + s.fn ? double(s.tp) / double(s.tp + s.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
}

}  // namespace

EntityScores entity_f1(const std::vector<std::vector<std::string>>& pred,
                       const std::vector<std::vector<std::string>>& gold) {
  require(pred.size() == gold.size(), ErrorKind::input,
          "prediction has " + std::to_string(pred.size()) + " sequences, gold has " + std::to_string(gold.size()));
  EntityScores out;
  for (auto t : kEntityTypes) out.per_type[std::string(t)];
  for (std::size_t s = 0; s < gold.size(); ++s) {
    require(pred[s].size() == gold[s].size(), ErrorKind::input,
            "sequence " + std::to_string(s) + ": prediction and gold lengths differ");
    const auto p = decode_bio(pred[s]), g = decode_bio(gold[s]);
    const std::set<NerSpan> gs(g.begin(), g.end()), ps(p.begin(), p.end());
    for (const auto& span : p) ++(gs.count(span) ? out.per_type[span.type].tp : out.per_type[span.type].fp);
    for (const auto& span : g)
      if (!ps.count(span)) ++out.per_type[span.type].fn;
  }
  for (auto& [type, s] : out.per_type) {
    finish(s);
    out.overall.tp += s.tp;
    out.overall.fp += s.fp;
    out.overall.fn += s.fn;
  }
  finish(out.overall);
  return out;
}

EntityScores entity_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  return entity_f1(std::vector<std::vector<std::string>>{pred}, std::vector<std::vector<std::string>>{gold});
}

void write_metrics_csv(std::ostream& os, const EntityScores& scores) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::fixed << std::setprecision(6) << "tag,precision,recall,f1,support\n";
  auto row = [&](const std::string& name, const PrfScore& s) {
    os << name << ',' << s.precision << ',' << s.recall << ',' << s.f1 << ',' << s.support() << '\n';
  };
  for (auto t : kEntityTypes) {
    auto it = scores.per_type.find(std::string(t));
    row(std::string(t), it == scores.per_type.end() ? PrfScore{} : it->second);
  }
  row("overall", scores.overall);
  os.flags(flags);
  os.precision(precision);
}

}  // namespace eadl
