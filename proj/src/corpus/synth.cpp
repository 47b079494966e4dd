#include "eadl/corpus/synth.hpp"

#include <algorithm>
#include <cmath>

#include "eadl/error.hpp"
#include "eadl/numcore/rng.hpp"

namespace eadl {

double normal_quantile(double p) {
  require(p > 0 && p < 1, ErrorKind::parameter, "quantile probability must be in (0, 1)");
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<CorpusRecord> synth_mlm_corpus(std::size_t size, std::uint64_t seed, const MlmSynthOptions& o) {
  require(size >= 1, ErrorKind::parameter, "corpus size must be >= 1");
  require(o.vocab_words >= 2 && o.branching >= 1 && o.length >= 2, ErrorKind::parameter, "degenerate mlm_toy options");
  Rng chain(o.chain_seed);
  std::vector<std::vector<std::size_t>> next(o.vocab_words);
  for (auto& succ : next)
    for (std::size_t b = 0; b < o.branching; ++b) succ.push_back(chain.below(o.vocab_words));
  // Successor b is taken with probability ∝ 2^-b.
  std::vector<double> cdf;
  double total = 0;
  for (std::size_t b = 0; b < o.branching; ++b) cdf.push_back(total += std::ldexp(1.0, -static_cast<int>(b)));
  for (auto& c : cdf) c /= total;

  std::vector<CorpusRecord> out;
  const Rng root(seed);
  for (std::size_t r = 0; r < size; ++r) {
    Rng rng = root.split(r);
    std::vector<std::size_t> words{rng.below(o.vocab_words)};
    while (words.size() < o.length) {
      const double u = rng.uniform();
      const auto b = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      words.push_back(next[words.back()][std::min(b, o.branching - 1)]);
    }
    for (std::size_t c = 0; c < o.copy_pairs; ++c) {
      const std::size_t delta = 1 + rng.below(o.length / 2);
      const std::size_t i = rng.below(o.length - delta);
      words[i + delta] = words[i];
    }
    std::string text;
    for (auto w : words) text += (text.empty() ? "w" : " w") + std::to_string(w);
    CorpusRecord rec;
    rec.text = std::move(text);
    rec.lang = "en";
    rec.lang_prob = 0.95;
    rec.perplexity = 40.0;
    rec.quality_flags.emplace();
    rec.categories.emplace();
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

struct Lexicon {
  std::vector<std::string> begin, inside;
};

const std::array<Lexicon, 4>& lexicons() {
  static const std::array<Lexicon, 4> lex{{
      {{"Alice", "Bruno", "Chen", "Dana", "Emeka", "Farah", "Goran", "Hana"},
       {"Smith", "Okafor", "Lindqvist", "Moreau", "Tanaka", "Rossi"}},
      {{"Acme", "Globex", "Initech", "Umbrella", "Vandelay", "Hooli"}, {"Corp", "Inc", "Group", "Labs"}},
      {{"Paris", "Lagos", "Oslo", "Lima", "Hanoi", "Quito", "Perth"}, {"City", "Bay", "Heights"}},
      {{"German", "Olympic", "Euro", "Nobel", "Dutch"}, {"Cup", "Prize", "Games"}},
  }};
  return lex;
}

const std::vector<std::string>& filler() {
  static const std::vector<std::string> words{
      "the",  "a",     "said",   "on",     "in",    "of",   "to",     "and",   "was",    "report", "after",
      "team", "will",  "market", "rose",   "fell",  "new",  "talks",  "with",  "by",     "for",    "year",
      "week", "shares", "police", "visit", "plans", "from", "minister", "win", "season", "."};
  return words;
}

}  // namespace

std::vector<TaggedSentence> synth_ner_corpus(std::size_t size, std::uint64_t seed, const NerSynthOptions& o) {
  require(size >= 1, ErrorKind::parameter, "corpus size must be >= 1");
  require(o.over_fraction > 0 && o.over_fraction < 1 && o.sigma > 0 && o.threshold >= 1, ErrorKind::parameter,
          "invalid ner_toy length distribution");
  require(o.entity_rate >= 0 && o.entity_rate <= 1, ErrorKind::parameter, "entity_rate must be in [0, 1]");
  const double mu = std::log(static_cast<double>(o.threshold)) - normal_quantile(1 - o.over_fraction) * o.sigma;
  const auto& lex = lexicons();
  const auto& fill = filler();
  std::vector<TaggedSentence> out;
  const Rng root(seed);
  for (std::size_t s = 0; s < size; ++s) {
    Rng rng = root.split(s);
    const double draw = std::exp(mu + o.sigma * rng.normal());
    const auto length = static_cast<std::size_t>(std::clamp(std::round(draw), 1.0, static_cast<double>(o.max_length)));
    TaggedSentence sent;
    while (sent.tokens.size() < length) {
      if (rng.uniform() < o.entity_rate) {
        const std::size_t t = rng.below(lex.size());
        const std::string type(kEntityTypes[t]);
        sent.tokens.push_back(lex[t].begin[rng.below(lex[t].begin.size())]);
        sent.tags.push_back("B-" + type);
        if (sent.tokens.size() < length && rng.uniform() < 0.5) {
          sent.tokens.push_back(lex[t].inside[rng.below(lex[t].inside.size())]);
          sent.tags.push_back("I-" + type);
        }
      } else {
        sent.tokens.push_back(fill[rng.below(fill.size())]);
        sent.tags.push_back("O");
      }
    }
    out.push_back(std::move(sent));
  }
  return out;
}

}  // namespace eadl
