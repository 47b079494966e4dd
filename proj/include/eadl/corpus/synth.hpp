#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eadl/corpus/conll.hpp"
#include "eadl/corpus/records.hpp"

namespace eadl {

// Markov-chain text over words w0..w{V-1}. The transition table depends only on
// chain_seed, so corpora drawn with different seeds share one language. Each
// record also repeats a few tokens at distance Δ ≤ length/2.
struct MlmSynthOptions {
  std::size_t vocab_words = 40;
  std::size_t length = 48;
  std::size_t branching = 3;
  std::size_t copy_pairs = 4;
  std::uint64_t chain_seed = 1234;
};

std::vector<CorpusRecord> synth_mlm_corpus(std::size_t size, std::uint64_t seed, const MlmSynthOptions& options = {});

// Sentence lengths are log-normal with the median placed so that `over_fraction`
// of them exceed `threshold` tokens. Entity words come from disjoint per-tag
// lexicons, so every tag is a function of the word.
struct NerSynthOptions {
  double over_fraction = 0.35;
  std::size_t threshold = 512;
  double sigma = 1.0;
  std::size_t max_length = 8192;
  double entity_rate = 0.12;
};

std::vector<TaggedSentence> synth_ner_corpus(std::size_t size, std::uint64_t seed, const NerSynthOptions& options = {});

// Inverse standard normal CDF.
double normal_quantile(double p);

}  // namespace eadl
