#pragma once

#include <filesystem>
#include <string>

#include "eadl/benchkit/bench.hpp"
#include "eadl/corpus/records.hpp"
#include "eadl/corpus/tokenizer.hpp"
#include "eadl/error.hpp"
#include "eadl/pipeline/distill.hpp"
#include "json.hpp"

namespace eadl::cli {

// Problems with the command line or the config file itself (exit code 1).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::parameter, what) {}
};

struct DataOptions {
  std::size_t seq_len = 32;
  std::size_t max_vocab = 30000;
  std::size_t min_count = 1;
  MaskPolicy mask;
  std::size_t epochs = 1000;
};

// Command-line defaults are a little wider than the library's: with head
// dimension 8 masked-LM training on small corpora stalls for a long time.
struct RunConfig {
  ModelConfig model{.num_layers = 4, .hidden_dim = 64, .num_heads = 4, .ffn_dim = 128};
  DataOptions data;
  DistillRecipe train{.optimizer = {.lr = 3e-3}, .batch_size = 16};
  FilterPolicy filter;
  BenchConfig bench;
};

// Sections: model, data, train, optimizer, filter, bench. Missing keys keep their
// defaults; unknown sections or keys raise UsageError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace eadl::cli
