#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "eadl/encoder/checkpoint.hpp"

namespace eadl {

struct BenchConfig {
  std::vector<std::size_t> seq_lens{128, 256, 512, 1024};
  std::size_t batch_size = 16;
  std::size_t warmup_reps = 2;
  std::size_t timed_reps = 5;
  std::uint64_t seed = 0;
};

void validate(const BenchConfig& config);

struct BenchResult {
  std::string model;
  std::string label;  // attention pattern
  std::size_t seq_len = 0;
  std::size_t batch = 0;
  double mean_s = 0, std_s = 0;
  std::int64_t peak_bytes = 0;      // tensor bytes above what was live before the forward
  std::size_t attended_pairs = 0;  // per head, per sequence, per layer
  std::size_t params = 0;
  std::vector<double> samples;
};

// Eval-mode forwards on seeded random tokens. Only one call may run at a time in a
// process; a concurrent call raises ErrorKind::protocol.
std::vector<BenchResult> time_inference(const Checkpoint& ckpt, const BenchConfig& config,
                                        const std::string& model_name);

// model,label,seq_len,batch,mean_s,std_s,peak_bytes,attended_pairs,params
void write_bench_csv(std::ostream& os, const std::vector<BenchResult>& results);

enum class Growth { near_linear, intermediate, near_quadratic };
const char* to_string(Growth g) noexcept;
// pair-ratio below 2.5 is near-linear, above 3.5 near-quadratic.
Growth classify_growth(double pair_ratio) noexcept;

struct ScalingRow {
  std::string model, label;
  std::size_t from_len = 0, to_len = 0;
  double time_ratio = 0, memory_ratio = 0, pair_ratio = 0;
  Growth growth = Growth::intermediate;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  std::vector<std::string> warnings;
};

// Ratios between consecutive lengths of the same (model, label) where the length
// doubles. Anything else becomes a warning.
ScalingReport scaling_report(const std::vector<BenchResult>& results);
void write_scaling_csv(std::ostream& os, const ScalingReport& report);

// Fraction of bootstrap resamples in which mean(longer) >= mean(shorter).
double bootstrap_ordering(const std::vector<double>& shorter, const std::vector<double>& longer,
                          std::size_t resamples, std::uint64_t seed);

}  // namespace eadl
