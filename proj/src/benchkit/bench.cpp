#include "eadl/benchkit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>

#include "eadl/attention/mask.hpp"
#include "eadl/error.hpp"
#include "eadl/numcore/alloc.hpp"
#include "eadl/numcore/autograd.hpp"

namespace eadl {

void validate(const BenchConfig& c) {
  require(!c.seq_lens.empty(), ErrorKind::parameter, "bench needs at least one sequence length");
  require(std::is_sorted(c.seq_lens.begin(), c.seq_lens.end()), ErrorKind::parameter,
          "bench sequence lengths must be ascending");
  require(c.seq_lens.front() >= 1, ErrorKind::parameter, "bench sequence lengths must be >= 1");
  require(c.timed_reps >= 3, ErrorKind::parameter, "bench needs timed_reps >= 3");
  require(c.batch_size >= 1, ErrorKind::parameter, "bench batch size must be >= 1");
}

namespace {

std::atomic<bool> g_running{false};

// Pattern labels contain commas.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct RunGuard {
  RunGuard() {
    require(!g_running.exchange(true), ErrorKind::protocol, "another benchmark is already running in this process");
  }
  ~RunGuard() { g_running = false; }
  RunGuard(const RunGuard&) = delete;
  RunGuard& operator=(const RunGuard&) = delete;
};

}  // namespace

std::vector<BenchResult> time_inference(const Checkpoint& ckpt, const BenchConfig& config,
                                        const std::string& model_name) {
  validate(config);
  for (std::size_t len : config.seq_lens)
    require(len <= ckpt.config.max_positions, ErrorKind::length,
            "bench seq_len " + std::to_string(len) + " exceeds max_positions " +
                std::to_string(ckpt.config.max_positions));
  RunGuard guard;
  NoGradScope inference;
  using clock = std::chrono::steady_clock;

  std::vector<BenchResult> out;
  const Rng root(config.seed);
  for (std::size_t len : config.seq_lens) {
    Rng rng = root.split(len);
    TokenBatch tokens{config.batch_size, len, {}};
    tokens.ids.reserve(config.batch_size * len);
    for (std::size_t i = 0; i < config.batch_size * len; ++i)
      tokens.ids.push_back(static_cast<std::int32_t>(rng.below(ckpt.config.vocab_size)));

    for (std::size_t r = 0; r < config.warmup_reps; ++r) forward(ckpt.config, ckpt.weights, tokens, Mode::eval);

    BenchResult res;
    res.model = model_name;
    res.label = to_string(ckpt.config.attention_spec);
    res.seq_len = len;
    res.batch = config.batch_size;
    res.attended_pairs = attended_pairs(spec_for_layer(ckpt.config.attention_spec, 0), len);
    res.params = count_params(ckpt.config);
    for (std::size_t r = 0; r < config.timed_reps; ++r) {
      reset_alloc_peak();
      const std::int64_t baseline = alloc_stats().current_bytes;
      const auto t0 = clock::now();
      {
        auto enc = forward(ckpt.config, ckpt.weights, tokens, Mode::eval);
      }
      const auto t1 = clock::now();
      res.peak_bytes = std::max(res.peak_bytes, alloc_stats().peak_bytes - baseline);
      res.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    double sum = 0;
    for (double s : res.samples) sum += s;
    res.mean_s = sum / static_cast<double>(res.samples.size());
    double sq = 0;
    for (double s : res.samples) sq += (s - res.mean_s) * (s - res.mean_s);
    res.std_s = std::sqrt(sq / static_cast<double>(res.samples.size() - 1));
    out.push_back(std::move(res));
  }
  return out;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchResult>& results) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "model,label,seq_len,batch,mean_s,std_s,peak_bytes,attended_pairs,params\n" << std::setprecision(6);
  for (const auto& r : results)
    os << csv_field(r.model) << ',' << csv_field(r.label) << ',' << r.seq_len << ',' << r.batch << ',' << r.mean_s << ',' << r.std_s << ','
       << r.peak_bytes << ',' << r.attended_pairs << ',' << r.params << '\n';
  os.flags(flags);
  os.precision(precision);
}

const char* to_string(Growth g) noexcept {
  switch (g) {
    case Growth::near_linear: return "near-linear";
    case Growth::intermediate: return "intermediate";
    case Growth::near_quadratic: return "near-quadratic";
  }
  return "unknown";
}

Growth classify_growth(double pair_ratio) noexcept {
  if (pair_ratio < 2.5) return Growth::near_linear;
  if (pair_ratio > 3.5) return Growth::near_quadratic;
  return Growth::intermediate;
}

ScalingReport scaling_report(const std::vector<BenchResult>& results) {
  std::map<std::pair<std::string, std::string>, std::vector<const BenchResult*>> groups;
  for (const auto& r : results) groups[{r.model, r.label}].push_back(&r);
  ScalingReport out;
  for (auto& [key, rows] : groups) {
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->seq_len < b->seq_len; });
    const std::string name = key.first + " (" + key.second + ")";
    if (rows.size() < 2) {
      out.warnings.push_back(name + ": only one sequence length, no ratios");
      continue;
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& a = *rows[i - 1];
      const auto& b = *rows[i];
      if (b.seq_len != 2 * a.seq_len) {
        out.warnings.push_back(name + ": " + std::to_string(a.seq_len) + " -> " + std::to_string(b.seq_len) +
                               " is not a doubling, skipped");
        continue;
      }
      ScalingRow row{key.first, key.second, a.seq_len, b.seq_len, 0, 0, 0, Growth::intermediate};
      row.time_ratio = a.mean_s > 0 ? b.mean_s / a.mean_s : 0;
      row.memory_ratio = a.peak_bytes > 0 ? double(b.peak_bytes) / double(a.peak_bytes) : 0;
      row.pair_ratio = a.attended_pairs > 0 ? double(b.attended_pairs) / double(a.attended_pairs) : 0;
      row.growth = classify_growth(row.pair_ratio);
      out.rows.push_back(row);
    }
  }
  return out;
}

void write_scaling_csv(std::ostream& os, const ScalingReport& report) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "model,label,from_len,to_len,time_ratio,memory_ratio,pair_ratio,growth\n" << std::setprecision(6);
  for (const auto& r : report.rows)
    os << csv_field(r.model) << ',' << csv_field(r.label) << ',' << r.from_len << ',' << r.to_len << ',' << r.time_ratio << ','
       << r.memory_ratio << ',' << r.pair_ratio << ',' << to_string(r.growth) << '\n';
  os.flags(flags);
  os.precision(precision);
}

double bootstrap_ordering(const std::vector<double>& shorter, const std::vector<double>& longer,
                          std::size_t resamples, std::uint64_t seed) {
  require(!shorter.empty() && !longer.empty(), ErrorKind::input, "bootstrap needs samples on both sides");
  require(resamples >= 1, ErrorKind::parameter, "bootstrap needs at least one resample");
  Rng rng(seed);
  auto resampled_mean = [&](const std::vector<double>& v) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[rng.below(v.size())];
    return s / static_cast<double>(v.size());
  };
  std::size_t ordered = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    const double a = resampled_mean(shorter);
    const double b = resampled_mean(longer);
    ordered += b >= a;
  }
  return static_cast<double>(ordered) / static_cast<double>(resamples);
}

}  // namespace eadl
