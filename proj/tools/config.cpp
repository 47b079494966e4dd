#include "config.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace eadl::cli {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& parent, const std::string& name) : name_(name) {
    if (!parent.contains(name)) return;
    j_ = &parent.at(name);
    if (!j_->is_object()) throw UsageError("config section '" + name + "' must be an object");
  }

  template <class T>
  void get(const std::string& key, T& dst) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    try {
      dst = j_->at(key).get<T>();
    } catch (const json::exception&) {
      throw UsageError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items())
      if (!seen_.count(key)) throw UsageError("unknown config key '" + name_ + "." + key + "'");
  }

 private:
  std::string name_;
  const json* j_ = nullptr;
  std::set<std::string> seen_;
};

// Shortest decimal that round-trips the float, so a float 0.1 logs as 0.1.
double tidy(real x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::stod(std::string(buf, res.ptr));
}

const std::set<std::string> kSections{"model", "data", "train", "optimizer", "filter", "bench"};

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kSections.count(key)) throw UsageError("unknown config section '" + key + "'");
  RunConfig c;

  Section m(j, "model");
  m.get("vocab_size", c.model.vocab_size);
  m.get("max_positions", c.model.max_positions);
  m.get("num_layers", c.model.num_layers);
  m.get("hidden_dim", c.model.hidden_dim);
  m.get("num_heads", c.model.num_heads);
  m.get("ffn_dim", c.model.ffn_dim);
  std::string attention = to_string(c.model.attention_spec);
  m.get("attention", attention);
  c.model.attention_spec = parse_attention_spec(attention);
  m.get("dropout_p", c.model.dropout_p);
  m.get("tie_mlm_head", c.model.tie_mlm_head);
  m.get("num_tags", c.model.num_tags);
  m.finish();

  Section d(j, "data");
  d.get("seq_len", c.data.seq_len);
  d.get("max_vocab", c.data.max_vocab);
  d.get("min_count", c.data.min_count);
  d.get("mask_rate", c.data.mask.rate);
  d.get("mask_frac", c.data.mask.mask_frac);
  d.get("random_frac", c.data.mask.random_frac);
  d.get("epochs", c.data.epochs);
  d.finish();

  Section t(j, "train");
  t.get("alpha", c.train.alpha);
  t.get("beta", c.train.beta);
  t.get("gamma", c.train.gamma);
  t.get("temperature", c.train.temperature);
  t.get("steps", c.train.steps);
  t.get("batch_size", c.train.batch_size);
  t.get("grad_accum", c.train.grad_accum);
  t.get("seed", c.train.seed);
  t.get("ce_all_positions", c.train.ce_all_positions);
  t.get("cse_layer_pairs", c.train.cse_layer_pairs);
  t.finish();

  Section o(j, "optimizer");
  o.get("lr", c.train.optimizer.lr);
  o.get("beta1", c.train.optimizer.beta1);
  o.get("beta2", c.train.optimizer.beta2);
  o.get("eps", c.train.optimizer.eps);
  o.get("weight_decay", c.train.optimizer.weight_decay);
  o.get("warmup_fraction", c.train.optimizer.warmup_fraction);
  o.finish();

  Section f(j, "filter");
  f.get("language", c.filter.language);
  f.get("min_lang_prob", c.filter.min_lang_prob);
  f.get("min_perplexity_exclusive", c.filter.min_perplexity_exclusive);
  f.get("banned_flags", c.filter.banned_flags);
  f.get("banned_categories", c.filter.banned_categories);
  f.get("exact_dedup", c.filter.dedup.exact_hash);
  f.get("shingle_dedup", c.filter.dedup.shingle);
  f.get("shingle_k", c.filter.dedup.k);
  f.get("jaccard_threshold", c.filter.dedup.jaccard_threshold);
  f.finish();

  Section b(j, "bench");
  b.get("seq_lens", c.bench.seq_lens);
  b.get("batch_size", c.bench.batch_size);
  b.get("warmup_reps", c.bench.warmup_reps);
  b.get("timed_reps", c.bench.timed_reps);
  b.get("seed", c.bench.seed);
  b.finish();

  validate(c.model);
  validate(c.data.mask);
  validate(c.train);
  validate(c.filter);
  validate(c.bench);
  require(c.data.seq_len >= 1 && c.data.seq_len <= c.model.max_positions, ErrorKind::parameter,
          "data.seq_len must be in [1, model.max_positions]");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"vocab_size", c.model.vocab_size},
                {"max_positions", c.model.max_positions},
                {"num_layers", c.model.num_layers},
                {"hidden_dim", c.model.hidden_dim},
                {"num_heads", c.model.num_heads},
                {"ffn_dim", c.model.ffn_dim},
                {"attention", to_string(c.model.attention_spec)},
                {"dropout_p", tidy(c.model.dropout_p)},
                {"tie_mlm_head", c.model.tie_mlm_head},
                {"num_tags", c.model.num_tags}};
  j["data"] = {{"seq_len", c.data.seq_len},         {"max_vocab", c.data.max_vocab},
               {"min_count", c.data.min_count},     {"mask_rate", c.data.mask.rate},
               {"mask_frac", c.data.mask.mask_frac}, {"random_frac", c.data.mask.random_frac},
               {"epochs", c.data.epochs}};
  j["train"] = {{"alpha", c.train.alpha},
                {"beta", c.train.beta},
                {"gamma", c.train.gamma},
                {"temperature", c.train.temperature},
                {"steps", c.train.steps},
                {"batch_size", c.train.batch_size},
                {"grad_accum", c.train.grad_accum},
                {"seed", c.train.seed},
                {"ce_all_positions", c.train.ce_all_positions},
                {"cse_layer_pairs", c.train.cse_layer_pairs}};
  j["optimizer"] = {{"lr", c.train.optimizer.lr},
                    {"beta1", c.train.optimizer.beta1},
                    {"beta2", c.train.optimizer.beta2},
                    {"eps", c.train.optimizer.eps},
                    {"weight_decay", c.train.optimizer.weight_decay},
                    {"warmup_fraction", c.train.optimizer.warmup_fraction}};
  j["filter"] = {{"language", c.filter.language},
                 {"min_lang_prob", c.filter.min_lang_prob},
                 {"min_perplexity_exclusive", c.filter.min_perplexity_exclusive},
                 {"banned_flags", c.filter.banned_flags},
                 {"banned_categories", c.filter.banned_categories},
                 {"exact_dedup", c.filter.dedup.exact_hash},
                 {"shingle_dedup", c.filter.dedup.shingle},
                 {"shingle_k", c.filter.dedup.k},
                 {"jaccard_threshold", c.filter.dedup.jaccard_threshold}};
  j["bench"] = {{"seq_lens", c.bench.seq_lens},
                {"batch_size", c.bench.batch_size},
                {"warmup_reps", c.bench.warmup_reps},
                {"timed_reps", c.bench.timed_reps},
                {"seed", c.bench.seed}};
  return j;
}

}  // namespace eadl::cli
