#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "eadl/corpus/synth.hpp"
#include "eadl/evalkit/ner.hpp"
#include "eadl/evalkit/stats.hpp"
#include "eadl/pipeline/convert.hpp"
#include "eadl/pipeline/train.hpp"

namespace eadl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config, corpus, in, out, teacher, data, task = "ner", pattern, pos_init = "cyclic", kind, policy,
      loss_csv, report, scaling;
  std::size_t max_pos = 0, size = 0, truncate = 0, batch = 16, seq_len = 0, reps = 5, warmup = 2;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::vector<std::string> models;
  std::vector<std::size_t> seq_lens;
  bool sample_std = false;
  // Set when the flag was given explicitly.
  bool seed_set = false, steps_set = false;
};

std::ifstream open_in(const fs::path& p, const char* what) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::input, std::string("cannot open ") + what + " " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::input, "cannot write " + p.string());
  return out;
}

std::vector<std::string> corpus_texts(const fs::path& p) {
  auto in = open_in(p, "corpus");
  std::vector<std::string> texts;
  for (auto& r : read_records(in))
    if (r.text) texts.push_back(std::move(*r.text));
  require(!texts.empty(), ErrorKind::input, "corpus " + p.string() + " has no records with text");
  return texts;
}

std::vector<TaggedSentence> conll_data(const fs::path& p) {
  require(fs::exists(p), ErrorKind::input, "cannot open data " + p.string());
  return load_conll(p).sentences;
}

RunConfig resolve(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed_set) c.train.seed = o.seed;
  if (o.steps_set) c.train.steps = o.steps;
  return c;
}

void log_line(std::ostream& err, const json& j) { err << j.dump() << '\n'; }

void log_result(std::ostream& err, const TrainResult& r) {
  json j{{"status", to_string(r.status)}, {"steps_done", r.steps_done}};
  if (!r.log.empty()) j["final_loss"] = r.log.back().total;
  log_line(err, j);
  if (r.status != RunStatus::complete) err << "warning: corpus exhausted after " << r.steps_done << " steps\n";
}

void save_run(const TrainResult& r, const Options& o) {
  save_checkpoint(r.checkpoint, o.out);
  auto csv = open_out(o.loss_csv.empty() ? o.out + ".loss.csv" : o.loss_csv);
  write_loss_csv(csv, r.log);
}

Vocabulary checkpoint_vocab(const Checkpoint& ck, const std::string& path) {
  require(!ck.vocab.empty(), ErrorKind::input, "checkpoint " + path + " carries no vocabulary");
  return Vocabulary(ck.vocab);
}

int cmd_synth(const Options& o, std::ostream&, std::ostream& err) {
  log_line(err, {{"command", "synth"}, {"kind", o.kind}, {"size", o.size}, {"seed", o.seed}, {"out", o.out}});
  auto out = open_out(o.out);
  if (o.kind == "mlm_toy")
    write_records(out, synth_mlm_corpus(o.size, o.seed));
  else
    write_conll(out, synth_ner_corpus(o.size, o.seed));
  return kOk;
}

int cmd_pretrain(const Options& o, std::ostream&, std::ostream& err) {
  RunConfig c = resolve(o);
  const auto texts = corpus_texts(o.corpus);
  const auto vocab = Vocabulary::build(texts, c.data.max_vocab, c.data.min_count);
  c.model.vocab_size = vocab.size();
  log_line(err, {{"command", "pretrain"}, {"corpus", o.corpus}, {"out", o.out}, {"config", to_json(c)}});
  auto chunks = pack_sequences(texts, vocab, c.data.seq_len);
  require(!chunks.empty(), ErrorKind::input, "corpus is shorter than one sequence of " + std::to_string(c.data.seq_len));
  BatchStream stream(std::move(chunks), vocab.size(), {c.train.batch_size, c.data.epochs, c.data.mask, c.train.seed});
  Checkpoint start{c.model, init_weights(c.model, c.train.seed), vocab.tokens(), {}};
  const auto result = run_mlm_pretrain(start, source_of(stream), c.train);
  save_run(result, o);
  log_result(err, result);
  return kOk;
}

int cmd_convert(const Options& o, std::ostream&, std::ostream& err, bool pattern_change) {
  log_line(err, {{"command", pattern_change ? "convert" : "extend"},
                 {"in", o.in},
                 {"out", o.out},
                 {"pattern", o.pattern},
                 {"max_pos", o.max_pos},
                 {"pos_init", o.pos_init},
                 {"seed", o.seed}});
  const auto ck = load_checkpoint(o.in);
  const auto init = parse_position_init(o.pos_init);
  Checkpoint result = pattern_change
                          ? convert(ck, ConvertPlan{parse_attention_spec(o.pattern), o.max_pos, init, o.seed})
                          : extend_only(ck, o.max_pos, init, o.seed);
  save_checkpoint(result, o.out);
  log_line(err, {{"attention", to_string(result.config.attention_spec)},
                 {"max_positions", result.config.max_positions}});
  return kOk;
}

int cmd_distill(const Options& o, std::ostream&, std::ostream& err) {
  RunConfig c = resolve(o);
  const auto teacher = load_checkpoint(o.teacher);
  c.model = teacher.config;
  log_line(err, {{"command", "distill"}, {"teacher", o.teacher}, {"corpus", o.corpus}, {"out", o.out},
                 {"config", to_json(c)}});
  const auto vocab = checkpoint_vocab(teacher, o.teacher);
  require(c.data.seq_len <= teacher.config.max_positions, ErrorKind::length,
          "data.seq_len " + std::to_string(c.data.seq_len) + " exceeds the teacher's max_positions");
  auto chunks = pack_sequences(corpus_texts(o.corpus), vocab, c.data.seq_len);
  require(!chunks.empty(), ErrorKind::input, "corpus is shorter than one sequence of " + std::to_string(c.data.seq_len));
  BatchStream stream(std::move(chunks), vocab.size(), {c.train.batch_size, c.data.epochs, c.data.mask, c.train.seed});
  const auto result = run_distillation(teacher, source_of(stream), c.train);
  save_run(result, o);
  log_result(err, result);
  return kOk;
}

int cmd_finetune(const Options& o, std::ostream&, std::ostream& err) {
  require(o.task == "ner", ErrorKind::unsupported, "finetune supports --task ner only");
  RunConfig c = resolve(o);
  const auto start = load_checkpoint(o.in);
  c.model = start.config;
  log_line(err, {{"command", "finetune"}, {"in", o.in}, {"data", o.data}, {"task", o.task}, {"out", o.out},
                 {"config", to_json(c)}});
  const auto vocab = checkpoint_vocab(start, o.in);
  const auto sentences = conll_data(o.data);
  require(!sentences.empty(), ErrorKind::input, "no sentences in " + o.data);
  TaggedStream stream(sentences, vocab, start.config.max_positions, c.train.batch_size, c.data.epochs, c.train.seed);
  const auto result = run_finetune_tokencls(start, [&] { return stream.next(); }, c.train);
  save_run(result, o);
  log_result(err, result);
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  log_line(err, {{"command", "eval"}, {"in", o.in}, {"data", o.data}, {"task", o.task}, {"truncate", o.truncate},
                 {"seq_len", o.seq_len}, {"seed", o.seed}});
  const auto ck = load_checkpoint(o.in);
  const auto vocab = checkpoint_vocab(ck, o.in);
  if (o.task == "mlm") {
    const std::size_t len = o.seq_len ? o.seq_len : ck.config.max_positions;
    require(len <= ck.config.max_positions, ErrorKind::length, "--seq-len exceeds the model's max_positions");
    const auto packed = tokenize_pack(corpus_texts(o.data), vocab, len, MaskPolicy{}, o.seed);
    require(packed.status == StreamStatus::ok, ErrorKind::input, "corpus is shorter than one sequence");
    std::ostringstream report;
    report << "metric,value\nmasked_token_accuracy," << std::setprecision(6) << std::fixed
           << masked_token_accuracy(ck, packed.chunks) << '\n';
    if (o.report.empty()) {
      out << report.str();
    } else {
      open_out(o.report) << report.str();
    }
    return kOk;
  }
  require(o.task == "ner", ErrorKind::unsupported, "unknown task '" + o.task + "'");
  auto sentences = conll_data(o.data);
  if (o.truncate) sentences = truncate_sentences(std::move(sentences), o.truncate);
  for (std::size_t i = 0; i < sentences.size(); ++i)
    require(sentences[i].tokens.size() <= ck.config.max_positions, ErrorKind::length,
            "sentence " + std::to_string(i) + " has " + std::to_string(sentences[i].tokens.size()) +
                " tokens, over max_positions " + std::to_string(ck.config.max_positions) + " (use --truncate)");
  std::vector<std::vector<std::string>> gold;
  for (const auto& s : sentences) gold.push_back(s.tags);
  const auto scores = entity_f1(predict_tags(ck, vocab, sentences), gold);
  if (o.report.empty()) {
    write_metrics_csv(out, scores);
  } else {
    auto f = open_out(o.report);
    write_metrics_csv(f, scores);
  }
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  BenchConfig b = o.config.empty() ? BenchConfig{} : load_config(o.config).bench;
  if (!o.seq_lens.empty()) b.seq_lens = o.seq_lens;
  b.batch_size = o.batch;
  b.timed_reps = o.reps;
  b.warmup_reps = o.warmup;
  b.seed = o.seed;
  log_line(err, {{"command", "bench"},
                 {"models", o.models},
                 {"seq_lens", b.seq_lens},
                 {"batch", b.batch_size},
                 {"timed_reps", b.timed_reps},
                 {"warmup_reps", b.warmup_reps},
                 {"seed", b.seed}});
  validate(b);
  std::vector<BenchResult> all;
  for (const auto& path : o.models) {
    const auto res = time_inference(load_checkpoint(path), b, fs::path(path).stem().string());
    all.insert(all.end(), res.begin(), res.end());
  }
  write_bench_csv(out, all);
  const auto report = scaling_report(all);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  if (!o.scaling.empty()) {
    auto f = open_out(o.scaling);
    write_scaling_csv(f, report);
  }
  return kOk;
}

int cmd_filter(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig c = o.policy.empty() ? RunConfig{} : load_config(o.policy);
  log_line(err, {{"command", "filter-corpus"}, {"in", o.in}, {"out", o.out}, {"filter", to_json(c)["filter"]}});
  auto in = open_in(o.in, "corpus");
  const auto result = filter_stream(read_records(in), c.filter);
  auto f = open_out(o.out);
  write_records(f, result.kept);
  if (o.report.empty()) {
    write_filter_report(out, result);
  } else {
    auto r = open_out(o.report);
    write_filter_report(r, result);
  }
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out, std::ostream& err) {
  log_line(err, {{"command", "stats"}, {"data", o.data}, {"sample_std", o.sample_std}});
  const auto sentences = conll_data(o.data);
  write_length_report(out, sentence_length_stats(sentences, o.sample_std ? Deviation::sample : Deviation::population));
  out << '\n';
  write_tag_report(out, tag_distribution(sentences));
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::format: return kData;
    default: return kContract;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse-attention conversion and distillation toolkit", "eadl"};
  app.require_subcommand(1);
  Options o;

  auto train_flags = [&](CLI::App* sub) {
    sub->add_option("--loss-csv", o.loss_csv, "Loss trajectory CSV (default: <out>.loss.csv)");
    sub->add_option("--seed", o.seed, "Overrides train.seed")->each([&](const std::string&) { o.seed_set = true; });
    sub->add_option("--steps", o.steps, "Overrides train.steps")->each([&](const std::string&) { o.steps_set = true; });
  };

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  synth->add_option("--kind", o.kind)->required()->check(CLI::IsMember({"mlm_toy", "ner_toy"}));
  synth->add_option("--size", o.size)->required();
  synth->add_option("--seed", o.seed);
  synth->add_option("--out", o.out)->required();

  auto* pretrain = app.add_subcommand("pretrain", "Masked-LM pretraining from scratch");
  pretrain->add_option("--config", o.config);
  pretrain->add_option("--corpus", o.corpus)->required();
  pretrain->add_option("--out", o.out)->required();
  train_flags(pretrain);

  auto* conv = app.add_subcommand("convert", "Swap the attention pattern and grow the position table");
  conv->add_option("--in", o.in)->required();
  conv->add_option("--pattern", o.pattern)->required();
  conv->add_option("--max-pos", o.max_pos)->required();
  conv->add_option("--pos-init", o.pos_init)->check(CLI::IsMember({"cyclic", "random"}));
  conv->add_option("--seed", o.seed);
  conv->add_option("--out", o.out)->required();

  auto* extend = app.add_subcommand("extend", "Grow the position table, keep the attention pattern");
  extend->add_option("--in", o.in)->required();
  extend->add_option("--max-pos", o.max_pos)->required();
  extend->add_option("--pos-init", o.pos_init)->check(CLI::IsMember({"cyclic", "random"}));
  extend->add_option("--seed", o.seed);
  extend->add_option("--out", o.out)->required();

  auto* distill = app.add_subcommand("distill", "Distill a teacher into a half-depth student");
  distill->add_option("--teacher", o.teacher)->required();
  distill->add_option("--config", o.config);
  distill->add_option("--corpus", o.corpus)->required();
  distill->add_option("--out", o.out)->required();
  train_flags(distill);

  auto* finetune = app.add_subcommand("finetune", "Token-classification fine-tuning");
  finetune->add_option("--in", o.in)->required();
  finetune->add_option("--task", o.task)->check(CLI::IsMember({"ner"}));
  finetune->add_option("--data", o.data)->required();
  finetune->add_option("--config", o.config);
  finetune->add_option("--out", o.out)->required();
  train_flags(finetune);

  auto* eval = app.add_subcommand("eval", "Entity F1 (ner) or masked-token accuracy (mlm)");
  eval->add_option("--in", o.in)->required();
  eval->add_option("--task", o.task)->check(CLI::IsMember({"ner", "mlm"}));
  eval->add_option("--data", o.data)->required();
  eval->add_option("--truncate", o.truncate, "Cap sentences at N tokens");
  eval->add_option("--seq-len", o.seq_len, "mlm: packed sequence length (default max_positions)");
  eval->add_option("--seed", o.seed, "mlm: masking seed");
  eval->add_option("--out", o.report, "Write the report here instead of stdout");

  auto* bench = app.add_subcommand("bench", "Inference timing and memory");
  bench->add_option("--models", o.models)->required()->delimiter(',');
  bench->add_option("--seq-lens", o.seq_lens)->delimiter(',');
  bench->add_option("--batch", o.batch);
  bench->add_option("--reps", o.reps);
  bench->add_option("--warmup", o.warmup);
  bench->add_option("--seed", o.seed);
  bench->add_option("--config", o.config, "Takes bench.seq_lens from the file");
  bench->add_option("--scaling", o.scaling, "Write the scaling report CSV here");

  auto* filter = app.add_subcommand("filter-corpus", "Metadata filter and deduplication");
  filter->add_option("--in", o.in)->required();
  filter->add_option("--out", o.out)->required();
  filter->add_option("--policy", o.policy, "Config file; its filter section is used");
  filter->add_option("--report", o.report, "Write the reason counts here instead of stdout");

  auto* stats = app.add_subcommand("stats", "Sentence length and tag distribution reports");
  stats->add_option("--data", o.data)->required();
  stats->add_flag("--sample-std", o.sample_std, "Sample instead of population standard deviation");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "ERR " << kUsage << ": " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*synth) return cmd_synth(o, out, err);
    if (*pretrain) return cmd_pretrain(o, out, err);
    if (*conv) return cmd_convert(o, out, err, true);
    if (*extend) return cmd_convert(o, out, err, false);
    if (*distill) return cmd_distill(o, out, err);
    if (*finetune) return cmd_finetune(o, out, err);
    if (*eval) return cmd_eval(o, out, err);
    if (*bench) return cmd_bench(o, out, err);
    if (*filter) return cmd_filter(o, out, err);
    if (*stats) return cmd_stats(o, out, err);
  } catch (const UsageError& e) {
    err << "ERR " << kUsage << ": " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << "ERR " << code << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
    return code;
  } catch (const fs::filesystem_error& e) {
    err << "ERR " << kData << ": " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace eadl::cli
