#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "undermine/checkpoint.hpp"
#include "undermine/corpus.hpp"
#include "undermine/errors.hpp"
#include "undermine/evaluation.hpp"
#include "undermine/generator.hpp"
#include "undermine/pipeline.hpp"
#include "undermine/ranker.hpp"
#include "undermine/run_config.hpp"

namespace undermine::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags collected as text and applied on top of the config file.
struct Overrides {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> values;
};

class CommandSet {
 public:
  CommandSet(CLI::App& app, std::ostream& out) : app_(app), out_(out) {}

  CLI::App* add(const std::string& name, const std::string& help, std::vector<std::string> keys,
                std::function<void(const RunConfig&)> body) {
    auto* sub = app_.add_subcommand(name, help);
    auto& ov = overrides_[name];
    sub->add_option("--config", ov.config_file, "flat key = value file; flags override its values")
        ->check(CLI::ExistingFile);
    for (const auto& key : keys) {
      std::string flag = "--" + key;
      std::replace(flag.begin() + 2, flag.end(), '_', '-');
      sub->add_option_function<std::string>(
          flag, [&ov, key](const std::string& v) { ov.values[key] = v; }, describe(key));
    }
    bodies_[name] = std::move(body);
    return sub;
  }

  void dispatch() {
    for (auto* sub : app_.get_subcommands()) {
      const auto& ov = overrides_.at(sub->get_name());
      RunConfig config;
      if (ov.config_file) config.load_file(*ov.config_file);
      for (const auto& [k, v] : ov.values) config.set(k, v);
      if (config.backbone != "tiny")
        throw ModelError("backbone '" + config.backbone + "' is not available; only 'tiny' is bundled");
      bodies_.at(sub->get_name())(config);
    }
  }

  std::ostream& out() { return out_; }

 private:
  static std::string describe(const std::string& key) {
    static const std::map<std::string, std::string> help = {
        {"corpus", "corpus JSON-lines file"},
        {"output_dir", "directory receiving every artifact and manifest.json"},
        {"ranker_checkpoint", "trained ranker checkpoint directory"},
        {"pointwise_checkpoint", "optional ranker trained with the pointwise objective"},
        {"generator_checkpoint", "trained generator checkpoint directory"},
        {"backbone", "encoder backbone: tiny (pretrained:<name> is not bundled)"},
        {"seed", "base seed for initialisation, shuffling and sampling"},
        {"top_k", "number of highest-ranked premises to attack"},
        {"sample_top_k", "top-k truncation for sampling (0 disables)"},
        {"top_p", "nucleus mass for sampling"},
        {"temperature", "sampling temperature"},
        {"min_tokens", "minimum generated tokens before [eos] is allowed"},
        {"max_tokens", "maximum generated tokens"},
        {"stopwords", "stopword file (default: built-in list)"},
        {"variant", "generator variant: with | without | counter-baseline"},
        {"objective", "ranking objective: listwise | pointwise"},
        {"mode", "reference mode: counter | full"},
        {"split", "corpus split to process: train | valid | test"},
        {"epochs", "training epochs"},
        {"lr", "Adam learning rate"},
        {"batch_size", "posts (ranker) or sequences (generator) per update"},
        {"max_len", "model context length"},
        {"hidden", "hidden width"},
        {"layers", "transformer layers"},
        {"heads", "attention heads"},
        {"synth_train", "synthetic training posts"},
        {"synth_valid", "synthetic validation posts"},
        {"synth_test", "synthetic test posts"},
    };
    return help.at(key);
  }

  CLI::App& app_;
  std::ostream& out_;
  std::map<std::string, Overrides> overrides_;
  std::map<std::string, std::function<void(const RunConfig&)>> bodies_;
};

// --- helpers ----------------------------------------------------------------

fs::path output_dir(const RunConfig& c) {
  if (c.output_dir.empty()) throw ConfigError("output_dir is not set");
  fs::create_directories(c.output_dir);
  return c.output_dir;
}

Corpus read_gold(const RunConfig& c) {
  require_exists(c.corpus, "corpus");
  return load_corpus(c.corpus);
}

StopwordList stopwords_for(const RunConfig& c) {
  if (c.stopwords.empty()) return default_stopwords();
  require_exists(c.stopwords, "stopwords");
  return load_stopwords(c.stopwords);
}

SamplingConfig sampling_for(const RunConfig& c) {
  SamplingConfig s;
  s.top_k = c.sample_top_k;
  s.top_p = c.top_p;
  s.temperature = c.temperature;
  s.min_tokens = c.min_tokens;
  s.max_tokens = c.max_tokens;
  s.seed = c.seed;
  s.validate();
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_lines(const fs::path& path, const std::vector<json>& records) {
  std::ostringstream buf;
  for (const auto& r : records) buf << r.dump() << '\n';
  write_text(path, buf.str());
}

std::vector<const ArgumentPost*> posts_with_weak(const Corpus& corpus, Split split) {
  std::vector<const ArgumentPost*> out;
  for (const ArgumentPost* p : corpus.posts_in(split))
    if (!p->weak_indices.empty()) out.push_back(p);
  return out;
}

std::string fmt(double v, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// --- commands ---------------------------------------------------------------

void cmd_ingest(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = read_gold(c);
  const fs::path dir = output_dir(c);
  const json manifest = corpus.manifest().to_json();
  write_text(dir / "corpus_manifest.json", manifest.dump(2) + "\n");
  write_run_manifest(dir, "ingest", c, manifest);
  out << manifest.dump(2) << '\n';
}

void cmd_synth(const RunConfig& c, std::ostream& out) {
  const std::size_t n = c.synth_train + c.synth_valid + c.synth_test;
  if (n == 0) throw ConfigError("synthetic corpus needs at least one post");
  SynthOptions opts;
  opts.valid_fraction = static_cast<double>(c.synth_valid) / static_cast<double>(n);
  opts.test_fraction = static_cast<double>(c.synth_test) / static_cast<double>(n);
  const auto vocab = default_synth_vocabulary();
  const Corpus corpus = synth_corpus(c.seed, n, vocab, opts);
  const fs::path dir = output_dir(c);
  save_corpus(corpus, dir / "corpus.jsonl");
  write_run_manifest(dir, "synth", c, corpus.manifest().to_json());
  out << "wrote " << (dir / "corpus.jsonl").string() << " (" << corpus.posts().size() << " posts, "
      << corpus.triples().size() << " triples)\n";
}

void cmd_train_ranker(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = read_gold(c);
  const fs::path dir = output_dir(c);
  RankerModelConfig mc;
  mc.objective = parse_rank_objective(c.objective);
  if (c.max_len) mc.max_len = *c.max_len;
  if (c.hidden) mc.hidden = *c.hidden;
  if (c.layers) mc.layers = *c.layers;
  if (c.heads) mc.heads = *c.heads;
  RankerTrainConfig tc;
  tc.seed = c.seed;
  if (c.epochs) tc.epochs = *c.epochs;
  if (c.lr) tc.lr = *c.lr;
  if (c.batch_size) tc.batch_posts = *c.batch_size;

  PremiseScorer scorer(build_ranker_vocabulary(corpus), mc, derive_seed(c.seed, "ranker-init"));
  const RankerTrainReport report = train_ranker(corpus, scorer, tc);
  json log = {{"epoch_loss", report.epoch_loss},
              {"used_posts", report.used_posts},
              {"skipped_posts", report.skipped_posts}};
  scorer.save(dir / "checkpoint", log);
  write_run_manifest(dir, "train-ranker", c, log);
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e)
    out << "epoch " << e + 1 << "  loss " << fmt(report.epoch_loss[e], 4) << '\n';
  out << "checkpoint " << (dir / "checkpoint").string() << '\n';
}

void cmd_eval_ranker(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = read_gold(c);
  require_exists(c.ranker_checkpoint, "ranker_checkpoint");
  const fs::path dir = output_dir(c);
  const PremiseScorer scorer = PremiseScorer::load(c.ranker_checkpoint);
  std::optional<PremiseScorer> pointwise;
  if (!c.pointwise_checkpoint.empty()) {
    require_exists(c.pointwise_checkpoint, "pointwise_checkpoint");
    pointwise.emplace(PremiseScorer::load(c.pointwise_checkpoint));
  }
  const Split split = parse_split(c.split);
  const auto posts = posts_with_weak(corpus, split);
  if (posts.empty()) throw DataError("split '" + c.split + "' has no post with a weak premise");

  std::vector<std::vector<int>> labels;
  for (const ArgumentPost* p : posts) labels.push_back(p->labels());

  struct Row {
    std::string name;
    std::vector<PremiseScores> rankings;
  };
  std::vector<Row> rows;
  rows.push_back({"random", {}});
  rows.push_back({"sentence-length", {}});
  if (pointwise) rows.push_back({"pointwise", {}});
  rows.push_back({scorer.config().objective == RankObjective::listwise ? "listwise" : "ranker", {}});
  for (auto& r : rows) r.rankings.resize(posts.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(posts.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const ArgumentPost& p = *posts[i];
    std::size_t r = 0;
    rows[r++].rankings[i] = baseline_rank(p, BaselineMethod::random, c.seed);
    rows[r++].rankings[i] = baseline_rank(p, BaselineMethod::sentence_length, c.seed);
    if (pointwise) rows[r++].rankings[i] = baseline_rank(p, BaselineMethod::pointwise, c.seed, &*pointwise);
    rows[r].rankings[i] = scorer.rank(p);
  }

  std::vector<json> records;
  for (std::size_t i = 0; i < posts.size(); ++i) records.push_back(ranking_record(posts[i]->id, rows.back().rankings[i]));
  write_lines(dir / "rankings.jsonl", records);

  std::ostringstream table;
  table << std::left << std::setw(18) << "method" << std::right << std::setw(8) << "P@1" << std::setw(8) << "A@3"
        << '\n';
  json metrics = json::object();
  for (const auto& r : rows) {
    const double p1 = precision_at_1(r.rankings, labels);
    const double a3 = accuracy_at_3(r.rankings, labels);
    metrics[r.name] = {{"p_at_1", p1}, {"a_at_3", a3}};
    table << std::left << std::setw(18) << r.name << std::right << std::setw(8) << fmt(p1, 3) << std::setw(8)
          << fmt(a3, 3) << '\n';
  }
  const json summary = {{"split", c.split}, {"posts", posts.size()}, {"metrics", metrics}};
  write_text(dir / "ranker_metrics.json", summary.dump(2) + "\n");
  write_text(dir / "ranker_metrics.txt", table.str());
  write_run_manifest(dir, "eval-ranker", c, summary);
  out << table.str();
}

void cmd_train_generator(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = read_gold(c);
  const fs::path dir = output_dir(c);
  GeneratorModelConfig mc;
  mc.variant = parse_generator_variant(c.variant);
  if (c.max_len) mc.max_len = *c.max_len;
  if (c.hidden) mc.hidden = *c.hidden;
  if (c.layers) mc.layers = *c.layers;
  if (c.heads) mc.heads = *c.heads;
  GeneratorTrainConfig tc;
  tc.seed = c.seed;
  if (c.epochs) tc.epochs = *c.epochs;
  if (c.lr) tc.lr = *c.lr;
  if (c.batch_size) tc.batch_size = *c.batch_size;
  tc.on_epoch = [&](std::size_t epoch, const JointLoss& l, const GeneratorModel& m) {
    m.save(dir / "epochs" / ("epoch-" + std::to_string(epoch + 1)), {{"epoch", epoch + 1}});
    out << "epoch " << epoch + 1 << "  L1 " << fmt(l.lm, 4) << "  L2 " << fmt(l.cls, 4) << "  total "
        << fmt(l.total, 4) << std::endl;
  };

  GeneratorModel model(build_generator_vocabulary(corpus), mc, derive_seed(c.seed, "generator-init"));
  const auto triples = corpus.triples_in(Split::train);
  if (triples.empty()) throw DataError("corpus has no training triples");
  const GeneratorTrainReport report = train_generator(triples, corpus, model, tc);
  json epochs = json::array();
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const JointLoss& l = report.epochs[e];
    epochs.push_back({{"lm", l.lm}, {"cls", l.cls}, {"total", l.total}});
  }
  const json log = {{"epochs", epochs}, {"sequences", report.sequences}};
  model.save(dir / "checkpoint", log);
  write_run_manifest(dir, "train-generator", c, log);
  out << "checkpoint " << (dir / "checkpoint").string() << '\n';
}

GeneratorModel load_generator(const RunConfig& c) {
  if (c.generator_checkpoint.empty())
    throw ConfigError("generator_checkpoint is not set; train one with train-generator");
  require_exists(c.generator_checkpoint, "generator_checkpoint");
  return GeneratorModel::load(c.generator_checkpoint);
}

void cmd_generate(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = read_gold(c);
  const GeneratorModel model = load_generator(c);
  const fs::path dir = output_dir(c);
  const SamplingConfig base = sampling_for(c);
  auto triples = corpus.triples_in(parse_split(c.split));
  if (triples.empty()) throw DataError("split '" + c.split + "' has no triples");
  std::stable_sort(triples.begin(), triples.end(), [](const CounterTriple* a, const CounterTriple* b) {
    return std::tie(a->post_id, a->attacked_indices) < std::tie(b->post_id, b->attacked_indices);
  });

  std::vector<json> records(triples.size());
  std::vector<std::string> errors(triples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(triples.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const CounterTriple& t = *triples[i];
    SamplingConfig s = base;
    s.seed = derive_seed(derive_seed(c.seed, t.post_id), i);
    try {
      const Generation g = generate_counter(model, t.claim, t.premises, t.attacked_indices, s);
      records[i] = generation_record(t.post_id, t.attacked_indices, g.text, s.seed);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ModelError(e);
  write_lines(dir / "generations.jsonl", records);
  write_run_manifest(dir, "generate", c, {{"generations", records.size()}});
  out << "wrote " << records.size() << " generations to " << (dir / "generations.jsonl").string() << '\n';
}

void cmd_undermine(const RunConfig& c, std::ostream& out) {
  // Checked before anything heavy so a missing generator fails fast.
  const GeneratorModel model = load_generator(c);
  const Corpus corpus = read_gold(c);
  require_exists(c.ranker_checkpoint, "ranker_checkpoint");
  const PremiseScorer scorer = PremiseScorer::load(c.ranker_checkpoint);
  const fs::path dir = output_dir(c);
  if (c.top_k == 0) throw ConfigError("top_k must be at least 1");

  const ScorerRanker ranker(scorer);
  const ModelCounterGenerator generator(model, sampling_for(c));
  const StopwordList stopwords = stopwords_for(c);

  // Posts with gold counters, so the run can be scored afterwards.
  std::vector<const ArgumentPost*> posts;
  for (const ArgumentPost* p : corpus.posts_in(parse_split(c.split)))
    if (!corpus.triples_of(p->id).empty()) posts.push_back(p);
  if (posts.empty()) throw DataError("split '" + c.split + "' has no post with gold counters");
  std::stable_sort(posts.begin(), posts.end(),
                   [](const ArgumentPost* a, const ArgumentPost* b) { return a->id < b->id; });

  std::vector<std::optional<CounterResult>> results(posts.size());
  std::vector<std::string> errors(posts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(posts.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    PipelineConfig pc;
    pc.top_k = c.top_k;
    pc.seed = derive_seed(c.seed, posts[i]->id);
    pc.stopwords = stopwords;
    try {
      results[i] = undermine::undermine(*posts[i], ranker, generator, pc);
    } catch (const std::exception& e) {
      errors[i] = posts[i]->id + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ModelError(e);

  std::vector<json> counter_results, generations;
  for (const auto& r : results) {
    counter_results.push_back(r->to_json());
    const Candidate& chosen = r->chosen();
    const std::size_t attacked[] = {chosen.attacked_index};
    generations.push_back(
        generation_record(r->post_id, attacked, chosen.counter, candidate_seed(derive_seed(c.seed, r->post_id),
                                                                                chosen.attacked_index)));
  }
  write_lines(dir / "counter_results.jsonl", counter_results);
  write_lines(dir / "generations.jsonl", generations);
  write_run_manifest(dir, "undermine", c, {{"posts", posts.size()}});
  out << "undermined " << posts.size() << " posts with top-" << c.top_k << " selection\n";
}

void cmd_evaluate(const RunConfig& c, std::ostream& out, const std::string& generations_path) {
  const Corpus corpus = read_gold(c);
  fs::path gen = generations_path;
  if (gen.empty()) gen = output_dir(c) / "generations.jsonl";
  require_exists(gen, "generations");
  const fs::path dir = output_dir(c);
  const auto records = load_generations(gen);
  const EvalReport report = evaluate_run(records, corpus, parse_reference_mode(c.mode), stopwords_for(c));
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  write_text(dir / "report.txt", report.to_text());
  write_text(dir / "coverage_histogram.csv", report.histogram_csv());
  write_run_manifest(dir, "evaluate", c, {{"generations", gen.string()}});
  out << report.to_text();
}

EvalReport read_report(const fs::path& path) {
  fs::path p = fs::is_directory(path) ? path / "report.json" : path;
  require_exists(p, "report");
  std::ifstream in(p);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
  return EvalReport::from_json(j);
}

void cmd_compare(const RunConfig& c, std::ostream& out, const std::string& a, const std::string& b) {
  const EvalReport ra = read_report(a);
  const EvalReport rb = read_report(b);
  const fs::path dir = output_dir(c);
  EvalReport combined = ra;
  combined.significance = compare_reports(ra, rb, "a", "b");
  json sig = combined.to_json().at("significance");
  const json summary = {{"a", a}, {"b", b}, {"significance", sig}};
  write_text(dir / "comparison.json", summary.dump(2) + "\n");
  write_text(dir / "comparison.txt", combined.to_text());
  write_run_manifest(dir, "compare", c, {{"a", a}, {"b", b}});
  out << "a = " << a << "\nb = " << b << '\n' << combined.to_text();
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::model: return 4;
  }
  return 4;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rank the premises of an argument by attackability and generate counters against the weakest."};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  CommandSet cmds(app, out);

  const std::vector<std::string> common = {"output_dir", "seed"};
  auto with = [&](std::vector<std::string> keys) {
    keys.insert(keys.end(), common.begin(), common.end());
    return keys;
  };
  const std::vector<std::string> model_keys = {"backbone", "epochs", "lr", "batch_size",
                                               "max_len",  "hidden", "layers", "heads"};
  const std::vector<std::string> sampling_keys = {"sample_top_k", "top_p", "temperature", "min_tokens",
                                                  "max_tokens"};
  auto join = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  cmds.add("ingest", "Validate a corpus and write its per-split manifest.", with({"corpus"}),
           [&](const RunConfig& c) { cmd_ingest(c, out); });
  cmds.add("synth", "Write a synthetic corpus with lexically marked weak premises.",
           with({"synth_train", "synth_valid", "synth_test"}), [&](const RunConfig& c) { cmd_synth(c, out); });
  cmds.add("train-ranker", "Train the premise ranker.", with(join({"corpus", "objective"}, model_keys)),
           [&](const RunConfig& c) { cmd_train_ranker(c, out); });
  cmds.add("eval-ranker", "Score a ranker against the random and sentence-length baselines (P@1, A@3).",
           with({"corpus", "ranker_checkpoint", "pointwise_checkpoint", "split", "backbone"}),
           [&](const RunConfig& c) { cmd_eval_ranker(c, out); });
  cmds.add("train-generator", "Train the counter generator.", with(join({"corpus", "variant"}, model_keys)),
           [&](const RunConfig& c) { cmd_train_generator(c, out); });
  cmds.add("generate", "Generate counters against the gold weak premises of a split.",
           with(join({"corpus", "generator_checkpoint", "split", "backbone"}, sampling_keys)),
           [&](const RunConfig& c) { cmd_generate(c, out); });
  cmds.add("undermine", "Rank premises, attack the top-k and keep the best-covering counter.",
           with(join({"corpus", "ranker_checkpoint", "generator_checkpoint", "top_k", "split", "stopwords",
                      "backbone"},
                     sampling_keys)),
           [&](const RunConfig& c) { cmd_undermine(c, out); });

  std::string generations;
  auto* eval = cmds.add("evaluate", "Score generated counters with BLEU, METEOR and weak-premise coverage.",
                        with({"corpus", "mode", "stopwords"}),
                        [&](const RunConfig& c) { cmd_evaluate(c, out, generations); });
  eval->add_option("--generations", generations, "generations JSON-lines (default: <output-dir>/generations.jsonl)");

  std::string run_a, run_b;
  auto* compare = cmds.add("compare", "Paired one-tailed t-tests of run A over run B for every metric.",
                           with({}), [&](const RunConfig& c) { cmd_compare(c, out, run_a, run_b); });
  compare->add_option("run_a", run_a, "report.json of run A, or its directory")->required();
  compare->add_option("run_b", run_b, "report.json of run B, or its directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << version_string() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    // Subcommand help comes through here as well.
    if (e.get_exit_code() == 0) {
      for (const auto* sub : app.get_subcommands()) out << sub->help();
      if (app.get_subcommands().empty()) out << app.help();
      return 0;
    }
    err << "error: config: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    cmds.dispatch();
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: model: " << one_line(e.what()) << '\n';
    return 4;
  }
  return 0;
}

}  // namespace undermine::cli
