#include "undermine/generator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "undermine/checkpoint.hpp"
#include "undermine/errors.hpp"

namespace undermine {

using nlohmann::json;

std::string_view to_string(GeneratorVariant variant) {
  switch (variant) {
    case GeneratorVariant::without_weak_token: return "without";
    case GeneratorVariant::with_weak_token: return "with";
    case GeneratorVariant::counter_baseline: return "counter-baseline";
  }
  return "without";
}

GeneratorVariant parse_generator_variant(std::string_view name) {
  if (name == "without" || name == "w/o") return GeneratorVariant::without_weak_token;
  if (name == "with" || name == "w/") return GeneratorVariant::with_weak_token;
  if (name == "counter-baseline" || name == "counter_baseline") return GeneratorVariant::counter_baseline;
  throw ConfigError("unknown generator variant '" + std::string(name) + "'");
}

EncodedArgument encode_argument(std::string_view claim, std::span<const std::string> premises,
                                std::span<const std::size_t> attacked_indices, GeneratorVariant variant,
                                const Vocabulary& vocab) {
  for (std::size_t i : attacked_indices)
    if (i >= premises.size()) throw DataError("attacked premise index " + std::to_string(i) + " out of range");
  EncodedArgument arg;
  auto push = [&](TokenId id, TokenType type) {
    arg.ids.push_back(id);
    arg.types.push_back(static_cast<int>(type));
  };
  push(Vocabulary::kBos, TokenType::arg);
  for (TokenId id : vocab.encode(claim)) push(id, TokenType::arg);
  for (std::size_t i = 0; i < premises.size(); ++i) {
    const bool attacked = variant != GeneratorVariant::counter_baseline &&
                          std::find(attacked_indices.begin(), attacked_indices.end(), i) != attacked_indices.end();
    const bool wrap = attacked && variant == GeneratorVariant::with_weak_token;
    if (wrap) push(Vocabulary::kWeak, TokenType::weak);
    for (TokenId id : vocab.encode(premises[i])) push(id, attacked ? TokenType::weak : TokenType::arg);
    if (wrap) push(Vocabulary::kWeak, TokenType::weak);
  }
  return arg;
}

TrainingSequence build_sequence(const CounterTriple& triple, std::string_view counter_text, int cls_label,
                                GeneratorVariant variant, const Vocabulary& vocab, std::size_t context) {
  EncodedArgument arg = encode_argument(triple.claim, triple.premises, triple.attacked_indices, variant, vocab);
  const std::size_t fixed = arg.ids.size() + 2;  // [counter] ... [eos]
  if (fixed > context)
    throw ModelError("argument of post " + triple.post_id + " (" + std::to_string(arg.ids.size()) +
                     " tokens) exceeds model context " + std::to_string(context));
  std::vector<TokenId> counter = vocab.encode(counter_text);
  counter.resize(std::min(counter.size(), context - fixed));

  TrainingSequence seq;
  seq.variant = variant;
  seq.cls_label = cls_label;
  seq.counter_text = std::string(counter_text);
  seq.counter_start = arg.ids.size();
  seq.token_ids = std::move(arg.ids);
  seq.token_types = std::move(arg.types);
  const int counter_type = static_cast<int>(TokenType::counter);
  seq.token_ids.push_back(Vocabulary::kCounter);
  seq.token_ids.insert(seq.token_ids.end(), counter.begin(), counter.end());
  seq.token_ids.push_back(Vocabulary::kEos);
  seq.token_types.resize(seq.token_ids.size(), counter_type);
  seq.lm_targets.resize(seq.token_ids.size(), -1);
  for (std::size_t p = 0; p + 1 < seq.token_ids.size(); ++p) seq.lm_targets[p] = seq.token_ids[p + 1];
  return seq;
}

TrainingSequence counter_baseline_sequence(const CounterTriple& triple, std::string_view counter_text,
                                           const Vocabulary& vocab, std::size_t context) {
  return build_sequence(triple, counter_text, 1, GeneratorVariant::counter_baseline, vocab, context);
}

TrainingSequence make_distractor(const CounterTriple& triple, const ArgumentPost& post, std::mt19937_64& rng,
                                 GeneratorVariant variant, const Vocabulary& vocab, std::size_t context) {
  if (post.premises.empty()) throw DataError("post " + post.id + " has no sentence to draw a distractor from");
  std::uniform_int_distribution<std::size_t> pick(0, post.premises.size() - 1);
  return build_sequence(triple, post.premises[pick(rng)], 0, variant, vocab, context);
}

std::vector<TrainingSequence> augment_with_distractors(std::span<const CounterTriple* const> triples,
                                                       const Corpus& corpus, GeneratorVariant variant,
                                                       const Vocabulary& vocab, std::size_t context,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingSequence> out;
  out.reserve(triples.size() * 2);
  for (const CounterTriple* t : triples) {
    const ArgumentPost* post = corpus.find_post(t->post_id);
    if (post == nullptr) throw DataError("triple references unknown post " + t->post_id);
    out.push_back(build_sequence(*t, t->counter, 1, variant, vocab, context));
    out.push_back(make_distractor(*t, *post, rng, variant, vocab, context));
  }
  return out;
}

// ---------------------------------------------------------------------------

json GeneratorModelConfig::to_json() const {
  return {{"max_len", max_len},
          {"hidden", hidden},
          {"layers", layers},
          {"heads", heads},
          {"variant", std::string(to_string(variant))}};
}

GeneratorModelConfig GeneratorModelConfig::from_json(const json& j) {
  GeneratorModelConfig c;
  c.max_len = j.at("max_len").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.variant = parse_generator_variant(j.at("variant").get<std::string>());
  return c;
}

GeneratorModel::GeneratorModel(Vocabulary vocab, const GeneratorModelConfig& config, std::uint64_t init_seed)
    : vocab_(std::move(vocab)),
      config_(config),
      init_seed_(init_seed),
      params_(std::make_unique<nn::ParameterSet>()) {
  TransformerConfig tc;
  tc.vocab_size = vocab_.size();
  tc.max_len = config_.max_len;
  tc.hidden = config_.hidden;
  tc.layers = config_.layers;
  tc.heads = config_.heads;
  tc.causal = true;
  tc.token_types = kTokenTypeCount;
  body_ = std::make_unique<TinyTransformer>(tc, *params_, "gen.");
  // The language-model head reuses the word-embedding table.
  lm_w_ = &body_->word_embeddings();
  lm_b_ = &params_->add("lm.b", 1, vocab_.size());
  cls_w_ = &params_->add("cls.w", config_.hidden, 2);
  cls_b_ = &params_->add("cls.b", 1, 2);
  init_transformer_params(*params_, init_seed_);
}

GeneratorModel::Outputs GeneratorModel::forward(nn::Graph& g, std::span<const TokenId> ids,
                                                std::span<const int> types, std::size_t lm_from) const {
  Outputs out;
  out.hidden = body_->forward(g, ids, types);
  if (lm_from < ids.size()) {
    const nn::Var rows = lm_from == 0 ? out.hidden : g.slice_rows(out.hidden, lm_from, ids.size() - lm_from);
    out.lm_logits = g.add_row(g.matmul_nt(rows, g.param(*lm_w_)), g.param(*lm_b_));
  }
  const nn::Var last = g.row(out.hidden, ids.size() - 1);
  out.cls_logits = g.add_row(g.matmul(last, g.param(*cls_w_)), g.param(*cls_b_));
  return out;
}

TrainingSequence GeneratorModel::sequence_for(const CounterTriple& triple, std::string_view counter_text,
                                              int cls_label) const {
  return build_sequence(triple, counter_text, cls_label, config_.variant, vocab_, config_.max_len);
}

void GeneratorModel::save(const std::filesystem::path& dir, const json& extra) const {
  save_checkpoint(dir, "generator", config_.to_json(), vocab_, *params_, init_seed_, extra);
}

GeneratorModel GeneratorModel::load(const std::filesystem::path& dir) {
  LoadedCheckpoint ck = open_checkpoint(dir, "generator");
  GeneratorModelConfig config;
  try {
    config = GeneratorModelConfig::from_json(ck.manifest.at("config"));
  } catch (const json::exception& e) {
    throw ModelError("bad generator config in " + dir.string() + ": " + e.what());
  }
  GeneratorModel model(std::move(ck.vocab), config, ck.manifest.value("seed", std::uint64_t{0}));
  read_weights(dir / "weights.bin", model.parameters());
  return model;
}

Vocabulary build_generator_vocabulary(const Corpus& corpus) {
  std::vector<std::string> texts;
  for (const ArgumentPost* p : corpus.posts_in(Split::train)) {
    texts.push_back(p->claim);
    texts.insert(texts.end(), p->premises.begin(), p->premises.end());
  }
  for (const CounterTriple* t : corpus.triples_in(Split::train)) texts.push_back(t->counter);
  return Vocabulary::build(texts);
}

// ---------------------------------------------------------------------------

JointLossVars joint_loss(nn::Graph& g, const GeneratorModel& model, std::span<const TrainingSequence> batch) {
  JointLossVars out;
  if (batch.empty()) throw DataError("joint loss over an empty batch");
  std::vector<nn::Var> lm_terms;
  std::vector<nn::Var> cls_terms;
  for (const TrainingSequence& seq : batch) {
    const bool genuine = seq.cls_label == 1;
    const auto fwd = model.forward(g, seq.token_ids, seq.token_types, genuine ? seq.counter_start : seq.size());
    const int label = seq.cls_label;
    cls_terms.push_back(g.cross_entropy(fwd.cls_logits, std::span<const int>(&label, 1), nn::Reduction::sum));
    if (!genuine) continue;
    ++out.genuine;
    const std::vector<int> targets(seq.lm_targets.begin() + static_cast<std::ptrdiff_t>(seq.counter_start),
                                   seq.lm_targets.end());
    out.lm_tokens += static_cast<std::size_t>(std::count_if(targets.begin(), targets.end(), [](int t) { return t >= 0; }));
    lm_terms.push_back(g.cross_entropy(fwd.lm_logits, targets, nn::Reduction::sum));
  }
  auto sum = [&](const std::vector<nn::Var>& terms) {
    nn::Var acc = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) acc = g.add(acc, terms[i]);
    return acc;
  };
  if (out.lm_tokens == 0) {
    std::cerr << "warning: batch without genuine counter tokens; language-model loss set to 0\n";
    out.lm = g.input(nn::Matrix(1, 1, 0.0));
  } else {
    out.lm = g.scale(sum(lm_terms), 1.0 / static_cast<double>(out.lm_tokens));
  }
  out.cls = g.scale(sum(cls_terms), 1.0 / static_cast<double>(batch.size()));
  out.total = g.add(out.lm, out.cls);
  return out;
}

JointLoss joint_loss(const GeneratorModel& model, std::span<const TrainingSequence> batch) {
  nn::Graph g(false);
  const JointLossVars v = joint_loss(g, model, batch);
  return {g.scalar(v.lm), g.scalar(v.cls), g.scalar(v.total), v.lm_tokens, v.genuine};
}

std::vector<int> classify(const GeneratorModel& model, std::span<const TrainingSequence> sequences) {
  std::vector<int> out;
  for (const auto& seq : sequences) {
    nn::Graph g(false);
    const auto fwd = model.forward(g, seq.token_ids, seq.token_types, seq.size());
    const nn::Matrix& logits = g.value(fwd.cls_logits);
    out.push_back(logits(0, 1) > logits(0, 0) ? 1 : 0);
  }
  return out;
}

GeneratorTrainReport train_generator(std::span<const CounterTriple* const> triples, const Corpus& corpus,
                                     GeneratorModel& model, const GeneratorTrainConfig& config) {
  if (triples.empty()) throw DataError("generator training set is empty");
  std::vector<TrainingSequence> data =
      augment_with_distractors(triples, corpus, model.config().variant, model.vocabulary(), model.config().max_len,
                               derive_seed(config.seed, "distractors"));
  GeneratorTrainReport report;
  report.sequences = data.size();

  nn::Adam adam({.lr = config.lr});
  std::mt19937_64 rng(config.seed);
  // A genuine sequence and its distractor are shuffled as one unit so every
  // batch carries language-model targets.
  std::vector<std::size_t> pairs(data.size() / 2);
  std::iota(pairs.begin(), pairs.end(), std::size_t{0});
  std::vector<std::size_t> order;
  order.reserve(data.size());
  const std::size_t batch_size = std::max<std::size_t>(2, config.batch_size);
  model.parameters().zero_grad();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    order.clear();
    for (std::size_t p : pairs) {
      order.push_back(2 * p);
      order.push_back(2 * p + 1);
    }
    JointLoss running;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<TrainingSequence> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      nn::Graph g;
      const JointLossVars v = joint_loss(g, model, batch);
      running.lm += g.scalar(v.lm);
      running.cls += g.scalar(v.cls);
      running.total += g.scalar(v.total);
      ++batches;
      g.backward(v.total);
      adam.step(model.parameters());
    }
    const double n = static_cast<double>(std::max<std::size_t>(batches, 1));
    running.lm /= n;
    running.cls /= n;
    running.total /= n;
    report.epochs.push_back(running);
    if (config.on_epoch) config.on_epoch(epoch, running, model);
  }
  return report;
}

// ---------------------------------------------------------------------------

void SamplingConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("sampling temperature must be positive");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (min_tokens > max_tokens) throw ConfigError("min_tokens exceeds max_tokens");
}

std::vector<double> truncated_distribution(std::span<const double> logits, const SamplingConfig& config) {
  config.validate();
  const std::size_t n = logits.size();
  std::vector<double> probs(logits.begin(), logits.end());
  double peak = -std::numeric_limits<double>::infinity();
  for (double& z : probs) {
    z /= config.temperature;
    peak = std::max(peak, z);
  }
  double total = 0.0;
  for (double& z : probs) {
    z = std::isinf(z) && z < 0 ? 0.0 : std::exp(z - peak);
    total += z;
  }
  for (double& p : probs) p /= total;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  std::size_t keep = n;
  if (config.top_k > 0) keep = std::min(keep, config.top_k);
  double kept_mass = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept_mass += probs[order[i]];
  // Nucleus over the top-k renormalised mass.
  double cumulative = 0.0;
  std::size_t nucleus = 0;
  while (nucleus < keep) {
    cumulative += probs[order[nucleus]] / kept_mass;
    ++nucleus;
    if (cumulative >= config.top_p) break;
  }
  keep = std::max<std::size_t>(nucleus, 1);

  std::vector<double> out(n, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < keep; ++i) mass += probs[order[i]];
  for (std::size_t i = 0; i < keep; ++i) out[order[i]] = probs[order[i]] / mass;
  return out;
}

std::size_t sample_token(std::span<const double> logits, const SamplingConfig& config, std::mt19937_64& rng) {
  const std::vector<double> probs = truncated_distribution(logits, config);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last = i;
    if (u < cumulative) return i;
  }
  return last;
}

Generation generate_counter(const GeneratorModel& model, std::string_view claim,
                            std::span<const std::string> premises, std::span<const std::size_t> attacked_indices,
                            const SamplingConfig& sampling) {
  sampling.validate();
  const GeneratorModelConfig& cfg = model.config();
  EncodedArgument arg = encode_argument(claim, premises, attacked_indices, cfg.variant, model.vocabulary());
  arg.ids.push_back(Vocabulary::kCounter);
  arg.types.push_back(static_cast<int>(TokenType::counter));
  if (arg.ids.size() + sampling.max_tokens > cfg.max_len)
    throw ModelError("argument (" + std::to_string(arg.ids.size()) + " tokens) plus " +
                     std::to_string(sampling.max_tokens) + " generated tokens exceeds model context " +
                     std::to_string(cfg.max_len));

  const TinyTransformer& body = model.body();
  TinyTransformer::DecodeState state = body.start_decode();
  std::vector<double> hidden;
  for (std::size_t i = 0; i < arg.ids.size(); ++i) hidden = body.decode_step(state, arg.ids[i], arg.types[i]);

  const nn::Matrix& w = model.lm_weight().value;
  const nn::Matrix& b = model.lm_bias().value;
  const std::size_t vocab = w.rows();
  std::mt19937_64 rng(sampling.seed);
  Generation out;
  std::vector<double> logits(vocab);
  const double blocked = -std::numeric_limits<double>::infinity();
  while (out.tokens.size() < sampling.max_tokens) {
    nn::Matrix row(1, vocab);
    kernels::matmul_nt({hidden, 1, hidden.size()}, w.view(), row.mut_view());
    for (std::size_t v = 0; v < vocab; ++v) logits[v] = row(0, v) + b(0, v);
    for (TokenId s = 0; s < Vocabulary::kFirstWord; ++s)
      if (s != Vocabulary::kEos) logits[static_cast<std::size_t>(s)] = blocked;
    if (out.tokens.size() < sampling.min_tokens) logits[Vocabulary::kEos] = blocked;
    const auto next = static_cast<TokenId>(sample_token(logits, sampling, rng));
    if (next == Vocabulary::kEos) break;
    out.tokens.push_back(next);
    if (out.tokens.size() < sampling.max_tokens)
      hidden = body.decode_step(state, next, static_cast<int>(TokenType::counter));
  }
  out.text = model.vocabulary().decode(out.tokens);
  return out;
}

json generation_record(std::string_view post_id, std::span<const std::size_t> attacked_indices,
                       std::string_view counter, std::uint64_t seed) {
  return {{"post_id", post_id},
          {"attacked_indices", std::vector<std::size_t>(attacked_indices.begin(), attacked_indices.end())},
          {"counter", counter},
          {"seed", seed}};
}

}  // namespace undermine
