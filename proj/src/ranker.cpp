#include "undermine/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "undermine/checkpoint.hpp"
#include "undermine/errors.hpp"

namespace undermine {

using nlohmann::json;

PremiseScores PremiseScores::from_scores(std::vector<double> scores) {
  PremiseScores out;
  out.ranking.resize(scores.size());
  std::iota(out.ranking.begin(), out.ranking.end(), std::size_t{0});
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  out.scores = std::move(scores);
  return out;
}

std::vector<TokenId> encode_pair(std::span<const TokenId> claim, std::span<const TokenId> premise,
                                 std::size_t max_len) {
  if (max_len < 3) throw ConfigError("encode_pair: max_len must be at least 3");
  std::size_t keep_claim = claim.size();
  std::size_t keep_premise = premise.size();
  std::size_t total = 3 + keep_claim + keep_premise;
  if (total > max_len) {
    const std::size_t drop = std::min(keep_premise, total - max_len);
    keep_premise -= drop;
    total -= drop;
  }
  if (total > max_len) keep_claim -= total - max_len;

  std::vector<TokenId> seq;
  seq.reserve(3 + keep_claim + keep_premise);
  seq.push_back(Vocabulary::kCls);
  seq.insert(seq.end(), claim.begin(), claim.begin() + static_cast<std::ptrdiff_t>(keep_claim));
  seq.push_back(Vocabulary::kSep);
  seq.insert(seq.end(), premise.begin(), premise.begin() + static_cast<std::ptrdiff_t>(keep_premise));
  seq.push_back(Vocabulary::kSep);
  return seq;
}

namespace {

double log_sum_exp(std::span<const double> x) {
  const double peak = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) total += std::exp(v - peak);
  return peak + std::log(total);
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw DataError("score and label vectors differ in length");
}

}  // namespace

double listwise_softmax_loss(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  if (scores.empty()) return 0.0;
  const double lse = log_sum_exp(scores);
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (labels[i] != 0) loss += lse - scores[i];
  return loss;
}

std::vector<double> listwise_softmax_gradient(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  std::vector<double> grad(scores.size(), 0.0);
  if (scores.empty()) return grad;
  const double positives = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
  const double lse = log_sum_exp(scores);
  for (std::size_t i = 0; i < scores.size(); ++i)
    grad[i] = std::exp(scores[i] - lse) * positives - (labels[i] != 0 ? 1.0 : 0.0);
  return grad;
}

double pointwise_logistic_loss(std::span<const double> logits, std::span<const int> labels) {
  check_lengths(logits.size(), labels.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double s = logits[i];
    const double softplus = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    loss += softplus - (labels[i] != 0 ? s : 0.0);
  }
  return loss;
}

// ---------------------------------------------------------------------------

TinyEncoder::TinyEncoder(const TransformerConfig& config, nn::ParameterSet& params, const std::string& prefix)
    : body_(config, params, prefix) {}

nn::Var TinyEncoder::encode(nn::Graph& g, std::span<const TokenId> ids) const {
  return g.row(body_.forward(g, ids, {}), 0);
}

DenseHead DenseHead::create(nn::ParameterSet& params, const std::string& prefix, std::size_t width) {
  DenseHead h;
  h.weight = &params.add(prefix + "w", width, 1);
  h.bias = &params.add(prefix + "b", 1, 1);
  return h;
}

nn::Var DenseHead::apply(nn::Graph& g, nn::Var x) const {
  return g.add_row(g.matmul(x, g.param(*weight)), g.param(*bias));
}

nn::Var score_premises(nn::Graph& g, const EncoderAdapter& encoder, const DenseHead& head,
                       const RankingExample& example) {
  std::vector<nn::Var> rows;
  rows.reserve(example.size());
  for (const auto& premise : example.premise_token_lists) {
    const auto ids = encode_pair(example.claim_tokens, premise, encoder.max_len());
    rows.push_back(head.apply(g, encoder.encode(g, ids)));
  }
  return g.concat_rows(rows);
}

PremiseScores score_premises(const EncoderAdapter& encoder, const DenseHead& head, const RankingExample& example) {
  nn::Graph g(false);
  const nn::Var s = score_premises(g, encoder, head, example);
  const auto v = g.value(s).values();
  return PremiseScores::from_scores(std::vector<double>(v.begin(), v.end()));
}

std::string_view to_string(RankObjective objective) {
  return objective == RankObjective::listwise ? "listwise" : "pointwise";
}

RankObjective parse_rank_objective(std::string_view name) {
  if (name == "listwise") return RankObjective::listwise;
  if (name == "pointwise") return RankObjective::pointwise;
  throw ConfigError("unknown ranking objective '" + std::string(name) + "'");
}

json RankerModelConfig::to_json() const {
  return {{"max_len", max_len},
          {"hidden", hidden},
          {"layers", layers},
          {"heads", heads},
          {"objective", std::string(to_string(objective))}};
}

RankerModelConfig RankerModelConfig::from_json(const json& j) {
  RankerModelConfig c;
  c.max_len = j.at("max_len").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.objective = parse_rank_objective(j.at("objective").get<std::string>());
  return c;
}

PremiseScorer::PremiseScorer(Vocabulary vocab, const RankerModelConfig& config, std::uint64_t init_seed)
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
  tc.causal = false;
  encoder_ = std::make_unique<TinyEncoder>(tc, *params_, "enc.");
  head_ = DenseHead::create(*params_, "score.", config_.hidden);
  init_transformer_params(*params_, init_seed_);
}

RankingExample PremiseScorer::make_example(const ArgumentPost& post) const {
  RankingExample ex;
  ex.claim_tokens = vocab_.encode(post.claim);
  for (const auto& p : post.premises) ex.premise_token_lists.push_back(vocab_.encode(p));
  ex.labels = post.labels();
  return ex;
}

PremiseScores PremiseScorer::score(const RankingExample& example) const {
  PremiseScores out = score_premises(*encoder_, head_, example);
  if (config_.objective == RankObjective::pointwise) {
    for (double& s : out.scores) s = 1.0 / (1.0 + std::exp(-s));
  }
  return out;
}

PremiseScores PremiseScorer::rank(const ArgumentPost& post) const { return score(make_example(post)); }

namespace {

nn::Var objective_node(nn::Graph& g, nn::Var scores, const std::vector<int>& labels, RankObjective objective) {
  const auto s = g.value(scores).values();
  const std::vector<double> sv(s.begin(), s.end());
  if (objective == RankObjective::listwise) {
    return g.custom(scores, nn::Matrix(1, 1, listwise_softmax_loss(sv, labels)),
                    [sv, labels](const nn::Matrix& up, nn::Matrix& in) {
                      const auto grad = listwise_softmax_gradient(sv, labels);
                      for (std::size_t i = 0; i < grad.size(); ++i) in(i, 0) += up(0, 0) * grad[i];
                    });
  }
  return g.custom(scores, nn::Matrix(1, 1, pointwise_logistic_loss(sv, labels)),
                  [sv, labels](const nn::Matrix& up, nn::Matrix& in) {
                    for (std::size_t i = 0; i < sv.size(); ++i) {
                      const double p = 1.0 / (1.0 + std::exp(-sv[i]));
                      in(i, 0) += up(0, 0) * (p - (labels[i] != 0 ? 1.0 : 0.0));
                    }
                  });
}

}  // namespace

double PremiseScorer::loss(const RankingExample& example) const {
  nn::Graph g(false);
  const nn::Var s = score_premises(g, *encoder_, head_, example);
  return g.scalar(objective_node(g, s, example.labels, config_.objective));
}

void PremiseScorer::save(const std::filesystem::path& dir, const json& extra) const {
  save_checkpoint(dir, "ranker", config_.to_json(), vocab_, *params_, init_seed_, extra);
}

PremiseScorer PremiseScorer::load(const std::filesystem::path& dir) {
  LoadedCheckpoint ck = open_checkpoint(dir, "ranker");
  RankerModelConfig config;
  try {
    config = RankerModelConfig::from_json(ck.manifest.at("config"));
  } catch (const json::exception& e) {
    throw ModelError("bad ranker config in " + dir.string() + ": " + e.what());
  }
  PremiseScorer scorer(std::move(ck.vocab), config, ck.manifest.value("seed", std::uint64_t{0}));
  read_weights(dir / "weights.bin", scorer.parameters());
  return scorer;
}

Vocabulary build_ranker_vocabulary(const Corpus& corpus) {
  std::vector<std::string> texts;
  for (const ArgumentPost* p : corpus.posts_in(Split::train)) {
    texts.push_back(p->claim);
    texts.insert(texts.end(), p->premises.begin(), p->premises.end());
  }
  return Vocabulary::build(texts);
}

RankerTrainReport train_ranker(const Corpus& corpus, PremiseScorer& scorer, const RankerTrainConfig& config) {
  RankerTrainReport report;
  std::vector<RankingExample> examples;
  for (const ArgumentPost* p : corpus.posts_in(Split::train)) {
    if (scorer.config().objective == RankObjective::listwise && p->weak_indices.empty()) {
      ++report.skipped_posts;
      continue;
    }
    examples.push_back(scorer.make_example(*p));
  }
  const bool any_positive = std::any_of(examples.begin(), examples.end(), [](const RankingExample& e) {
    return std::find(e.labels.begin(), e.labels.end(), 1) != e.labels.end();
  });
  if (examples.empty() || !any_positive) throw DataError("no training post has a weak premise");
  report.used_posts = examples.size();

  nn::Adam adam({.lr = config.lr});
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::max<std::size_t>(1, config.batch_posts);
  scorer.parameters().zero_grad();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const RankingExample& ex = examples[order[i]];
        nn::Graph g;
        const nn::Var s = score_premises(g, scorer.encoder(), scorer.head(), ex);
        const nn::Var l = objective_node(g, s, ex.labels, scorer.config().objective);
        total += g.scalar(l);
        g.backward(g.scale(l, inv));
      }
      adam.step(scorer.parameters());
    }
    report.epoch_loss.push_back(total);
  }
  return report;
}

double mean_ranking_loss(const Corpus& corpus, Split split, const PremiseScorer& scorer) {
  double total = 0.0;
  std::size_t n = 0;
  for (const ArgumentPost* p : corpus.posts_in(split)) {
    if (p->weak_indices.empty()) continue;
    total += scorer.loss(scorer.make_example(*p));
    ++n;
  }
  if (n == 0) throw DataError("no post with a weak premise in split " + std::string(to_string(split)));
  return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

namespace {

void check_metric_input(std::span<const PremiseScores> rankings, std::span<const std::vector<int>> labels) {
  if (rankings.empty()) throw DataError("ranking metric over an empty post set");
  if (rankings.size() != labels.size()) throw DataError("ranking and label counts differ");
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (rankings[i].ranking.empty()) throw DataError("post without premises in ranking metric");
    if (rankings[i].ranking.size() != labels[i].size()) throw DataError("ranking and label lengths differ");
  }
}

}  // namespace

double precision_at_1(std::span<const PremiseScores> rankings, std::span<const std::vector<int>> labels) {
  check_metric_input(rankings, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i)
    if (labels[i][rankings[i].ranking.front()] != 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double accuracy_at_k(std::span<const PremiseScores> rankings, std::span<const std::vector<int>> labels,
                     std::size_t k) {
  check_metric_input(rankings, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& r = rankings[i].ranking;
    const std::size_t depth = std::min(k, r.size());
    if (std::any_of(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(depth),
                    [&](std::size_t idx) { return labels[i][idx] != 0; }))
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

BaselineMethod parse_baseline(std::string_view name) {
  if (name == "random") return BaselineMethod::random;
  if (name == "sentence_length" || name == "sentence-length") return BaselineMethod::sentence_length;
  if (name == "pointwise") return BaselineMethod::pointwise;
  throw ConfigError("unknown baseline method '" + std::string(name) + "'");
}

PremiseScores random_rank(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> scores(n);
  for (std::size_t r = 0; r < n; ++r) scores[perm[r]] = static_cast<double>(n - r);
  return PremiseScores::from_scores(std::move(scores));
}

PremiseScores sentence_length_rank(const ArgumentPost& post) {
  std::vector<double> scores;
  for (const auto& p : post.premises) scores.push_back(static_cast<double>(word_tokens(p).size()));
  return PremiseScores::from_scores(std::move(scores));
}

PremiseScores baseline_rank(const ArgumentPost& post, BaselineMethod method, std::uint64_t seed,
                            const PremiseScorer* pointwise) {
  switch (method) {
    case BaselineMethod::random: return random_rank(post.premises.size(), derive_seed(seed, post.id));
    case BaselineMethod::sentence_length: return sentence_length_rank(post);
    case BaselineMethod::pointwise:
      if (pointwise == nullptr || pointwise->config().objective != RankObjective::pointwise)
        throw ConfigError("pointwise baseline needs a scorer trained with the pointwise objective");
      return pointwise->rank(post);
  }
  throw ConfigError("unknown baseline method");
}

json ranking_record(std::string_view post_id, const PremiseScores& scores) {
  return {{"id", post_id}, {"ranking", scores.ranking}, {"scores", scores.scores}};
}

}  // namespace undermine
