#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "undermine/corpus.hpp"
#include "undermine/nn.hpp"
#include "undermine/text.hpp"
#include "undermine/transformer.hpp"

namespace undermine {

struct RankingExample {
  std::vector<TokenId> claim_tokens;
  std::vector<std::vector<TokenId>> premise_token_lists;
  std::vector<int> labels;

  std::size_t size() const noexcept { return premise_token_lists.size(); }
};

/// Scores plus the induced order: descending score, ties by ascending index.
struct PremiseScores {
  std::vector<double> scores;
  std::vector<std::size_t> ranking;

  static PremiseScores from_scores(std::vector<double> scores);
};

/// `[cls] claim [sep] premise [sep]`, trimmed to `max_len` by dropping
/// premise tokens first and then claim tokens.
std::vector<TokenId> encode_pair(std::span<const TokenId> claim, std::span<const TokenId> premise,
                                 std::size_t max_len);

/// -sum_i y_i log softmax(s)_i via log-sum-exp. Zero when no label is set.
double listwise_softmax_loss(std::span<const double> scores, std::span<const int> labels);
/// d loss / d scores = softmax(s) * sum(y) - y.
std::vector<double> listwise_softmax_gradient(std::span<const double> scores, std::span<const int> labels);

/// Sum over premises of the logistic loss; used by the pointwise baseline.
double pointwise_logistic_loss(std::span<const double> logits, std::span<const int> labels);

// --- model --------------------------------------------------------------------

/// A sequence encoder that yields one fixed-width vector per sequence.
class EncoderAdapter {
 public:
  virtual ~EncoderAdapter() = default;
  virtual nn::Var encode(nn::Graph& g, std::span<const TokenId> ids) const = 0;
  virtual std::size_t width() const = 0;
  virtual std::size_t max_len() const = 0;
};

/// Bidirectional tiny transformer read at the first ([cls]) position.
class TinyEncoder final : public EncoderAdapter {
 public:
  TinyEncoder(const TransformerConfig& config, nn::ParameterSet& params, const std::string& prefix);
  nn::Var encode(nn::Graph& g, std::span<const TokenId> ids) const override;
  std::size_t width() const override { return body_.config().hidden; }
  std::size_t max_len() const override { return body_.config().max_len; }

 private:
  TinyTransformer body_;
};

/// width -> 1 dense projection.
struct DenseHead {
  nn::Parameter* weight = nullptr;  // width x 1
  nn::Parameter* bias = nullptr;    // 1 x 1

  static DenseHead create(nn::ParameterSet& params, const std::string& prefix, std::size_t width);
  nn::Var apply(nn::Graph& g, nn::Var x) const;
};

/// Column of n scores (n x 1) inside `g`, one encoder pass per premise.
nn::Var score_premises(nn::Graph& g, const EncoderAdapter& encoder, const DenseHead& head,
                       const RankingExample& example);
/// Evaluation-mode scores and ranking.
PremiseScores score_premises(const EncoderAdapter& encoder, const DenseHead& head, const RankingExample& example);

enum class RankObjective { listwise, pointwise };
std::string_view to_string(RankObjective objective);
RankObjective parse_rank_objective(std::string_view name);

struct RankerModelConfig {
  std::size_t max_len = 48;
  std::size_t hidden = 32;
  std::size_t layers = 2;
  std::size_t heads = 2;
  RankObjective objective = RankObjective::listwise;

  nlohmann::json to_json() const;
  static RankerModelConfig from_json(const nlohmann::json& j);
};

/// A vocabulary, an encoder and a scoring head: everything needed to rank
/// the premises of a post.
class PremiseScorer {
 public:
  PremiseScorer(Vocabulary vocab, const RankerModelConfig& config, std::uint64_t init_seed);

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const RankerModelConfig& config() const noexcept { return config_; }
  nn::ParameterSet& parameters() noexcept { return *params_; }
  const nn::ParameterSet& parameters() const noexcept { return *params_; }
  const EncoderAdapter& encoder() const noexcept { return *encoder_; }
  const DenseHead& head() const noexcept { return head_; }
  std::uint64_t init_seed() const noexcept { return init_seed_; }

  RankingExample make_example(const ArgumentPost& post) const;
  PremiseScores rank(const ArgumentPost& post) const;
  PremiseScores score(const RankingExample& example) const;

  /// Objective value for one example (listwise or pointwise, per config).
  double loss(const RankingExample& example) const;

  void save(const std::filesystem::path& dir, const nlohmann::json& extra = {}) const;
  static PremiseScorer load(const std::filesystem::path& dir);

 private:
  Vocabulary vocab_;
  RankerModelConfig config_;
  std::uint64_t init_seed_;
  std::unique_ptr<nn::ParameterSet> params_;
  std::unique_ptr<TinyEncoder> encoder_;
  DenseHead head_;
};

/// Vocabulary over the claims and premises of the training split.
Vocabulary build_ranker_vocabulary(const Corpus& corpus);

struct RankerTrainConfig {
  std::size_t epochs = 6;
  double lr = 2e-3;
  std::size_t batch_posts = 8;
  std::uint64_t seed = 1;
};

struct RankerTrainReport {
  std::vector<double> epoch_loss;  ///< summed over posts
  std::size_t skipped_posts = 0;   ///< posts without any weak premise
  std::size_t used_posts = 0;
};

/// Adam on the mean per-post objective of each batch of training posts.
RankerTrainReport train_ranker(const Corpus& corpus, PremiseScorer& scorer, const RankerTrainConfig& config);

/// Mean objective over posts of `split` that carry at least one weak premise.
double mean_ranking_loss(const Corpus& corpus, Split split, const PremiseScorer& scorer);

// --- metrics and baselines ---------------------------------------------------

double precision_at_1(std::span<const PremiseScores> rankings, std::span<const std::vector<int>> labels);
double accuracy_at_k(std::span<const PremiseScores> rankings, std::span<const std::vector<int>> labels,
                     std::size_t k);
inline double accuracy_at_3(std::span<const PremiseScores> rankings, std::span<const std::vector<int>> labels) {
  return accuracy_at_k(rankings, labels, 3);
}

enum class BaselineMethod { random, sentence_length, pointwise };
BaselineMethod parse_baseline(std::string_view name);

/// Seeded uniform permutation; score of rank r is n - r.
PremiseScores random_rank(std::size_t n, std::uint64_t seed);
/// Longest premise first, by word-token count.
PremiseScores sentence_length_rank(const ArgumentPost& post);
/// Dispatches to one of the baselines; `pointwise` needs a scorer trained
/// with the pointwise objective.
PremiseScores baseline_rank(const ArgumentPost& post, BaselineMethod method, std::uint64_t seed,
                            const PremiseScorer* pointwise = nullptr);

nlohmann::json ranking_record(std::string_view post_id, const PremiseScores& scores);

}  // namespace undermine
