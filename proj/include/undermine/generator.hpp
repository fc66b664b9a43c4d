#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
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

enum class TokenType : int { arg = 0, weak = 1, counter = 2 };
inline constexpr std::size_t kTokenTypeCount = 3;

/// `without_weak_token` marks attacked premises through token types only,
/// `with_weak_token` also wraps each attacked premise in [weak] tokens, and
/// `counter_baseline` carries no weak-premise information at all.
enum class GeneratorVariant { without_weak_token, with_weak_token, counter_baseline };
std::string_view to_string(GeneratorVariant variant);
GeneratorVariant parse_generator_variant(std::string_view name);

/// `[bos] argument [counter] counter [eos]` with one type per position.
struct TrainingSequence {
  std::vector<TokenId> token_ids;
  std::vector<int> token_types;
  /// Next-token target per position (-1 at the last). Only positions from
  /// `counter_start` onwards contribute to the language-model loss.
  std::vector<int> lm_targets;
  std::size_t counter_start = 0;  ///< index of the [counter] marker
  int cls_label = 1;              ///< 1 genuine counter, 0 distractor
  GeneratorVariant variant = GeneratorVariant::without_weak_token;
  std::string counter_text;

  std::size_t size() const noexcept { return token_ids.size(); }
};

struct EncodedArgument {
  std::vector<TokenId> ids;
  std::vector<int> types;
};

/// `[bos]` followed by claim then premise tokens, typed per `variant`.
EncodedArgument encode_argument(std::string_view claim, std::span<const std::string> premises,
                                std::span<const std::size_t> attacked_indices, GeneratorVariant variant,
                                const Vocabulary& vocab);

/// Throws ModelError if the argument alone does not fit `context`; an
/// overlong counter loses its tail but keeps the closing [eos].
TrainingSequence build_sequence(const CounterTriple& triple, std::string_view counter_text, int cls_label,
                                GeneratorVariant variant, const Vocabulary& vocab, std::size_t context);

TrainingSequence counter_baseline_sequence(const CounterTriple& triple, std::string_view counter_text,
                                           const Vocabulary& vocab, std::size_t context);

/// Same argument, counter replaced by one uniformly drawn premise of `post`.
TrainingSequence make_distractor(const CounterTriple& triple, const ArgumentPost& post, std::mt19937_64& rng,
                                 GeneratorVariant variant, const Vocabulary& vocab, std::size_t context);

/// Each genuine sequence followed by its distractor.
std::vector<TrainingSequence> augment_with_distractors(std::span<const CounterTriple* const> triples,
                                                       const Corpus& corpus, GeneratorVariant variant,
                                                       const Vocabulary& vocab, std::size_t context,
                                                       std::uint64_t seed);

struct GeneratorModelConfig {
  std::size_t max_len = 192;
  std::size_t hidden = 48;
  std::size_t layers = 2;
  std::size_t heads = 2;
  GeneratorVariant variant = GeneratorVariant::without_weak_token;

  nlohmann::json to_json() const;
  static GeneratorModelConfig from_json(const nlohmann::json& j);
};

/// Causal tiny transformer with a token-type table, a language-model head
/// and a two-way counter classification head read at the last position.
class GeneratorModel {
 public:
  GeneratorModel(Vocabulary vocab, const GeneratorModelConfig& config, std::uint64_t init_seed);

  struct Outputs {
    nn::Var hidden;      // (n, hidden)
    nn::Var lm_logits;   // (n - lm_from, vocab); unset when lm_from >= n
    nn::Var cls_logits;  // (1, 2)
  };
  /// Language-model logits are produced for positions lm_from..n-1 only.
  Outputs forward(nn::Graph& g, std::span<const TokenId> ids, std::span<const int> types,
                  std::size_t lm_from = 0) const;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const GeneratorModelConfig& config() const noexcept { return config_; }
  const TinyTransformer& body() const noexcept { return *body_; }
  nn::ParameterSet& parameters() noexcept { return *params_; }
  const nn::ParameterSet& parameters() const noexcept { return *params_; }
  nn::Parameter& token_type_table() const { return body_->token_type_table(); }
  /// Output projection (vocab x hidden), tied to the word embeddings.
  nn::Parameter& lm_weight() const { return *lm_w_; }
  nn::Parameter& lm_bias() const { return *lm_b_; }
  std::uint64_t init_seed() const noexcept { return init_seed_; }

  TrainingSequence sequence_for(const CounterTriple& triple, std::string_view counter_text, int cls_label) const;

  void save(const std::filesystem::path& dir, const nlohmann::json& extra = {}) const;
  static GeneratorModel load(const std::filesystem::path& dir);

 private:
  Vocabulary vocab_;
  GeneratorModelConfig config_;
  std::uint64_t init_seed_;
  std::unique_ptr<nn::ParameterSet> params_;
  std::unique_ptr<TinyTransformer> body_;
  nn::Parameter* lm_w_;
  nn::Parameter* lm_b_;
  nn::Parameter* cls_w_;
  nn::Parameter* cls_b_;
};

/// Vocabulary over training-split claims, premises and counters.
Vocabulary build_generator_vocabulary(const Corpus& corpus);

struct JointLoss {
  double lm = 0.0;   ///< L1: mean NLL over genuine counter-segment tokens
  double cls = 0.0;  ///< L2: mean cross-entropy of the counter classifier
  double total = 0.0;
  std::size_t lm_tokens = 0;
  std::size_t genuine = 0;
};

struct JointLossVars {
  nn::Var lm, cls, total;
  std::size_t lm_tokens = 0;
  std::size_t genuine = 0;
};
JointLossVars joint_loss(nn::Graph& g, const GeneratorModel& model, std::span<const TrainingSequence> batch);
JointLoss joint_loss(const GeneratorModel& model, std::span<const TrainingSequence> batch);

/// Predicted class per sequence (argmax of the classification head).
std::vector<int> classify(const GeneratorModel& model, std::span<const TrainingSequence> sequences);

struct GeneratorTrainConfig {
  std::size_t epochs = 6;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  /// Called after every epoch with its index and running losses (checkpointing hook).
  std::function<void(std::size_t epoch, const JointLoss&, const GeneratorModel&)> on_epoch;
};

struct GeneratorTrainReport {
  std::vector<JointLoss> epochs;  ///< running means over each epoch
  std::size_t sequences = 0;
};

GeneratorTrainReport train_generator(std::span<const CounterTriple* const> triples, const Corpus& corpus,
                                     GeneratorModel& model, const GeneratorTrainConfig& config);

// --- decoding -----------------------------------------------------------------

struct SamplingConfig {
  std::size_t top_k = 50;  ///< 0 disables
  double top_p = 0.95;
  double temperature = 1.0;
  std::size_t min_tokens = 100;
  std::size_t max_tokens = 150;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Probabilities after temperature, top-k and nucleus truncation,
/// renormalised. Ties at the top-k boundary keep the lower token id.
std::vector<double> truncated_distribution(std::span<const double> logits, const SamplingConfig& config);
std::size_t sample_token(std::span<const double> logits, const SamplingConfig& config, std::mt19937_64& rng);

struct Generation {
  std::string text;
  std::vector<TokenId> tokens;  ///< without the closing [eos]
};

/// Samples a counter after the [counter] marker. [eos] is suppressed until
/// `min_tokens` have been produced; other special tokens are never emitted.
Generation generate_counter(const GeneratorModel& model, std::string_view claim,
                            std::span<const std::string> premises, std::span<const std::size_t> attacked_indices,
                            const SamplingConfig& sampling);

nlohmann::json generation_record(std::string_view post_id, std::span<const std::size_t> attacked_indices,
                                 std::string_view counter, std::uint64_t seed);

}  // namespace undermine
