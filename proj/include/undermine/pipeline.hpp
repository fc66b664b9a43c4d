#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "undermine/corpus.hpp"
#include "undermine/generator.hpp"
#include "undermine/ranker.hpp"
#include "undermine/text.hpp"

namespace undermine {

/// Lowercased alphabetic tokens minus stopwords, as a set.
std::set<std::string> content_tokens(std::string_view text, const StopwordList& stopwords);

/// Size of the content-token intersection.
std::size_t overlap_count(std::string_view counter, std::string_view premise, const StopwordList& stopwords);

class PremiseRanker {
 public:
  virtual ~PremiseRanker() = default;
  virtual PremiseScores rank(const ArgumentPost& post) const = 0;
};

class CounterGenerator {
 public:
  virtual ~CounterGenerator() = default;
  /// Must be safe to call concurrently.
  virtual std::string generate(const ArgumentPost& post, std::size_t attacked_index, std::uint64_t seed) const = 0;
};

class ScorerRanker final : public PremiseRanker {
 public:
  explicit ScorerRanker(const PremiseScorer& scorer) : scorer_(scorer) {}
  PremiseScores rank(const ArgumentPost& post) const override { return scorer_.rank(post); }

 private:
  const PremiseScorer& scorer_;
};

class ModelCounterGenerator final : public CounterGenerator {
 public:
  ModelCounterGenerator(const GeneratorModel& model, SamplingConfig sampling)
      : model_(model), sampling_(sampling) {}
  std::string generate(const ArgumentPost& post, std::size_t attacked_index, std::uint64_t seed) const override;

 private:
  const GeneratorModel& model_;
  SamplingConfig sampling_;
};

struct PipelineConfig {
  std::size_t top_k = 1;  ///< how many of the highest-ranked premises to attack
  std::uint64_t seed = 1;
  StopwordList stopwords = default_stopwords();
};

struct Candidate {
  std::size_t attacked_index = 0;
  std::string counter;
  std::size_t overlap = 0;
};

struct CounterResult {
  std::string post_id;
  std::vector<Candidate> candidates;  ///< in premise-rank order
  std::size_t selected = 0;
  PremiseScores premise_ranking;

  const Candidate& chosen() const { return candidates.at(selected); }
  nlohmann::json to_json() const;
};

/// Per-candidate sampling seed.
std::uint64_t candidate_seed(std::uint64_t base_seed, std::size_t attacked_index);

/// Index of the largest overlap; ties go to the earliest (best-ranked) entry.
std::size_t select_candidate(std::span<const Candidate> candidates);

/// Ranks the premises, generates one counter for each of the top-k, and keeps
/// the counter with the most content-token overlap with its premise. A
/// candidate whose generation throws is dropped; if all fail, ModelError.
CounterResult undermine(const ArgumentPost& post, const PremiseRanker& ranker, const CounterGenerator& generator,
                        const PipelineConfig& config);

}  // namespace undermine
