#include "undermine/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <optional>

#include "undermine/errors.hpp"

namespace undermine {

std::set<std::string> content_tokens(std::string_view text, const StopwordList& stopwords) {
  std::set<std::string> out;
  for (auto& tok : alpha_tokens(text))
    if (!stopwords.contains(tok)) out.insert(std::move(tok));
  return out;
}

std::size_t overlap_count(std::string_view counter, std::string_view premise, const StopwordList& stopwords) {
  const auto a = content_tokens(counter, stopwords);
  const auto b = content_tokens(premise, stopwords);
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

std::string ModelCounterGenerator::generate(const ArgumentPost& post, std::size_t attacked_index,
                                            std::uint64_t seed) const {
  SamplingConfig s = sampling_;
  s.seed = seed;
  const std::size_t attacked[] = {attacked_index};
  return generate_counter(model_, post.claim, post.premises, attacked, s).text;
}

nlohmann::json CounterResult::to_json() const {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : candidates)
    cands.push_back({{"attacked_index", c.attacked_index}, {"counter", c.counter}, {"overlap", c.overlap}});
  return {{"post_id", post_id},
          {"candidates", std::move(cands)},
          {"selected", selected},
          {"ranking", premise_ranking.ranking},
          {"scores", premise_ranking.scores}};
}

std::uint64_t candidate_seed(std::uint64_t base_seed, std::size_t attacked_index) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(attacked_index));
}

std::size_t select_candidate(std::span<const Candidate> candidates) {
  if (candidates.empty()) throw ModelError("no candidate counter to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].overlap > candidates[best].overlap) best = i;
  return best;
}

CounterResult undermine(const ArgumentPost& post, const PremiseRanker& ranker, const CounterGenerator& generator,
                        const PipelineConfig& config) {
  CounterResult result;
  result.post_id = post.id;
  result.premise_ranking = ranker.rank(post);
  if (result.premise_ranking.ranking.size() != post.premises.size())
    throw ModelError("ranker returned " + std::to_string(result.premise_ranking.ranking.size()) +
                     " scores for a post with " + std::to_string(post.premises.size()) + " premises");

  const std::size_t k = std::min(std::max<std::size_t>(config.top_k, 1), post.premises.size());
  std::vector<std::optional<std::string>> texts(k);
  std::vector<std::string> failures(k);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(k); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::size_t premise = result.premise_ranking.ranking[i];
    try {
      texts[i] = generator.generate(post, premise, candidate_seed(config.seed, premise));
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t premise = result.premise_ranking.ranking[i];
    if (!texts[i]) {
      std::cerr << "warning: post " << post.id << ": dropping candidate for premise " << premise << ": "
                << failures[i] << '\n';
      continue;
    }
    Candidate c;
    c.attacked_index = premise;
    c.counter = std::move(*texts[i]);
    c.overlap = overlap_count(c.counter, post.premises[premise], config.stopwords);
    result.candidates.push_back(std::move(c));
  }
  if (result.candidates.empty()) throw ModelError("every candidate generation failed for post " + post.id);
  result.selected = select_candidate(result.candidates);
  return result;
}

}  // namespace undermine
