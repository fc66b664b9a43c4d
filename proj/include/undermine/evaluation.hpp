#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "undermine/corpus.hpp"
#include "undermine/text.hpp"

namespace undermine {

/// Sentence BLEU over orders 1..n with uniform weights, clipped against the
/// per-n-gram maximum over references and a brevity penalty from the closest
/// reference length. No smoothing. Scaled to [0, 100].
double bleu_n(std::string_view candidate, std::span<const std::string> references, int n);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

/// Exact-match unigram alignment with the most matches and, among those, the
/// fewest chunks. Falls back to the best alignment found within a fixed
/// search budget on very repetitive inputs.
Alignment meteor_align(std::span<const std::string> candidate, std::span<const std::string> reference);

/// Exact-match METEOR, maximised over references.
double meteor(std::string_view candidate, std::span<const std::string> references, const MeteorParams& params = {});

/// Share of the premise's content tokens that also occur in the counter;
/// empty when the premise has no content token.
std::optional<double> weak_premise_coverage(std::string_view counter, std::string_view premise,
                                            const StopwordList& stopwords);

struct TTest {
  double t = 0.0;
  double p = 0.5;
  std::size_t df = 0;
};

/// Dependent-samples t statistic of a - b and its upper-tail p value.
/// Throws DataError for fewer than two pairs or zero-variance differences.
TTest paired_t_one_tailed(std::span<const double> a, std::span<const double> b);

// --- run evaluation -------------------------------------------------------------

enum class ReferenceMode { counter_sentences, full_comment };
std::string_view to_string(ReferenceMode mode);
ReferenceMode parse_reference_mode(std::string_view name);

struct GeneratedRecord {
  std::string post_id;
  std::vector<std::size_t> attacked_indices;
  std::string counter;
  std::uint64_t seed = 0;
};

std::vector<GeneratedRecord> read_generations(std::istream& in);
std::vector<GeneratedRecord> load_generations(const std::filesystem::path& path);

struct ExampleScores {
  std::string post_id;
  std::vector<std::size_t> attacked_indices;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double meteor = 0.0;
  std::optional<double> coverage;
};

struct MetricMeans {
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double meteor = 0.0;
  double coverage = 0.0;
  std::size_t examples = 0;
  std::size_t coverage_examples = 0;
};

struct Significance {
  std::string metric;
  std::string system_a;
  std::string system_b;
  std::optional<TTest> test;  ///< empty when the differences have zero variance
  std::string note;
};

inline constexpr std::size_t kCoverageBins = 10;

struct EvalReport {
  ReferenceMode mode = ReferenceMode::counter_sentences;
  std::vector<ExampleScores> per_example;  ///< sorted by post id
  MetricMeans aggregates;
  std::array<std::size_t, kCoverageBins> coverage_histogram{};
  std::vector<std::string> unresolved;
  std::size_t coverage_excluded = 0;
  std::vector<Significance> significance;

  nlohmann::json to_json() const;
  /// Inverse of to_json for the fields that survive serialisation.
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_text() const;
  std::string histogram_csv() const;
};

MetricMeans mean_metrics(std::span<const ExampleScores> examples);

/// Scores every record against the gold triples of its post. With
/// `parallel` the per-record work runs under OpenMP; results are identical.
EvalReport evaluate_run(std::span<const GeneratedRecord> generated, const Corpus& gold, ReferenceMode mode,
                        const StopwordList& stopwords, bool parallel = true);

/// Paired one-tailed tests (a better than b) for every metric over the
/// examples of both reports, which must cover the same (post, premises) keys.
std::vector<Significance> compare_reports(const EvalReport& a, const EvalReport& b, std::string_view name_a,
                                          std::string_view name_b);

}  // namespace undermine
