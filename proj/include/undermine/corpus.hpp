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

namespace undermine {

enum class Split { train, valid, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// A claim (post title) with its ordered premise sentences. `weak_indices`
/// is sorted and unique: the union of all quoted sentence indices.
struct ArgumentPost {
  std::string id;
  std::string claim;
  std::vector<std::string> premises;
  std::vector<std::size_t> weak_indices;
  Split split = Split::train;

  bool is_weak(std::size_t premise) const;
  /// One label per premise, 1 for weak.
  std::vector<int> labels() const;
  bool operator==(const ArgumentPost&) const = default;
};

/// One comment's attack: the quoted premises and the quoting text.
struct CounterTriple {
  std::string post_id;
  std::string claim;
  std::vector<std::string> premises;
  std::vector<std::size_t> attacked_indices;
  std::string counter;
  /// The complete comment, when the corpus carries it.
  std::optional<std::string> full_comment;

  bool operator==(const CounterTriple&) const = default;
};

struct SplitCounts {
  std::size_t posts = 0;
  std::size_t triples = 0;
  std::size_t premises = 0;
  std::size_t weak_premises = 0;
};

struct CorpusManifest {
  std::array<SplitCounts, 3> splits{};
  std::size_t skipped_comments = 0;

  const SplitCounts& operator[](Split s) const { return splits[static_cast<std::size_t>(s)]; }
  nlohmann::json to_json() const;
};

class Corpus {
 public:
  Corpus() = default;
  /// Validates every invariant; throws DataError on violation.
  Corpus(std::vector<ArgumentPost> posts, std::vector<CounterTriple> triples, std::size_t skipped_comments = 0);

  const std::vector<ArgumentPost>& posts() const noexcept { return posts_; }
  const std::vector<CounterTriple>& triples() const noexcept { return triples_; }
  const CorpusManifest& manifest() const noexcept { return manifest_; }

  const ArgumentPost* find_post(std::string_view id) const;
  std::vector<const ArgumentPost*> posts_in(Split split) const;
  std::vector<const CounterTriple*> triples_in(Split split) const;
  std::vector<const CounterTriple*> triples_of(std::string_view post_id) const;

  bool operator==(const Corpus& other) const {
    return posts_ == other.posts_ && triples_ == other.triples_;
  }

 private:
  std::vector<ArgumentPost> posts_;
  std::vector<CounterTriple> triples_;
  CorpusManifest manifest_;
};

// --- raw records ------------------------------------------------------------

struct CommentRecord {
  std::vector<long long> quoted;
  std::string text;
  std::optional<std::string> full_text;
};

struct PostRecord {
  std::string id;
  std::string title;
  std::vector<std::string> sentences;
  std::vector<CommentRecord> comments;
  Split split = Split::train;
};

struct BuiltPost {
  ArgumentPost post;
  std::vector<CounterTriple> triples;
  std::size_t skipped_comments = 0;
};

/// One triple per usable comment; the post's weak set is the union of quoted
/// indices. Comments with no quoted index or empty text are skipped and
/// counted. Out-of-range indices are a DataError naming the post.
BuiltPost build_triples(const PostRecord& record);

PostRecord parse_post_record(const nlohmann::json& j);
nlohmann::json post_record_json(const ArgumentPost& post, std::span<const CounterTriple* const> triples);

Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// --- synthetic data ---------------------------------------------------------

struct SynthOptions {
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::string marker = "supposedly";
  double weak_probability = 0.3;
};

/// A deterministic list of pronounceable non-stopword filler words.
std::vector<std::string> default_synth_vocabulary(std::size_t count = 400);

/// Posts of 3-8 premises of 5-8 words. Exactly the premises containing
/// `options.marker` are weak (at least one per post). Each weak premise gets
/// one counter, "no , <marker>" followed by the first four words of the
/// premise, so it shares at least 5 of at most 8 content tokens.
Corpus synth_corpus(std::uint64_t seed, std::size_t n_posts, std::span<const std::string> vocab,
                    const SynthOptions& options = {});

}  // namespace undermine
