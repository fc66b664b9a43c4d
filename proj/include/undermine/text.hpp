#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace undermine {

using TokenId = int;

/// Lowercased tokens split on whitespace, with each punctuation character
/// emitted as its own token. Shared by the model vocabulary and BLEU/METEOR.
std::vector<std::string> word_tokens(std::string_view text);

/// Lowercased maximal runs of ASCII letters.
std::vector<std::string> alpha_tokens(std::string_view text);

using StopwordList = std::unordered_set<std::string>;

/// The bundled list (data/stopwords_v1.txt).
const StopwordList& default_stopwords();
StopwordList parse_stopwords(std::string_view contents);
StopwordList load_stopwords(const std::filesystem::path& path);
inline constexpr std::string_view kStopwordsVersion = "v1";

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Mixes a base seed with a salt (splitmix64 finaliser); used wherever an
/// independent, reproducible sub-stream is needed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);
std::uint64_t derive_seed(std::uint64_t base, std::string_view salt);

/// Word-level vocabulary with reserved special tokens at fixed ids.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kBos = 4;
  static constexpr TokenId kEos = 5;
  static constexpr TokenId kCounter = 6;
  static constexpr TokenId kWeak = 7;
  static constexpr TokenId kFirstWord = 8;

  Vocabulary();

  /// Adds every token of `texts` seen at least `min_count` times, in order of
  /// first appearance.
  static Vocabulary build(std::span<const std::string> texts, std::size_t min_count = 1);

  TokenId add(const std::string& token);
  TokenId id(const std::string& token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }

  std::vector<TokenId> encode(std::string_view text) const;
  /// Space-joined words; special tokens are dropped.
  std::string decode(std::span<const TokenId> ids) const;
  std::size_t word_count(std::string_view text) const { return word_tokens(text).size(); }

  /// Stable digest of the token list, recorded in checkpoint manifests.
  std::string digest() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace undermine
