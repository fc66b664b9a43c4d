#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace undermine {

/// Settings shared by the command-line tools. Read from a flat
/// `key = value` file (`#` starts a comment), then overridden by flags.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output_dir;
  std::filesystem::path ranker_checkpoint;
  std::filesystem::path pointwise_checkpoint;
  std::filesystem::path generator_checkpoint;
  std::string backbone = "tiny";
  std::uint64_t seed = 1;

  // pipeline and decoding
  std::size_t top_k = 1;
  std::size_t sample_top_k = 50;
  double top_p = 0.95;
  double temperature = 1.0;
  std::size_t min_tokens = 100;
  std::size_t max_tokens = 150;
  std::filesystem::path stopwords;  ///< empty: built-in list
  std::string variant = "without";
  std::string objective = "listwise";
  std::string mode = "counter";  ///< evaluation references
  std::string split = "test";    ///< split scored by eval-ranker, generate, undermine

  // synthetic corpus sizes
  std::size_t synth_train = 500;
  std::size_t synth_valid = 0;
  std::size_t synth_test = 100;

  // training; unset values fall back to the model defaults
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> max_len;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> layers;
  std::optional<std::size_t> heads;

  /// Sets one key from its textual value. Unknown keys and malformed values
  /// raise ConfigError.
  void set(std::string_view key, std::string_view value);
  void load_file(const std::filesystem::path& path);

  static const std::vector<std::string>& keys();
  nlohmann::json to_json() const;
};

/// Parses the config file text into key/value pairs, rejecting malformed lines.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

/// Throws ConfigError unless `path` exists; `what` names it in the message.
void require_exists(const std::filesystem::path& path, std::string_view what);

/// Writes `<dir>/manifest.json` with the command, its config, the seeds, the
/// version string and a UTC timestamp. The timestamp lives only here.
void write_run_manifest(const std::filesystem::path& dir, std::string_view command, const RunConfig& config,
                        const nlohmann::json& extra = {});

}  // namespace undermine
