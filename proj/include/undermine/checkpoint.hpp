#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "undermine/nn.hpp"
#include "undermine/text.hpp"

namespace undermine {

/// "<semver>-<git describe>" baked in at configure time.
std::string version_string();

// Checkpoint directory layout:
//   manifest.json  kind, config, vocabulary digest, seed, version
//   vocab.txt      one token per line, specials first
//   weights.bin    opaque parameter blob

void write_weights(const std::filesystem::path& path, const nn::ParameterSet& params);
/// Names and shapes must match `params` exactly.
void read_weights(const std::filesystem::path& path, nn::ParameterSet& params);

void save_checkpoint(const std::filesystem::path& dir, std::string_view kind, const nlohmann::json& config,
                     const Vocabulary& vocab, const nn::ParameterSet& params, std::uint64_t seed,
                     const nlohmann::json& extra = {});

struct LoadedCheckpoint {
  nlohmann::json manifest;
  Vocabulary vocab;
};

/// Reads manifest and vocabulary, checking kind and vocabulary digest.
LoadedCheckpoint open_checkpoint(const std::filesystem::path& dir, std::string_view kind);

}  // namespace undermine
