#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "undermine/nn.hpp"

namespace undermine {

struct TransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t max_len = 128;
  std::size_t hidden = 32;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t ff_mult = 4;
  bool causal = false;
  std::size_t token_types = 0;  ///< 0 disables the token-type table

  void validate() const;
};

/// Pre-LayerNorm transformer stack over summed word, position and (optionally)
/// token-type embeddings. Parameters live in a caller-owned ParameterSet
/// under `prefix`.
class TinyTransformer {
 public:
  TinyTransformer(const TransformerConfig& config, nn::ParameterSet& params, const std::string& prefix);

  const TransformerConfig& config() const noexcept { return config_; }

  /// Final hidden states, shape (ids.size(), hidden). `types` may be empty
  /// when the model has no token-type table.
  nn::Var forward(nn::Graph& g, std::span<const int> ids, std::span<const int> types) const;

  /// Key/value cache for causal decoding one position at a time.
  struct DecodeState {
    std::vector<std::vector<double>> keys;    // per layer, flattened rows
    std::vector<std::vector<double>> values;  // per layer, flattened rows
    std::size_t length = 0;
  };
  DecodeState start_decode() const;
  /// Appends one position and returns its final hidden state. Causal models only.
  std::vector<double> decode_step(DecodeState& state, int id, int type) const;

  nn::Parameter& token_type_table() const;
  nn::Parameter& word_embeddings() const { return *wte_; }

 private:
  struct Layer {
    nn::Parameter *ln1_g, *ln1_b, *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    nn::Parameter *ln2_g, *ln2_b, *w1, *b1, *w2, *b2;
  };

  TransformerConfig config_;
  nn::Parameter* wte_;
  nn::Parameter* wpe_;
  nn::Parameter* wtt_ = nullptr;
  std::vector<Layer> layers_;
  nn::Parameter* lnf_g_;
  nn::Parameter* lnf_b_;
};

/// Sets every `*.g` LayerNorm gain to one and every bias to zero after a
/// normal initialisation of the whole set.
void init_transformer_params(nn::ParameterSet& params, std::uint64_t seed, double stddev = 0.02);

}  // namespace undermine
