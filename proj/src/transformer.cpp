#include "undermine/transformer.hpp"

#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "undermine/errors.hpp"

namespace undermine {

void TransformerConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("transformer vocab_size must be positive");
  if (max_len < 3) throw ConfigError("transformer max_len must be at least 3");
  if (hidden == 0 || layers == 0 || heads == 0) throw ConfigError("transformer dimensions must be positive");
  if (hidden % heads != 0) throw ConfigError("transformer hidden width must be divisible by heads");
}

TinyTransformer::TinyTransformer(const TransformerConfig& config, nn::ParameterSet& params,
                                 const std::string& prefix)
    : config_(config) {
  config_.validate();
  const std::size_t h = config_.hidden;
  const std::size_t ff = h * config_.ff_mult;
  wte_ = &params.add(prefix + "wte", config_.vocab_size, h);
  wpe_ = &params.add(prefix + "wpe", config_.max_len, h);
  if (config_.token_types > 0) wtt_ = &params.add(prefix + "wtt", config_.token_types, h);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = prefix + "l" + std::to_string(l) + ".";
    Layer layer{};
    layer.ln1_g = &params.add(p + "ln1.g", 1, h);
    layer.ln1_b = &params.add(p + "ln1.b", 1, h);
    layer.wq = &params.add(p + "attn.wq", h, h);
    layer.bq = &params.add(p + "attn.bq", 1, h);
    layer.wk = &params.add(p + "attn.wk", h, h);
    layer.bk = &params.add(p + "attn.bk", 1, h);
    layer.wv = &params.add(p + "attn.wv", h, h);
    layer.bv = &params.add(p + "attn.bv", 1, h);
    layer.wo = &params.add(p + "attn.wo", h, h);
    layer.bo = &params.add(p + "attn.bo", 1, h);
    layer.ln2_g = &params.add(p + "ln2.g", 1, h);
    layer.ln2_b = &params.add(p + "ln2.b", 1, h);
    layer.w1 = &params.add(p + "mlp.w1", h, ff);
    layer.b1 = &params.add(p + "mlp.b1", 1, ff);
    layer.w2 = &params.add(p + "mlp.w2", ff, h);
    layer.b2 = &params.add(p + "mlp.b2", 1, h);
    layers_.push_back(layer);
  }
  lnf_g_ = &params.add(prefix + "lnf.g", 1, h);
  lnf_b_ = &params.add(prefix + "lnf.b", 1, h);
}

nn::Parameter& TinyTransformer::token_type_table() const {
  if (wtt_ == nullptr) throw std::logic_error("model has no token-type table");
  return *wtt_;
}

nn::Var TinyTransformer::forward(nn::Graph& g, std::span<const int> ids, std::span<const int> types) const {
  const std::size_t n = ids.size();
  if (n == 0 || n > config_.max_len) throw ModelError("sequence length outside model context");
  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), 0);

  nn::Var x = g.add(g.gather(*wte_, ids), g.gather(*wpe_, positions));
  if (wtt_ != nullptr) {
    assert(types.size() == n);
    x = g.add(x, g.gather(*wtt_, types));
  }

  const std::size_t head_dim = config_.hidden / config_.heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (const Layer& L : layers_) {
    nn::Var h = g.layer_norm(x, g.param(*L.ln1_g), g.param(*L.ln1_b));
    nn::Var q = g.add_row(g.matmul(h, g.param(*L.wq)), g.param(*L.bq));
    nn::Var k = g.add_row(g.matmul(h, g.param(*L.wk)), g.param(*L.bk));
    nn::Var v = g.add_row(g.matmul(h, g.param(*L.wv)), g.param(*L.bv));
    std::vector<nn::Var> heads;
    for (std::size_t hd = 0; hd < config_.heads; ++hd) {
      const std::size_t off = hd * head_dim;
      nn::Var qh = g.slice_cols(q, off, head_dim);
      nn::Var kh = g.slice_cols(k, off, head_dim);
      nn::Var vh = g.slice_cols(v, off, head_dim);
      nn::Var att = g.softmax_rows(g.scale(g.matmul_nt(qh, kh), att_scale), config_.causal);
      heads.push_back(g.matmul(att, vh));
    }
    nn::Var merged = heads.size() == 1 ? heads[0] : g.concat_cols(heads);
    x = g.add(x, g.add_row(g.matmul(merged, g.param(*L.wo)), g.param(*L.bo)));

    nn::Var h2 = g.layer_norm(x, g.param(*L.ln2_g), g.param(*L.ln2_b));
    nn::Var f = g.gelu(g.add_row(g.matmul(h2, g.param(*L.w1)), g.param(*L.b1)));
    x = g.add(x, g.add_row(g.matmul(f, g.param(*L.w2)), g.param(*L.b2)));
  }
  return g.layer_norm(x, g.param(*lnf_g_), g.param(*lnf_b_));
}

// ---------------------------------------------------------------------------
// Incremental decoding on plain vectors.

namespace {

void layer_norm_vec(std::vector<double>& x, const nn::Matrix& gain, const nn::Matrix& bias) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double e : x) var += (e - mean) * (e - mean);
  const double inv = 1.0 / std::sqrt(var / n + 1e-5);
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - mean) * inv * gain(0, c) + bias(0, c);
}

std::vector<double> affine(const std::vector<double>& x, const nn::Matrix& w, const nn::Matrix& b) {
  nn::Matrix out(1, w.cols());
  kernels::matmul({x, 1, x.size()}, w.view(), out.mut_view());
  std::vector<double> y(out.values().begin(), out.values().end());
  for (std::size_t c = 0; c < y.size(); ++c) y[c] += b(0, c);
  return y;
}

double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
}

}  // namespace

TinyTransformer::DecodeState TinyTransformer::start_decode() const {
  if (!config_.causal) throw std::logic_error("incremental decoding requires a causal model");
  DecodeState s;
  s.keys.resize(layers_.size());
  s.values.resize(layers_.size());
  return s;
}

std::vector<double> TinyTransformer::decode_step(DecodeState& state, int id, int type) const {
  const std::size_t pos = state.length;
  if (pos >= config_.max_len) throw ModelError("decoding past model context");
  const std::size_t h = config_.hidden;
  std::vector<double> x(h);
  for (std::size_t c = 0; c < h; ++c) {
    x[c] = wte_->value(static_cast<std::size_t>(id), c) + wpe_->value(pos, c);
    if (wtt_ != nullptr) x[c] += wtt_->value(static_cast<std::size_t>(type), c);
  }

  const std::size_t head_dim = h / config_.heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    std::vector<double> hn = x;
    layer_norm_vec(hn, L.ln1_g->value, L.ln1_b->value);
    const std::vector<double> q = affine(hn, L.wq->value, L.bq->value);
    const std::vector<double> k = affine(hn, L.wk->value, L.bk->value);
    const std::vector<double> v = affine(hn, L.wv->value, L.bv->value);
    auto& keys = state.keys[l];
    auto& vals = state.values[l];
    keys.insert(keys.end(), k.begin(), k.end());
    vals.insert(vals.end(), v.begin(), v.end());
    const std::size_t len = pos + 1;

    std::vector<double> merged(h, 0.0);
    std::vector<double> scores(len);
    for (std::size_t hd = 0; hd < config_.heads; ++hd) {
      const std::size_t off = hd * head_dim;
      for (std::size_t t = 0; t < len; ++t) {
        double dot = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c) dot += q[off + c] * keys[t * h + off + c];
        scores[t] = dot * att_scale;
      }
      kernels::softmax_rows({scores, 1, len}, false);
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t c = 0; c < head_dim; ++c) merged[off + c] += scores[t] * vals[t * h + off + c];
    }
    const std::vector<double> proj = affine(merged, L.wo->value, L.bo->value);
    for (std::size_t c = 0; c < h; ++c) x[c] += proj[c];

    std::vector<double> h2 = x;
    layer_norm_vec(h2, L.ln2_g->value, L.ln2_b->value);
    std::vector<double> f = affine(h2, L.w1->value, L.b1->value);
    for (double& e : f) e = gelu_scalar(e);
    const std::vector<double> out = affine(f, L.w2->value, L.b2->value);
    for (std::size_t c = 0; c < h; ++c) x[c] += out[c];
  }
  layer_norm_vec(x, lnf_g_->value, lnf_b_->value);
  ++state.length;
  return x;
}

void init_transformer_params(nn::ParameterSet& params, std::uint64_t seed, double stddev) {
  params.init_normal(seed, stddev);
  for (auto& p : params) {
    const std::string& name = p->name;
    const auto ends_with = [&](std::string_view suffix) {
      return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".g")) p->value.fill(1.0);
    else if (ends_with(".b") || ends_with(".bq") || ends_with(".bk") || ends_with(".bv") ||
             ends_with(".bo") || ends_with(".b1") || ends_with(".b2"))
      p->value.fill(0.0);
  }
}

}  // namespace undermine
