#include "undermine/nn.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace undermine::nn {

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (find(name) != nullptr) throw std::logic_error("duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Matrix(rows, cols);
  p->grad = Matrix(rows, cols);
  p->adam_m = Matrix(rows, cols);
  p->adam_v = Matrix(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

Parameter& ParameterSet::at(const std::string& name) {
  Parameter* p = find(name);
  if (p == nullptr) throw std::out_of_range("no parameter named " + name);
  return *p;
}

void ParameterSet::init_normal(std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& p : params_)
    for (double& v : p->value.values()) v = normal(rng);
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

bool ParameterSet::same_values(const ParameterSet& other) const {
  if (other.params_.size() != params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i]->name != other.params_[i]->name) return false;
    if (!(params_[i]->value == other.params_[i]->value)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::push(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix{}, {}});
  return Var(nodes_.size() - 1);
}

Matrix& Graph::grad_of(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::input(Matrix value) { return push(std::move(value)); }

Var Graph::param(Parameter& p) {
  Var out = push(p.value);
  if (record_) {
    const std::size_t id = out.id_;
    node(out).backward = [this, id, &p] {
      const Matrix& g = nodes_[id].grad;
      auto dst = p.grad.values();
      auto src = g.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
  }
  return out;
}

Var Graph::gather(Parameter& table, std::span<const int> ids) {
  const std::size_t width = table.value.cols();
  Matrix out(ids.size(), width);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto src = static_cast<std::size_t>(ids[r]);
    assert(src < table.value.rows());
    std::copy_n(table.value.row(src).begin(), width, out.row(r).begin());
  }
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_;
    std::vector<int> rows(ids.begin(), ids.end());
    node(v).backward = [this, id, &table, rows = std::move(rows)] {
      const Matrix& g = nodes_[id].grad;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        auto dst = table.grad.row(static_cast<std::size_t>(rows[r]));
        auto src = g.row(r);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
      }
    };
  }
  return v;
}

Var Graph::add(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  assert(av.rows() == bv.rows() && av.cols() == bv.cols());
  Matrix out = av;
  auto o = out.values();
  auto bs = bv.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bs[i];
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ia = a.id_, ib = b.id_;
    node(v).backward = [this, id, ia, ib] {
      for (std::size_t target : {ia, ib}) {
        auto dst = grad_of(target).values();
        auto src = nodes_[id].grad.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    };
  }
  return v;
}

Var Graph::add_row(Var a, Var row_var) {
  const Matrix& av = value(a);
  const Matrix& rv = value(row_var);
  assert(rv.rows() == 1 && rv.cols() == av.cols());
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ia = a.id_, ib = row_var.id_;
    node(v).backward = [this, id, ia, ib] {
      const Matrix& g = nodes_[id].grad;
      Matrix& ga = grad_of(ia);
      Matrix& gb = grad_of(ib);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) {
          ga(r, c) += g(r, c);
          gb(0, c) += g(r, c);
        }
    };
  }
  return v;
}

Var Graph::matmul(Var a, Var b) {
  Matrix out(value(a).rows(), value(b).cols());
  kernels::matmul(value(a).view(), value(b).view(), out.mut_view());
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ia = a.id_, ib = b.id_;
    node(v).backward = [this, id, ia, ib] {
      const Matrix& g = nodes_[id].grad;
      // dA += dC B^T ; dB += A^T dC
      kernels::matmul_nt(g.view(), nodes_[ib].value.view(), grad_of(ia).mut_view(), true);
      kernels::matmul_tn(nodes_[ia].value.view(), g.view(), grad_of(ib).mut_view(), true);
    };
  }
  return v;
}

Var Graph::matmul_nt(Var a, Var b) {
  Matrix out(value(a).rows(), value(b).rows());
  kernels::matmul_nt(value(a).view(), value(b).view(), out.mut_view());
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ia = a.id_, ib = b.id_;
    node(v).backward = [this, id, ia, ib] {
      const Matrix& g = nodes_[id].grad;
      // C = A B^T: dA += dC B ; dB += dC^T A
      kernels::matmul(g.view(), nodes_[ib].value.view(), grad_of(ia).mut_view(), true);
      kernels::matmul_tn(g.view(), nodes_[ia].value.view(), grad_of(ib).mut_view(), true);
    };
  }
  return v;
}

Var Graph::scale(Var a, double factor) {
  Matrix out = value(a);
  for (double& x : out.values()) x *= factor;
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ia = a.id_;
    node(v).backward = [this, id, ia, factor] {
      auto dst = grad_of(ia).values();
      auto src = nodes_[id].grad.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
    };
  }
  return v;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var Graph::gelu(Var a) {
  Matrix out = value(a);
  for (double& x : out.values()) x = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ia = a.id_;
    node(v).backward = [this, id, ia] {
      auto x = nodes_[ia].value.values();
      auto g = nodes_[id].grad.values();
      auto dst = grad_of(ia).values();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        const double t = std::tanh(kGeluC * (xi + kGeluA * xi * xi * xi));
        const double d = 0.5 * (1.0 + t) +
                         0.5 * xi * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * xi * xi);
        dst[i] += g[i] * d;
      }
    };
  }
  return v;
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& xv = value(x);
  const std::size_t rows = xv.rows(), cols = xv.cols();
  Matrix normed(rows, cols);
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = xv.row(r);
    const double mean = std::accumulate(in.begin(), in.end(), 0.0) / static_cast<double>(cols);
    double var = 0.0;
    for (double e : in) var += (e - mean) * (e - mean);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) normed(r, c) = (in[c] - mean) * inv_std[r];
  }
  Matrix out(rows, cols);
  const Matrix& gv = value(gain);
  const Matrix& bv = value(bias);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = normed(r, c) * gv(0, c) + bv(0, c);
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ix = x.id_, ig = gain.id_, ib = bias.id_;
    node(v).backward = [this, id, ix, ig, ib, normed = std::move(normed),
                        inv_std = std::move(inv_std)] {
      const Matrix& g = nodes_[id].grad;
      const Matrix& gv = nodes_[ig].value;
      Matrix& gx = grad_of(ix);
      Matrix& gg = grad_of(ig);
      Matrix& gb = grad_of(ib);
      const std::size_t rows = g.rows(), cols = g.cols();
      const double n = static_cast<double>(cols);
      std::vector<double> dxhat(cols);
      for (std::size_t r = 0; r < rows; ++r) {
        double sum_d = 0.0, sum_dx = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          gg(0, c) += g(r, c) * normed(r, c);
          gb(0, c) += g(r, c);
          dxhat[c] = g(r, c) * gv(0, c);
          sum_d += dxhat[c];
          sum_dx += dxhat[c] * normed(r, c);
        }
        for (std::size_t c = 0; c < cols; ++c)
          gx(r, c) += inv_std[r] / n * (n * dxhat[c] - sum_d - normed(r, c) * sum_dx);
      }
    };
  }
  return v;
}

Var Graph::softmax_rows(Var x, bool causal) {
  Matrix out = value(x);
  kernels::softmax_rows(out.mut_view(), causal);
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ix = x.id_;
    node(v).backward = [this, id, ix] {
      const Matrix& y = nodes_[id].value;
      const Matrix& g = nodes_[id].grad;
      Matrix& gx = grad_of(ix);
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (g(r, c) - dot);
      }
    };
  }
  return v;
}

Var Graph::slice_cols(Var x, std::size_t begin, std::size_t width) {
  const Matrix& xv = value(x);
  assert(begin + width <= xv.cols());
  Matrix out(xv.rows(), width);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = xv(r, begin + c);
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ix = x.id_;
    node(v).backward = [this, id, ix, begin, width] {
      const Matrix& g = nodes_[id].grad;
      Matrix& gx = grad_of(ix);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < width; ++c) gx(r, begin + c) += g(r, c);
    };
  }
  return v;
}

Var Graph::concat_cols(std::span<const Var> parts) {
  assert(!parts.empty());
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) cols += value(p).cols();
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    assert(pv.rows() == rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_;
    std::vector<std::size_t> ids;
    for (Var p : parts) ids.push_back(p.id_);
    node(v).backward = [this, id, ids = std::move(ids)] {
      const Matrix& g = nodes_[id].grad;
      std::size_t offset = 0;
      for (std::size_t pid : ids) {
        Matrix& gp = grad_of(pid);
        for (std::size_t r = 0; r < gp.rows(); ++r)
          for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, offset + c);
        offset += gp.cols();
      }
    };
  }
  return v;
}

Var Graph::concat_rows(std::span<const Var> parts) {
  assert(!parts.empty());
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  for (Var p : parts) rows += value(p).rows();
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    assert(pv.cols() == cols);
    std::copy(pv.values().begin(), pv.values().end(), out.values().begin() + offset * cols);
    offset += pv.rows();
  }
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_;
    std::vector<std::size_t> ids;
    for (Var p : parts) ids.push_back(p.id_);
    node(v).backward = [this, id, ids = std::move(ids)] {
      const Matrix& g = nodes_[id].grad;
      std::size_t offset = 0;
      for (std::size_t pid : ids) {
        Matrix& gp = grad_of(pid);
        auto dst = gp.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g.values()[offset * g.cols() + i];
        offset += gp.rows();
      }
    };
  }
  return v;
}

Var Graph::slice_rows(Var x, std::size_t begin, std::size_t count) {
  const Matrix& xv = value(x);
  assert(begin + count <= xv.rows());
  Matrix out(count, xv.cols());
  const auto src = xv.values().begin() + static_cast<std::ptrdiff_t>(begin * xv.cols());
  std::copy_n(src, count * xv.cols(), out.values().begin());
  Var v = push(std::move(out));
  if (record_) {
    const std::size_t id = v.id_, ix = x.id_;
    node(v).backward = [this, id, ix, begin] {
      Matrix& dst = grad_of(ix);
      const Matrix& src = nodes_[id].grad;
      double* d = dst.values().data() + begin * dst.cols();
      for (std::size_t i = 0; i < src.values().size(); ++i) d[i] += src.values()[i];
    };
  }
  return v;
}

Var Graph::cross_entropy(Var logits, std::span<const int> targets, Reduction reduction) {
  const Matrix& lv = value(logits);
  assert(targets.size() == lv.rows());
  Matrix probs = lv;
  kernels::softmax_rows(probs.mut_view(), false);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] < 0) continue;
    total -= std::log(std::max(probs(r, static_cast<std::size_t>(targets[r])), 1e-300));
    ++count;
  }
  const double divisor =
      reduction == Reduction::mean ? static_cast<double>(std::max<std::size_t>(count, 1)) : 1.0;
  Var v = push(Matrix(1, 1, count == 0 ? 0.0 : total / divisor));
  if (record_ && count > 0) {
    const std::size_t id = v.id_, il = logits.id_;
    std::vector<int> t(targets.begin(), targets.end());
    node(v).backward = [this, id, il, divisor, probs = std::move(probs), t = std::move(t)] {
      const double upstream = nodes_[id].grad(0, 0) / divisor;
      Matrix& gl = grad_of(il);
      for (std::size_t r = 0; r < t.size(); ++r) {
        if (t[r] < 0) continue;
        for (std::size_t c = 0; c < probs.cols(); ++c) {
          const double onehot = static_cast<int>(c) == t[r] ? 1.0 : 0.0;
          gl(r, c) += upstream * (probs(r, c) - onehot);
        }
      }
    };
  }
  return v;
}

Var Graph::custom(Var input, Matrix value_out, CustomBackward backward_fn) {
  Var v = push(std::move(value_out));
  if (record_) {
    const std::size_t id = v.id_, ii = input.id_;
    node(v).backward = [this, id, ii, fn = std::move(backward_fn)] {
      fn(nodes_[id].grad, grad_of(ii));
    };
  }
  return v;
}

void Graph::backward(Var loss) {
  if (!record_) throw std::logic_error("backward on a graph built without gradient recording");
  assert(value(loss).size() == 1);
  grad_of(loss.id_)(0, 0) = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() == n.value.size()) n.backward();
  }
}

// ---------------------------------------------------------------------------
// Adam

void Adam::step(ParameterSet& params) {
  ++steps_;
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params)
      for (double g : p->grad.values()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& p : params) {
    auto w = p->value.values();
    auto g = p->grad.values();
    auto m = p->adam_m.values();
    auto v = p->adam_v.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * scale;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      const double mhat = m[i] / correction1;
      const double vhat = v[i] / correction2;
      w[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      g[i] = 0.0;
    }
  }
}

}  // namespace undermine::nn
