#pragma once

// Minimal dense-matrix autograd: a tape of matrix-valued nodes with
// reverse-mode differentiation, named trainable parameters and Adam.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "undermine/kernels.hpp"

namespace undermine::nn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  kernels::ConstView view() const { return {values_, rows_, cols_}; }
  kernels::MutView mut_view() { return {values_, rows_, cols_}; }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
};

/// Owns every trainable matrix of a model. Addresses are stable.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);

  void init_normal(std::uint64_t seed, double stddev);
  void zero_grad();

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  /// True when every parameter value is bitwise equal.
  bool same_values(const ParameterSet& other) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Graph;

class Var {
 public:
  Var() = default;
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Graph;
  explicit Var(std::size_t id) : id_(id) {}
  std::size_t id_ = static_cast<std::size_t>(-1);
};

enum class Reduction { mean, sum };

/// Records matrix operations for one forward pass. With `record_gradients`
/// off the graph only evaluates, which is what inference paths use.
class Graph {
 public:
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Matrix value);
  Var param(Parameter& p);
  /// Rows `ids` of an embedding table.
  Var gather(Parameter& table, std::span<const int> ids);

  Var add(Var a, Var b);
  Var add_row(Var a, Var row);
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var scale(Var a, double factor);
  Var gelu(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var softmax_rows(Var x, bool causal);
  Var slice_cols(Var x, std::size_t begin, std::size_t width);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_rows(Var x, std::size_t begin, std::size_t count);
  Var row(Var x, std::size_t r) { return slice_rows(x, r, 1); }
  /// Softmax cross-entropy of each row against `targets`; negative targets
  /// are ignored. Result is 1x1. Mean over zero targets is 0.
  Var cross_entropy(Var logits, std::span<const int> targets, Reduction reduction);

  /// Escape hatch for losses defined elsewhere: `backward` receives the
  /// upstream gradient of the result and must add into the input gradient.
  using CustomBackward = std::function<void(const Matrix& out_grad, Matrix& in_grad)>;
  Var custom(Var input, Matrix value, CustomBackward backward);

  const Matrix& value(Var v) const { return nodes_[v.id_].value; }
  double scalar(Var v) const { return nodes_[v.id_].value(0, 0); }

  /// Reverse pass from a 1x1 node; parameter gradients are accumulated
  /// (not overwritten) so several graphs can contribute to one step.
  void backward(Var loss);

  const Matrix& grad(Var v) const { return nodes_[v.id_].grad; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backward;
  };

  Var push(Matrix value);
  Node& node(Var v) { return nodes_[v.id_]; }
  Matrix& grad_of(std::size_t id);

  bool record_;
  std::vector<Node> nodes_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  ///< global gradient-norm clip; <= 0 disables
};

class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}
  /// Applies one update from the accumulated gradients, then zeroes them.
  void step(ParameterSet& params);
  std::size_t steps() const noexcept { return steps_; }

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
};

}  // namespace undermine::nn
