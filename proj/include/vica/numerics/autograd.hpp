#pragma once

// Reverse-mode differentiation over matrix-valued nodes. A Tape records every
// node in creation order; backward() walks it in reverse. Nodes whose inputs
// are all constants or frozen leaves never receive gradients, so frozen
// subgraphs are pruned from the backward pass structurally.

#include "vica/numerics/param_store.hpp"
#include "vica/numerics/tensor.hpp"

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vica::ag {

using nx::Index;
using nx::Matrix;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::function<void(const Matrix&)> backward;

  void accumulate(const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Expr& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, Node* node) : tape_(tape), node_(node) {}

  const Matrix& value() const { return node_->value; }
  // Zero-sized when no gradient reached this node.
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  bool valid() const { return node_ != nullptr; }

  Tape& tape() const { return *tape_; }
  Node* node() const { return node_; }

 private:
  Tape* tape_ = nullptr;
  Node* node_ = nullptr;
};

class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Matrix value);
  Var leaf(Matrix value, bool requires_grad);

  // Records an op result. `backward` receives the output gradient and must
  // accumulate into the parents; it is dropped when no parent needs grad.
  Var record(Matrix value, std::initializer_list<Var> parents,
             std::function<void(const Matrix&)> backward);
  Var record(Matrix value, std::span<const Var> parents,
             std::function<void(const Matrix&)> backward);

  // Seeds d(loss)/d(loss) = 1 on a 1x1 node and propagates.
  void backward(const Var& loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  bool grad_enabled_;
  std::deque<Node> nodes_;
};

// Exposes ParamStore leaves as tape leaves, once per path.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const nx::ParamStore& store) : tape_(tape), store_(store) {}

  Var operator()(const std::string& path);

  // Gradient per bound trainable leaf, reshaped to the leaf's tensor shape.
  // Leaves that received no gradient report zeros.
  std::map<std::string, nx::Tensor> gradients() const;

  const nx::ParamStore& store() const { return store_; }

 private:
  Tape& tape_;
  const nx::ParamStore& store_;
  std::map<std::string, Var> bound_;
};

// ---- ops -------------------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
Var gelu(const Var& a);
Var linear(const Var& x, const Var& weight, const Var& bias);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// Multi-head scaled dot-product attention on (T x D) q, k, v. With `causal`,
// row i attends to columns 0..i only and never reads later positions.
Var attention(const Var& q, const Var& k, const Var& v, int heads, bool causal);

Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& x, Index start, Index count);
Var embedding(const Var& table, std::span<const int> ids);

Var resize_grid(const Var& grid, Index h, Index w, Index oh, Index ow);
// (h*w) x C grid + 1 x C token -> h*(w+1) x C, token after every row.
Var append_row_tokens(const Var& grid, const Var& token, Index h, Index w);
Var patchify(const Var& grid, Index h, Index w, Index k);

// Mean token cross-entropy over rows whose target is >= 0.
Var cross_entropy(const Var& logits, std::span<const int> targets);

Var sum(const Var& a);
Var half_squared_norm(const Var& a);

} // namespace vica::ag
