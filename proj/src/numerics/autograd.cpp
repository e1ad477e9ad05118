#include "vica/numerics/autograd.hpp"

#include "vica/error.hpp"
#include "vica/numerics/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace vica::ag {
namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShape,
                std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                    "x" + std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

} // namespace

void Node::accumulate(const Matrix& g) { accumulate_expr(g); }

Var Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return {this, &n};
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = grad_enabled_ && requires_grad;
  return {this, &n};
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents,
                 std::function<void(const Matrix&)> backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents,
                 std::function<void(const Matrix&)> backward) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& p : parents) {
      if (p.requires_grad()) {
        n.requires_grad = true;
        break;
      }
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return {this, &n};
}

void Tape::backward(const Var& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw Error(ErrorCode::kShape, "backward needs a scalar (1x1) loss");
  }
  if (!loss.requires_grad()) return;
  loss.node()->grad = Matrix::Ones(1, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->requires_grad && it->backward && it->grad.size() != 0) {
      it->backward(it->grad);
    }
  }
}

Var ParamBinder::operator()(const std::string& path) {
  auto it = bound_.find(path);
  if (it != bound_.end()) return it->second;
  const nx::Leaf& leaf = store_.leaf(path);
  Var v = tape_.leaf(leaf.value.matrix(), leaf.trainable);
  bound_.emplace(path, v);
  return v;
}

std::map<std::string, nx::Tensor> ParamBinder::gradients() const {
  std::map<std::string, nx::Tensor> out;
  for (const auto& [path, var] : bound_) {
    if (!var.requires_grad()) continue;
    nx::Tensor g(store_.leaf(path).value.shape());
    if (var.grad().size() != 0) g.matrix() = var.grad();
    out.emplace(path, std::move(g));
  }
  return out;
}

// ---- ops -------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  Matrix out = nx::matmul(a.value(), b.value());
  Node* an = a.node();
  Node* bn = b.node();
  return a.tape().record(std::move(out), {a, b}, [an, bn](const Matrix& g) {
    if (an->requires_grad) an->accumulate_expr(g * bn->value.transpose());
    if (bn->requires_grad) bn->accumulate_expr(an->value.transpose() * g);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Node* an = a.node();
  Node* bn = b.node();
  return a.tape().record(a.value() + b.value(), {a, b}, [an, bn](const Matrix& g) {
    an->accumulate(g);
    bn->accumulate(g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Node* an = a.node();
  Node* bn = b.node();
  return a.tape().record(a.value() - b.value(), {a, b}, [an, bn](const Matrix& g) {
    an->accumulate(g);
    bn->accumulate_expr(-g);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Node* an = a.node();
  Node* bn = b.node();
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), {a, b}, [an, bn](const Matrix& g) {
    an->accumulate_expr(g.cwiseProduct(bn->value));
    bn->accumulate_expr(g.cwiseProduct(an->value));
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error(ErrorCode::kShape, "add_row: bias must be 1 x " + std::to_string(a.cols()));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  Node* an = a.node();
  Node* rn = row.node();
  return a.tape().record(std::move(out), {a, row}, [an, rn](const Matrix& g) {
    an->accumulate(g);
    rn->accumulate_expr(g.colwise().sum());
  });
}

Var scale(const Var& a, double s) {
  Node* an = a.node();
  return a.tape().record(a.value() * s, {a},
                         [an, s](const Matrix& g) { an->accumulate_expr(g * s); });
}

Var gelu(const Var& a) {
  Node* an = a.node();
  return a.tape().record(nx::gelu(a.value()), {a}, [an](const Matrix& g) {
    an->accumulate_expr(g.cwiseProduct(nx::gelu_grad(an->value)));
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  return add_row(matmul(x, weight), bias);
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Index c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c) {
    throw Error(ErrorCode::kShape, "layer_norm: affine params must be 1 x C");
  }
  Eigen::VectorXd inv_std;
  Matrix xhat = nx::layer_norm_rows(x.value(), eps, &inv_std);
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  Node* xn = x.node();
  Node* gn = gamma.node();
  Node* bn = beta.node();
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [xn, gn, bn, xhat = std::move(xhat), inv_std = std::move(inv_std), c](const Matrix& g) {
        gn->accumulate_expr(g.cwiseProduct(xhat).colwise().sum());
        bn->accumulate_expr(g.colwise().sum());
        if (!xn->requires_grad) return;
        Matrix dxhat = (g.array().rowwise() * gn->value.row(0).array()).matrix();
        const Eigen::VectorXd mean_d = dxhat.rowwise().sum() / double(c);
        const Eigen::VectorXd mean_dx = dxhat.cwiseProduct(xhat).rowwise().sum() / double(c);
        Matrix dx = dxhat;
        dx.colwise() -= mean_d;
        dx -= (xhat.array().colwise() * mean_dx.array()).matrix();
        dx = (dx.array().colwise() * inv_std.array()).matrix();
        xn->accumulate(dx);
      });
}

Var attention(const Var& q, const Var& k, const Var& v, int heads, bool causal) {
  require_same_shape(q, k, "attention(q,k)");
  require_same_shape(q, v, "attention(q,v)");
  const Index t = q.rows();
  const Index d = q.cols();
  if (heads < 1 || d % heads != 0) {
    throw Error(ErrorCode::kShape, "attention: width not divisible by head count");
  }
  const Index dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out(t, d);
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.value().middleCols(h * dh, dh);
    const auto kh = k.value().middleCols(h * dh, dh);
    const auto vh = v.value().middleCols(h * dh, dh);
    Matrix& p = probs[static_cast<std::size_t>(h)];
    p.noalias() = (qh * kh.transpose()) * sc;
    // Entries above the diagonal are written as exact zeros, so row i never
    // depends on values at later positions.
    if (causal) {
      for (Index i = 0; i < t; ++i) {
        auto row = p.row(i);
        auto live = row.head(i + 1);
        live.array() = (live.array() - live.maxCoeff()).exp();
        live /= live.sum();
        row.tail(t - i - 1).setZero();
      }
    } else {
      const Eigen::VectorXd row_max = p.rowwise().maxCoeff();
      p.colwise() -= row_max;
      p = p.array().exp().matrix();
      const Eigen::VectorXd row_sum = p.rowwise().sum();
      p = (p.array().colwise() / row_sum.array()).matrix();
    }
    out.middleCols(h * dh, dh).noalias() = p * vh;
  }

  Node* qn = q.node();
  Node* kn = k.node();
  Node* vn = v.node();
  return q.tape().record(
      std::move(out), {q, k, v},
      [qn, kn, vn, probs = std::move(probs), heads, dh, sc, t, d](const Matrix& g) {
        Matrix dq = Matrix::Zero(t, d), dk = Matrix::Zero(t, d), dv = Matrix::Zero(t, d);
        for (int h = 0; h < heads; ++h) {
          const Matrix& p = probs[static_cast<std::size_t>(h)];
          const auto go = g.middleCols(h * dh, dh);
          const auto qh = qn->value.middleCols(h * dh, dh);
          const auto kh = kn->value.middleCols(h * dh, dh);
          const auto vh = vn->value.middleCols(h * dh, dh);
          dv.middleCols(h * dh, dh) = p.transpose() * go;
          Matrix dp = go * vh.transpose();
          const Eigen::VectorXd rs = dp.cwiseProduct(p).rowwise().sum();
          Matrix ds = p.cwiseProduct((dp.colwise() - rs));
          dq.middleCols(h * dh, dh) = (ds * kh) * sc;
          dk.middleCols(h * dh, dh) = (ds.transpose() * qh) * sc;
        }
        qn->accumulate(dq);
        kn->accumulate(dk);
        vn->accumulate(dv);
      });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShape, "concat_rows of nothing");
  std::vector<Matrix> values;
  values.reserve(parts.size());
  for (const Var& p : parts) values.push_back(p.value());
  Matrix out = nx::concat_rows(values);
  std::vector<Node*> nodes;
  std::vector<Index> offsets;
  Index at = 0;
  for (const Var& p : parts) {
    nodes.push_back(p.node());
    offsets.push_back(at);
    at += p.rows();
  }
  return parts.front().tape().record(
      std::move(out), parts, [nodes, offsets](const Matrix& g) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          Node* n = nodes[i];
          if (!n->requires_grad || n->value.rows() == 0) continue;
          n->accumulate_expr(g.middleRows(offsets[i], n->value.rows()));
        }
      });
}

Var slice_rows(const Var& x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    throw Error(ErrorCode::kShape, "slice_rows out of range");
  }
  Node* xn = x.node();
  const Index rows = x.rows();
  return x.tape().record(x.value().middleRows(start, count), {x},
                         [xn, start, count, rows](const Matrix& g) {
                           Matrix full = Matrix::Zero(rows, g.cols());
                           full.middleRows(start, count) = g;
                           xn->accumulate(full);
                         });
}

Var embedding(const Var& table, std::span<const int> ids) {
  Matrix out = nx::embedding_lookup(table.value(), ids);
  Node* tn = table.node();
  std::vector<int> idv(ids.begin(), ids.end());
  return table.tape().record(std::move(out), {table}, [tn, idv](const Matrix& g) {
    Matrix full = Matrix::Zero(tn->value.rows(), tn->value.cols());
    for (std::size_t i = 0; i < idv.size(); ++i) full.row(idv[i]) += g.row(static_cast<Index>(i));
    tn->accumulate(full);
  });
}

Var resize_grid(const Var& grid, Index h, Index w, Index oh, Index ow) {
  Node* gn = grid.node();
  return grid.tape().record(nx::resize_grid(grid.value(), h, w, oh, ow), {grid},
                            [gn, h, w, oh, ow](const Matrix& g) {
                              gn->accumulate(nx::resize_grid_adjoint(g, h, w, oh, ow));
                            });
}

Var append_row_tokens(const Var& grid, const Var& token, Index h, Index w) {
  if (grid.rows() != h * w) throw Error(ErrorCode::kShape, "append_row_tokens: rows != h*w");
  if (token.rows() != 1 || token.cols() != grid.cols()) {
    throw Error(ErrorCode::kShape, "append_row_tokens: token must be 1 x C");
  }
  Matrix out(h * (w + 1), grid.cols());
  for (Index r = 0; r < h; ++r) {
    out.middleRows(r * (w + 1), w) = grid.value().middleRows(r * w, w);
    out.row(r * (w + 1) + w) = token.value().row(0);
  }
  Node* gn = grid.node();
  Node* tn = token.node();
  return grid.tape().record(std::move(out), {grid, token}, [gn, tn, h, w](const Matrix& g) {
    if (gn->requires_grad) {
      Matrix dg(h * w, g.cols());
      for (Index r = 0; r < h; ++r) dg.middleRows(r * w, w) = g.middleRows(r * (w + 1), w);
      gn->accumulate(dg);
    }
    if (tn->requires_grad) {
      Matrix dt = Matrix::Zero(1, g.cols());
      for (Index r = 0; r < h; ++r) dt += g.row(r * (w + 1) + w);
      tn->accumulate(dt);
    }
  });
}

Var patchify(const Var& grid, Index h, Index w, Index k) {
  Node* gn = grid.node();
  const Index c = grid.cols();
  return grid.tape().record(nx::patchify(grid.value(), h, w, k), {grid},
                            [gn, h, w, c, k](const Matrix& g) {
                              gn->accumulate(nx::patchify_adjoint(g, h, w, c, k));
                            });
}

Var cross_entropy(const Var& logits, std::span<const int> targets) {
  if (static_cast<Index>(targets.size()) != logits.rows()) {
    throw Error(ErrorCode::kShape, "cross_entropy: one target per logit row required");
  }
  const Index vocab = logits.cols();
  Index count = 0;
  for (int t : targets) {
    if (t >= vocab) {
      throw Error(ErrorCode::kVocab, "target id " + std::to_string(t) +
                                         " outside vocabulary of " + std::to_string(vocab));
    }
    if (t >= 0) ++count;
  }
  if (count == 0) throw Error(ErrorCode::kShape, "cross_entropy: no target positions");
  Matrix probs = nx::softmax_rows(logits.value());
  double loss = 0.0;
  for (Index r = 0; r < logits.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    const auto row = logits.value().row(r);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    loss += lse - row(t);
  }
  loss /= static_cast<double>(count);
  Node* ln = logits.node();
  std::vector<int> tv(targets.begin(), targets.end());
  Matrix out(1, 1);
  out(0, 0) = loss;
  return logits.tape().record(std::move(out), {logits},
                              [ln, probs = std::move(probs), tv, count](const Matrix& g) {
                                Matrix d = probs;
                                for (Index r = 0; r < d.rows(); ++r) {
                                  const int t = tv[static_cast<std::size_t>(r)];
                                  if (t < 0) {
                                    d.row(r).setZero();
                                  } else {
                                    d(r, t) -= 1.0;
                                  }
                                }
                                ln->accumulate_expr(d * (g(0, 0) / double(count)));
                              });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  Node* an = a.node();
  return a.tape().record(std::move(out), {a}, [an](const Matrix& g) {
    an->accumulate_expr(Matrix::Constant(an->value.rows(), an->value.cols(), g(0, 0)));
  });
}

Var half_squared_norm(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = 0.5 * a.value().squaredNorm();
  Node* an = a.node();
  return a.tape().record(std::move(out), {a},
                         [an](const Matrix& g) { an->accumulate_expr(an->value * g(0, 0)); });
}

} // namespace vica::ag
