#pragma once

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Graph owns every intermediate value of one forward pass. Nodes are
// appended in evaluation order, so walking them backwards is a valid
// topological order for backpropagation. Graphs are single-threaded; use one
// per example and merge gradients through GradBuffer.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "sqlova/matrix.hpp"
#include "sqlova/params.hpp"

namespace sqlova {

class Graph;

struct Var {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;  // value of a 1 x 1 node
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, std::uint32_t self)>;

  /// With track = false no backward closures are recorded (inference).
  explicit Graph(bool track = true) : track_(track) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool tracking() const { return track_; }

  Var constant(Matrix m);
  /// Leaf that receives a gradient but is not a parameter (tests, probes).
  Var variable(Matrix m);
  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(const ParamStore& store, ParamId id);

  const Matrix& value(Var v) const { return node(v.id).get(); }
  const Matrix& value(std::uint32_t id) const { return node(id).get(); }
  bool requires_grad(Var v) const { return node(v.id).requires_grad; }

  /// Gradient of the last backward() w.r.t. v, or nullptr if none reached it.
  const Matrix* grad_of(Var v) const;
  /// Zero-initialised on first access; used by backward closures.
  Matrix& grad(std::uint32_t id);

  /// Backpropagates from a 1 x 1 node.
  void backward(Var out);
  /// Adds parameter-leaf gradients into `buf`.
  void accumulate(GradBuffer& buf) const;

  Var emit(Matrix value, std::span<const Var> parents, Backward back);
  Var emit(Matrix value, std::initializer_list<Var> parents, Backward back) {
    return emit(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(back));
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::int64_t param = -1;
    Backward back;

    const Matrix& get() const { return external ? *external : owned; }
  };

  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  Var push(Node n);

  bool track_;
  std::deque<Node> nodes_;
  std::unordered_map<ParamId, std::uint32_t> param_nodes_;
};

namespace ad {

Var matmul(Var a, Var b);     // a b
Var matmul_nt(Var a, Var b);  // a b^T
/// x [n x in] through packed w [out x (in+1)] whose last column is the bias.
Var affine(Var x, Var w);

Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1 x m row over every row of a
Var add_n(std::span<const Var> terms);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var shift(Var a, double s);  // a + s elementwise

Var tanh(Var a);
Var sigmoid(Var a);
Var gelu(Var a);
Var softmax_rows(Var a);
/// log(max(a, floor)); the gradient is zero where the clamp is active.
Var log_clamped(Var a, double floor);
/// Row-wise layer normalisation; gb is [2 x d] holding gamma then beta.
Var layer_norm(Var x, Var gb, double eps);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var transpose(Var a);
Var repeat_rows(Var row, std::size_t n);
Var gather_rows(Var table, std::span<const int> ids);
Var pick(Var a, std::size_t r, std::size_t c);

/// Unidirectional LSTM over precomputed input projections.
///   xproj [L x 4H] = x W_x^T + b (gate order i, f, g, o)
///   w_h   [4H x H] recurrent weights
///   h0, c0 [1 x H]
/// Returns hidden states [L x H] in input order; `reverse` runs right to left.
Var lstm_sequence(Var xproj, Var w_h, Var h0, Var c0, bool reverse);

}  // namespace ad
}  // namespace sqlova
