// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tape-based reverse-mode differentiation over whole matrices.
//
// Every operation appends one node to a Tape. Nodes are only ever appended,
// so creation order is a topological order and the backward sweep simply
// walks the tape from the loss towards index 0. A tape belongs to a single
// thread; Matrix values it hands out are plain copies.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ncdlab/matrix.hpp"

namespace ncd::ad {

/// Argument floor applied by log(); keeps log-probabilities finite.
inline constexpr double kLogClamp = 1e-12;

using NodeId = std::size_t;

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  NodeId id() const noexcept { return id_; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Convenience for 1x1 values.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Backward rule of one node. `upstream` is d(loss)/d(output); the rule must
/// accumulate (+=) into each entry of `input_grads`, which arrive pre-shaped.
using BackwardFn = std::function<void(const Matrix& upstream, const Matrix& output,
                                      std::span<const Matrix* const> inputs,
                                      std::span<Matrix* const> input_grads)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records an input. Gradients flow into leaves and stop there.
  Var leaf(Matrix value);
  /// Records a value the caller does not intend to differentiate against.
  Var constant(Matrix value) { return leaf(std::move(value)); }
  /// Records the result of an operation on `parents`.
  Var record(Matrix value, std::vector<NodeId> parents, BackwardFn backward);

  /// Runs the reverse sweep from a 1x1 `loss`. Returns the number of nodes
  /// whose backward rule executed.
  std::size_t backward(Var loss);

  /// d(loss)/d(v) from the last backward(); zeros when v has no path to it.
  Matrix gradient(Var v) const;

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Matrix value;
    std::vector<NodeId> parents;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

Var matmul(Var a, Var b);
/// Column-wise softmax with per-column max subtraction.
Var softmax_columns(Var z);
/// Elementwise natural log of max(x, kLogClamp).
Var log(Var x);
Var relu(Var x);
Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var scale(Var a, double s);
Var add_constant(Var a, double c);
Var hadamard(Var a, Var b);
/// Sum of all entries, as 1x1.
Var sum(Var a);
/// K x B -> K x 1 average over columns.
Var mean_columns(Var a);
Var trace(Var a);
/// sqrt(tr(A^T A) + smoothing^2). With smoothing = 0 the gradient at the zero
/// matrix is taken to be zero.
Var frobenius_norm(Var a, double smoothing = 0.0);
Var transpose(Var a);
/// K x 1 -> K x n by repeating the column.
Var broadcast_columns(Var v, std::size_t n);
Var concat_columns(Var a, Var b);
/// Columns [begin, begin + count).
Var slice_columns(Var a, std::size_t begin, std::size_t count);

}  // namespace ncd::ad
