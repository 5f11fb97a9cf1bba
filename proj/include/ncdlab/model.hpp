// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ncdlab/autodiff.hpp"
#include "ncdlab/matrix.hpp"

namespace ncd {

struct MlpShape {
  std::size_t input_dim = 8;
  /// Widths of the rectified encoder layers.
  std::vector<std::size_t> hidden = {32};
  std::size_t embedding_dim = 16;
  std::size_t class_count = 6;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Matrix bias;    // out x 1

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Encoder layers (ReLU) -> linear embedding -> linear head + column softmax.
struct MlpModel {
  MlpShape shape;
  /// Encoder layers, then the embedding layer, then the head.
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Glorot-uniform weights and zero biases, deterministic per seed.
MlpModel init_model(const MlpShape& shape, std::uint64_t seed);

/// Parameters registered as leaves of one tape, in declaration order
/// (weight, bias per layer).
struct ParameterBinding {
  std::vector<ad::Var> params;
};

ParameterBinding bind_parameters(const MlpModel& model, ad::Tape& tape);

struct ForwardResult {
  ad::Var probabilities;  // K x B, column-stochastic
  ad::Var embedding;      // e x B
  ad::Var logits;         // K x B, pre-softmax
};

/// Throws ShapeError when the input height differs from shape.input_dim.
ForwardResult forward(const MlpModel& model, const ParameterBinding& binding, ad::Var inputs);

struct Prediction {
  Matrix probabilities;
  Matrix embedding;
};

/// Forward pass on a private tape.
Prediction predict(const MlpModel& model, const Matrix& inputs);

/// Gradients of the last backward() for every bound parameter, in binding order.
std::vector<Matrix> collect_gradients(const ad::Tape& tape, const ParameterBinding& binding);

/// theta <- theta - lr * grad. Rejects (NumericalError, model untouched) any
/// non-finite gradient; throws ShapeError on a shape mismatch.
void sgd_step(MlpModel& model, const std::vector<Matrix>& gradients, double lr);

/// Text checkpoint: shape line, then each parameter matrix in declaration
/// order at 17 significant digits. Loading reproduces the model exactly.
void save_checkpoint(const MlpModel& model, std::ostream& out);
MlpModel load_checkpoint(std::istream& in);

}  // namespace ncd
