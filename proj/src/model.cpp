// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/model.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ncdlab/csv.hpp"
#include "ncdlab/rng.hpp"

namespace ncd {

namespace {

constexpr const char* kCheckpointMagic = "ncdlab-checkpoint";
constexpr int kCheckpointVersion = 1;
constexpr std::uint64_t kInitStream = 7;

DenseLayer glorot_layer(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  DenseLayer layer{Matrix(out, in), Matrix(out, 1)};
  for (double& w : layer.weight.data()) w = uniform(rng, -limit, limit);
  return layer;
}

ad::Var affine(ad::Var weight, ad::Var bias, ad::Var x) {
  return ad::add(ad::matmul(weight, x), ad::broadcast_columns(bias, x.cols()));
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << "matrix " << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << csv::format_real(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols) {
  std::string tag;
  std::size_t r = 0;
  std::size_t c = 0;
  if (!(in >> tag >> r >> c) || tag != "matrix") throw std::runtime_error("checkpoint: expected matrix header");
  if (r != rows || c != cols) {
    throw std::runtime_error("checkpoint: matrix is " + std::to_string(r) + "x" + std::to_string(c) +
                             ", shape line implies " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  std::string token;
  for (double& v : m.data()) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated matrix");
    v = csv::parse_real(token, "checkpoint value");
  }
  return m;
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

MlpModel init_model(const MlpShape& shape, std::uint64_t seed) {
  if (shape.input_dim == 0 || shape.embedding_dim == 0 || shape.class_count == 0) {
    throw std::invalid_argument("init_model: widths must be positive");
  }
  Rng rng = make_rng(seed, kInitStream);
  MlpModel model{shape, {}};
  std::size_t in = shape.input_dim;
  for (std::size_t width : shape.hidden) {
    if (width == 0) throw std::invalid_argument("init_model: hidden width must be positive");
    model.layers.push_back(glorot_layer(in, width, rng));
    in = width;
  }
  model.layers.push_back(glorot_layer(in, shape.embedding_dim, rng));
  model.layers.push_back(glorot_layer(shape.embedding_dim, shape.class_count, rng));
  return model;
}

ParameterBinding bind_parameters(const MlpModel& model, ad::Tape& tape) {
  ParameterBinding binding;
  for (const auto& layer : model.layers) {
    binding.params.push_back(tape.leaf(layer.weight));
    binding.params.push_back(tape.leaf(layer.bias));
  }
  return binding;
}

ForwardResult forward(const MlpModel& model, const ParameterBinding& binding, ad::Var inputs) {
  if (inputs.rows() != model.shape.input_dim) {
    throw ShapeError("forward: input is " + shape_string(inputs.value()) + ", model expects " +
                     std::to_string(model.shape.input_dim) + " rows");
  }
  const std::size_t n_layers = model.layers.size();
  ad::Var h = inputs;
  for (std::size_t i = 0; i + 2 < n_layers; ++i) {
    h = ad::relu(affine(binding.params[2 * i], binding.params[2 * i + 1], h));
  }
  const std::size_t e = n_layers - 2;
  ad::Var z = affine(binding.params[2 * e], binding.params[2 * e + 1], h);
  ad::Var logits = affine(binding.params[2 * e + 2], binding.params[2 * e + 3], z);
  return {ad::softmax_columns(logits), z, logits};
}

Prediction predict(const MlpModel& model, const Matrix& inputs) {
  ad::Tape tape;
  const ParameterBinding binding = bind_parameters(model, tape);
  const ForwardResult r = forward(model, binding, tape.constant(inputs));
  return {r.probabilities.value(), r.embedding.value()};
}

std::vector<Matrix> collect_gradients(const ad::Tape& tape, const ParameterBinding& binding) {
  std::vector<Matrix> grads;
  grads.reserve(binding.params.size());
  for (ad::Var p : binding.params) grads.push_back(tape.gradient(p));
  return grads;
}

void sgd_step(MlpModel& model, const std::vector<Matrix>& gradients, double lr) {
  if (gradients.size() != 2 * model.layers.size()) {
    throw ShapeError("sgd_step: expected " + std::to_string(2 * model.layers.size()) +
                     " gradients, got " + std::to_string(gradients.size()));
  }
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    const DenseLayer& layer = model.layers[i / 2];
    const Matrix& param = i % 2 == 0 ? layer.weight : layer.bias;
    if (!param.same_shape(gradients[i])) {
      throw ShapeError("sgd_step: gradient " + std::to_string(i) + " is " + shape_string(gradients[i]) +
                       ", parameter is " + shape_string(param));
    }
    if (!gradients[i].all_finite()) {
      throw NumericalError("sgd_step: non-finite gradient for parameter " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    DenseLayer& layer = model.layers[i / 2];
    Matrix& param = i % 2 == 0 ? layer.weight : layer.bias;
    for (std::size_t k = 0; k < param.size(); ++k) param[k] -= lr * gradients[i][k];
  }
}

void save_checkpoint(const MlpModel& model, std::ostream& out) {
  const MlpShape& s = model.shape;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "shape " << s.input_dim << ' ' << s.embedding_dim << ' ' << s.class_count << ' '
      << s.hidden.size();
  for (std::size_t h : s.hidden) out << ' ' << h;
  out << '\n';
  for (const auto& layer : model.layers) {
    write_matrix(out, layer.weight);
    write_matrix(out, layer.bias);
  }
}

MlpModel load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic || version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unrecognized header");
  }
  std::string tag;
  MlpShape shape;
  std::size_t n_hidden = 0;
  if (!(in >> tag >> shape.input_dim >> shape.embedding_dim >> shape.class_count >> n_hidden) ||
      tag != "shape") {
    throw std::runtime_error("checkpoint: malformed shape line");
  }
  shape.hidden.resize(n_hidden);
  for (auto& h : shape.hidden) {
    if (!(in >> h)) throw std::runtime_error("checkpoint: malformed hidden widths");
  }
  MlpModel model{shape, {}};
  std::size_t prev = shape.input_dim;
  std::vector<std::size_t> widths = shape.hidden;
  widths.push_back(shape.embedding_dim);
  widths.push_back(shape.class_count);
  for (std::size_t w : widths) {
    Matrix weight = read_matrix(in, w, prev);
    Matrix bias = read_matrix(in, w, 1);
    model.layers.push_back({std::move(weight), std::move(bias)});
    prev = w;
  }
  return model;
}

}  // namespace ncd
