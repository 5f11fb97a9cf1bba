// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ncd::ad {

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("Var::scalar on " + shape_string(v));
  return v[0];
}

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<NodeId> parents, BackwardFn backward) {
  for (NodeId p : parents) {
    if (p >= nodes_.size()) throw std::out_of_range("Tape::record: parent not on this tape");
  }
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

std::size_t Tape::backward(Var loss) {
  if (&loss.tape() != this) throw std::invalid_argument("Tape::backward: foreign variable");
  const Matrix& out = nodes_[loss.id()].value;
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("Tape::backward: loss must be 1x1, got " + shape_string(out));
  }
  grads_.assign(nodes_.size(), Matrix{});
  grads_[loss.id()] = Matrix(1, 1, 1.0);

  std::size_t visited = 0;
  std::vector<const Matrix*> inputs;
  std::vector<Matrix*> input_grads;
  for (NodeId i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (grads_[i].empty() || !node.backward) continue;
    inputs.clear();
    input_grads.clear();
    for (NodeId p : node.parents) {
      if (grads_[p].empty()) grads_[p] = Matrix(nodes_[p].value.rows(), nodes_[p].value.cols());
      inputs.push_back(&nodes_[p].value);
      input_grads.push_back(&grads_[p]);
    }
    node.backward(grads_[i], node.value, inputs, input_grads);
    ++visited;
  }
  return visited;
}

Matrix Tape::gradient(Var v) const {
  const Matrix& value = nodes_.at(v.id()).value;
  if (v.id() < grads_.size() && !grads_[v.id()].empty()) return grads_[v.id()];
  return Matrix(value.rows(), value.cols());
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
}

namespace {

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands live on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.value()) + " vs " +
                     shape_string(b.value()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Matrix value = ncd::matmul(a.value(), b.value());
  return a.tape().record(std::move(value), {a.id(), b.id()},
                         [](const Matrix& g, const Matrix&, auto in, auto grads) {
                           *grads[0] += ncd::matmul(g, ncd::transpose(*in[1]));
                           *grads[1] += ncd::matmul(ncd::transpose(*in[0]), g);
                         });
}

Var softmax_columns(Var z) {
  const Matrix& zv = z.value();
  Matrix s(zv.rows(), zv.cols());
  for (std::size_t c = 0; c < zv.cols(); ++c) {
    double peak = -INFINITY;
    for (std::size_t r = 0; r < zv.rows(); ++r) peak = std::max(peak, zv(r, c));
    double total = 0.0;
    for (std::size_t r = 0; r < zv.rows(); ++r) {
      s(r, c) = std::exp(zv(r, c) - peak);
      total += s(r, c);
    }
    for (std::size_t r = 0; r < zv.rows(); ++r) s(r, c) /= total;
  }
  return z.tape().record(std::move(s), {z.id()},
                         [](const Matrix& g, const Matrix& s, auto, auto grads) {
                           Matrix& gz = *grads[0];
                           for (std::size_t c = 0; c < s.cols(); ++c) {
                             double dot = 0.0;
                             for (std::size_t r = 0; r < s.rows(); ++r) dot += g(r, c) * s(r, c);
                             for (std::size_t r = 0; r < s.rows(); ++r)
                               gz(r, c) += s(r, c) * (g(r, c) - dot);
                           }
                         });
}

Var log(Var x) {
  Matrix value = x.value();
  for (double& v : value.data()) v = std::log(std::max(v, kLogClamp));
  return x.tape().record(std::move(value), {x.id()},
                         [](const Matrix& g, const Matrix&, auto in, auto grads) {
                           const Matrix& xv = *in[0];
                           Matrix& gx = *grads[0];
                           for (std::size_t i = 0; i < xv.size(); ++i) {
                             if (xv[i] > kLogClamp) gx[i] += g[i] / xv[i];
                           }
                         });
}

Var relu(Var x) {
  Matrix value = x.value();
  for (double& v : value.data()) v = std::max(v, 0.0);
  return x.tape().record(std::move(value), {x.id()},
                         [](const Matrix& g, const Matrix&, auto in, auto grads) {
                           const Matrix& xv = *in[0];
                           Matrix& gx = *grads[0];
                           for (std::size_t i = 0; i < xv.size(); ++i) {
                             if (xv[i] > 0.0) gx[i] += g[i];
                           }
                         });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  return a.tape().record(a.value() + b.value(), {a.id(), b.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) {
                           *grads[0] += g;
                           *grads[1] += g;
                         });
}

Var subtract(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "subtract");
  return a.tape().record(a.value() - b.value(), {a.id(), b.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) {
                           *grads[0] += g;
                           *grads[1] -= g;
                         });
}

Var scale(Var a, double s) {
  return a.tape().record(a.value() * s, {a.id()},
                         [s](const Matrix& g, const Matrix&, auto, auto grads) {
                           Matrix& ga = *grads[0];
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
                         });
}

Var add_constant(Var a, double c) {
  Matrix value = a.value();
  for (double& v : value.data()) v += c;
  return a.tape().record(std::move(value), {a.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) { *grads[0] += g; });
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "hadamard");
  return a.tape().record(ncd::hadamard(a.value(), b.value()), {a.id(), b.id()},
                         [](const Matrix& g, const Matrix&, auto in, auto grads) {
                           Matrix& ga = *grads[0];
                           Matrix& gb = *grads[1];
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             ga[i] += g[i] * (*in[1])[i];
                             gb[i] += g[i] * (*in[0])[i];
                           }
                         });
}

Var sum(Var a) {
  return a.tape().record(Matrix(1, 1, ncd::sum(a.value())), {a.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) {
                           for (double& v : grads[0]->data()) v += g[0];
                         });
}

Var mean_columns(Var a) {
  const Matrix& av = a.value();
  if (av.cols() == 0) throw ShapeError("mean_columns: no columns");
  Matrix m(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) s += av(r, c);
    m(r, 0) = s / static_cast<double>(av.cols());
  }
  return a.tape().record(std::move(m), {a.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) {
                           Matrix& ga = *grads[0];
                           const double inv = 1.0 / static_cast<double>(ga.cols());
                           for (std::size_t r = 0; r < ga.rows(); ++r)
                             for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(r, 0) * inv;
                         });
}

Var trace(Var a) {
  return a.tape().record(Matrix(1, 1, ncd::trace(a.value())), {a.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) {
                           Matrix& ga = *grads[0];
                           for (std::size_t i = 0; i < ga.rows(); ++i) ga(i, i) += g[0];
                         });
}

Var frobenius_norm(Var a, double smoothing) {
  double sq = 0.0;
  for (double v : a.value().data()) sq += v * v;
  const double norm = std::sqrt(sq + smoothing * smoothing);
  return a.tape().record(Matrix(1, 1, norm), {a.id()},
                         [](const Matrix& g, const Matrix& out, auto in, auto grads) {
                           if (out[0] <= 0.0) return;
                           const double k = g[0] / out[0];
                           Matrix& ga = *grads[0];
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += k * (*in[0])[i];
                         });
}

Var transpose(Var a) {
  return a.tape().record(ncd::transpose(a.value()), {a.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) {
                           *grads[0] += ncd::transpose(g);
                         });
}

Var broadcast_columns(Var v, std::size_t n) {
  const Matrix& vv = v.value();
  if (vv.cols() != 1) throw ShapeError("broadcast_columns: expected a column, got " + shape_string(vv));
  Matrix out(vv.rows(), n);
  for (std::size_t r = 0; r < vv.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = vv(r, 0);
  return v.tape().record(std::move(out), {v.id()},
                         [](const Matrix& g, const Matrix&, auto, auto grads) {
                           Matrix& gv = *grads[0];
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                             double s = 0.0;
                             for (std::size_t c = 0; c < g.cols(); ++c) s += g(r, c);
                             gv(r, 0) += s;
                           }
                         });
}

Var concat_columns(Var a, Var b) {
  require_same_tape(a, b);
  return a.tape().record(hconcat(a.value(), b.value()), {a.id(), b.id()},
                         [](const Matrix& g, const Matrix&, auto in, auto grads) {
                           const std::size_t split = in[0]->cols();
                           Matrix& ga = *grads[0];
                           Matrix& gb = *grads[1];
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                             for (std::size_t c = 0; c < split; ++c) ga(r, c) += g(r, c);
                             for (std::size_t c = split; c < g.cols(); ++c) gb(r, c - split) += g(r, c);
                           }
                         });
}

Var slice_columns(Var a, std::size_t begin, std::size_t count) {
  const Matrix& av = a.value();
  if (begin + count > av.cols()) {
    throw ShapeError("slice_columns: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_string(av));
  }
  Matrix out(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = av(r, begin + c);
  return a.tape().record(std::move(out), {a.id()},
                         [begin](const Matrix& g, const Matrix&, auto, auto grads) {
                           Matrix& ga = *grads[0];
                           for (std::size_t r = 0; r < g.rows(); ++r)
                             for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
                         });
}

}  // namespace ncd::ad
