#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gapseg/tensor.hpp"

namespace gapseg::nn {

// Named trainable tensor together with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value)
      : name(std::move(name)), value(std::move(value)), grad(this->value.shape()) {}

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// produced it and only until that tape is reset.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Records operations as they are evaluated and replays them in reverse to
// compute gradients. Node ids are assigned in evaluation order, so reverse id
// order is a valid reverse topological order.
//
// A tape is single-threaded. When constructed with record_gradients = false
// it evaluates values only, which is what inference uses.
class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }
  void reset();

  Var constant(Tensor value);
  // Leaf that reads t in place and never receives a gradient. t must outlive
  // the tape's current recording.
  Var constant_ref(const Tensor& t);
  // Leaf that reads p.value in place; backward accumulates into p.grad.
  Var parameter(Parameter& p);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() target with respect to v. Empty tensor
  // when no gradient reached v.
  const Tensor& grad(Var v) const;

  Var matmul(Var a, Var b);
  // x·wᵀ (+ bias): x is m×in, w is out×in, bias has length out.
  Var linear(Var x, Var w, std::optional<Var> bias = std::nullopt);
  // Exact-shape addition, or a matrix plus a row vector broadcast over rows.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var concat(Var a, Var b, std::size_t axis);
  // Half-open range [begin, end) along axis of a vector or matrix.
  Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
  // Stacks 1×k (or length-k) rows into an n×k matrix.
  Var stack_rows(std::span<const Var> rows);
  Var gather_rows(Var table, std::span<const std::size_t> indices);
  // Inverted dropout; identity when p == 0.
  Var dropout(Var a, double p, std::mt19937_64& rng);
  Var sum(Var a);
  // out[r][l] = left[r]ᵀ · weight[l] · right[r] for a weight of shape L×d1×d2.
  Var bilinear_rows(Var left, Var weight, Var right);
  // Mean over rows of softmax cross-entropy against gold column indices.
  Var softmax_cross_entropy(Var scores, std::span<const std::size_t> gold);

  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    const Tensor* external_value = nullptr;
    Tensor grad;
    Tensor* external_grad = nullptr;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  const Tensor& val(std::size_t id) const;
  Tensor& grad_ref(std::size_t id);
  bool needs(Var v) const { return node(v).requires_grad; }

  Var push(Tensor value, bool requires_grad);
  void set_backward(Var out, std::function<void(Tape&)> fn);

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace gapseg::nn
