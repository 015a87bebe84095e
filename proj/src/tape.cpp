#include "gapseg/tape.hpp"

#include <algorithm>
#include <cmath>

#include "gapseg/error.hpp"

namespace gapseg::nn {

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                   shape_string(b.shape()));
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Tape::reset() { nodes_.clear(); }

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return nodes_[v.id];
}

const Tensor& Tape::val(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external_value ? *n.external_value : n.value;
}

const Tensor& Tape::value(Var v) const {
  node(v);
  return val(v.id);
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.external_grad ? *n.external_grad : n.grad;
}

Tensor& Tape::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  Tensor& g = n.external_grad ? *n.external_grad : n.grad;
  if (g.empty()) g = Tensor(val(id).shape());
  return g;
}

Var Tape::push(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Tape::set_backward(Var out, std::function<void(Tape&)> fn) {
  if (nodes_[out.id].requires_grad) nodes_[out.id].backward = std::move(fn);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false); }

Var Tape::constant_ref(const Tensor& t) {
  Node n;
  n.external_value = &t;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.external_value = &p.value;
  n.external_grad = &p.grad;
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_matrix("matmul", A);
  require_matrix("matmul", B);
  if (A.dim(1) != B.dim(0)) shape_mismatch("matmul", A, B);
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor C({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A.at(i, p);
      if (aip == 0.0) continue;
      auto brow = B.row(p);
      auto crow = C.row(i);
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  Var out = push(std::move(C), needs(a) || needs(b));
  set_backward(out, [a, b, out, m, k, n](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    const Tensor& A = t.val(a.id);
    const Tensor& B = t.val(b.id);
    if (t.needs(a)) {
      Tensor& GA = t.grad_ref(a.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G.at(i, j) * B.at(p, j);
          GA.at(i, p) += s;
        }
    }
    if (t.needs(b)) {
      Tensor& GB = t.grad_ref(b.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.at(i, p);
          for (std::size_t j = 0; j < n; ++j) GB.at(p, j) += aip * G.at(i, j);
        }
    }
  });
  return out;
}

Var Tape::linear(Var x, Var w, std::optional<Var> bias) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  require_matrix("linear", X);
  require_matrix("linear", W);
  if (X.dim(1) != W.dim(1)) shape_mismatch("linear", X, W);
  const std::size_t m = X.dim(0), in = X.dim(1), outd = W.dim(0);
  if (bias) {
    const Tensor& B = value(*bias);
    if (B.rank() != 1 || B.dim(0) != outd) shape_mismatch("linear bias", W, B);
  }
  Tensor Y({m, outd});
  for (std::size_t r = 0; r < m; ++r) {
    auto xr = X.row(r);
    for (std::size_t o = 0; o < outd; ++o) {
      auto wo = W.row(o);
      double s = bias ? val(bias->id)[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) s += xr[i] * wo[i];
      Y.at(r, o) = s;
    }
  }
  const bool req = needs(x) || needs(w) || (bias && needs(*bias));
  Var out = push(std::move(Y), req);
  set_backward(out, [x, w, bias, out, m, in, outd](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    const Tensor& X = t.val(x.id);
    const Tensor& W = t.val(w.id);
    Tensor* GX = t.needs(x) ? &t.grad_ref(x.id) : nullptr;
    Tensor* GW = t.needs(w) ? &t.grad_ref(w.id) : nullptr;
    Tensor* GB = (bias && t.needs(*bias)) ? &t.grad_ref(bias->id) : nullptr;
    for (std::size_t r = 0; r < m; ++r) {
      auto xr = X.row(r);
      for (std::size_t o = 0; o < outd; ++o) {
        const double g = G.at(r, o);
        if (g == 0.0) continue;
        if (GB) (*GB)[o] += g;
        if (GX) {
          auto wo = W.row(o);
          auto gx = GX->row(r);
          for (std::size_t i = 0; i < in; ++i) gx[i] += g * wo[i];
        }
        if (GW) {
          auto gw = GW->row(o);
          for (std::size_t i = 0; i < in; ++i) gw[i] += g * xr[i];
        }
      }
    }
  });
  return out;
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.shape() == B.shape()) {
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
    Var out = push(std::move(C), needs(a) || needs(b));
    set_backward(out, [a, b, out](Tape& t) {
      const Tensor& G = t.grad_ref(out.id);
      for (Var v : {a, b}) {
        if (!t.needs(v)) continue;
        Tensor& GV = t.grad_ref(v.id);
        for (std::size_t i = 0; i < G.size(); ++i) GV[i] += G[i];
      }
    });
    return out;
  }
  if (A.rank() == 2 && B.rank() == 1 && B.dim(0) == A.dim(1)) {
    Tensor C = A;
    const std::size_t rows = A.dim(0), cols = A.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) C.at(r, c) += B[c];
    Var out = push(std::move(C), needs(a) || needs(b));
    set_backward(out, [a, b, out, rows, cols](Tape& t) {
      const Tensor& G = t.grad_ref(out.id);
      if (t.needs(a)) {
        Tensor& GA = t.grad_ref(a.id);
        for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i];
      }
      if (t.needs(b)) {
        Tensor& GB = t.grad_ref(b.id);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) GB[c] += G.at(r, c);
      }
    });
    return out;
  }
  shape_mismatch("add", A, B);
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.shape() != B.shape()) shape_mismatch("mul", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  Var out = push(std::move(C), needs(a) || needs(b));
  set_backward(out, [a, b, out](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    if (t.needs(a)) {
      Tensor& GA = t.grad_ref(a.id);
      const Tensor& B = t.val(b.id);
      for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * B[i];
    }
    if (t.needs(b)) {
      Tensor& GB = t.grad_ref(b.id);
      const Tensor& A = t.val(a.id);
      for (std::size_t i = 0; i < G.size(); ++i) GB[i] += G[i] * A[i];
    }
  });
  return out;
}

Var Tape::scale(Var a, double factor) {
  Tensor C = value(a);
  for (auto& v : C.data()) v *= factor;
  Var out = push(std::move(C), needs(a));
  set_backward(out, [a, out, factor](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    Tensor& GA = t.grad_ref(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) GA[i] += factor * G[i];
  });
  return out;
}

Var Tape::tanh(Var a) {
  Tensor C = value(a);
  for (auto& v : C.data()) v = std::tanh(v);
  Var out = push(std::move(C), needs(a));
  set_backward(out, [a, out](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    const Tensor& Y = t.val(out.id);
    Tensor& GA = t.grad_ref(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * (1.0 - Y[i] * Y[i]);
  });
  return out;
}

Var Tape::sigmoid(Var a) {
  Tensor C = value(a);
  for (auto& v : C.data()) v = sigmoid_value(v);
  Var out = push(std::move(C), needs(a));
  set_backward(out, [a, out](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    const Tensor& Y = t.val(out.id);
    Tensor& GA = t.grad_ref(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * Y[i] * (1.0 - Y[i]);
  });
  return out;
}

Var Tape::concat(Var a, Var b, std::size_t axis) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != B.rank()) shape_mismatch("concat", A, B);
  if (axis >= A.rank() || A.rank() > 2) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                     shape_string(A.shape()));
  }
  for (std::size_t d = 0; d < A.rank(); ++d) {
    if (d != axis && A.dim(d) != B.dim(d)) shape_mismatch("concat", A, B);
  }
  Shape shape = A.shape();
  shape[axis] += B.dim(axis);
  Tensor C(shape);
  // Along axis 0 (or for vectors) the payloads are contiguous blocks; along
  // axis 1 each output row is a row of A followed by a row of B.
  const bool rowwise = A.rank() == 2 && axis == 1;
  if (!rowwise) {
    std::copy(A.data().begin(), A.data().end(), C.data().begin());
    std::copy(B.data().begin(), B.data().end(), C.data().begin() + A.size());
  } else {
    for (std::size_t r = 0; r < A.dim(0); ++r) {
      auto crow = C.row(r);
      std::copy(A.row(r).begin(), A.row(r).end(), crow.begin());
      std::copy(B.row(r).begin(), B.row(r).end(), crow.begin() + A.dim(1));
    }
  }
  Var out = push(std::move(C), needs(a) || needs(b));
  set_backward(out, [a, b, out, rowwise](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    const std::size_t asize = t.val(a.id).size();
    if (!rowwise) {
      if (t.needs(a)) {
        Tensor& GA = t.grad_ref(a.id);
        for (std::size_t i = 0; i < GA.size(); ++i) GA[i] += G[i];
      }
      if (t.needs(b)) {
        Tensor& GB = t.grad_ref(b.id);
        for (std::size_t i = 0; i < GB.size(); ++i) GB[i] += G[asize + i];
      }
      return;
    }
    const std::size_t acols = t.val(a.id).dim(1);
    const std::size_t bcols = t.val(b.id).dim(1);
    for (std::size_t r = 0; r < G.dim(0); ++r) {
      auto grow = G.row(r);
      if (t.needs(a)) {
        auto ga = t.grad_ref(a.id).row(r);
        for (std::size_t c = 0; c < acols; ++c) ga[c] += grow[c];
      }
      if (t.needs(b)) {
        auto gb = t.grad_ref(b.id).row(r);
        for (std::size_t c = 0; c < bcols; ++c) gb[c] += grow[acols + c];
      }
    }
  });
  return out;
}

Var Tape::slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& A = value(a);
  if (A.rank() > 2 || axis >= A.rank()) {
    throw ShapeError("slice: axis " + std::to_string(axis) + " out of range for " +
                     shape_string(A.shape()));
  }
  if (begin >= end || end > A.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + shape_string(A.shape()));
  }
  Shape shape = A.shape();
  shape[axis] = end - begin;
  Tensor C(shape);
  const std::size_t rows = A.rows(), cols = A.cols();
  const bool by_row = A.rank() == 2 && axis == 0;
  const std::size_t r0 = by_row ? begin : 0, r1 = by_row ? end : rows;
  const std::size_t c0 = by_row ? 0 : begin, c1 = by_row ? cols : end;
  const std::size_t width = c1 - c0;
  for (std::size_t r = r0; r < r1; ++r)
    for (std::size_t c = c0; c < c1; ++c) C[(r - r0) * width + (c - c0)] = A[r * cols + c];
  Var out = push(std::move(C), needs(a));
  set_backward(out, [a, out, r0, r1, c0, c1, cols, width](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    Tensor& GA = t.grad_ref(a.id);
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c) GA[r * cols + c] += G[(r - r0) * width + (c - c0)];
  });
  return out;
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t width = value(rows[0]).size();
  Tensor C({rows.size(), width});
  bool req = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& R = value(rows[r]);
    if (R.size() != width || R.rows() != 1) shape_mismatch("stack_rows", value(rows[0]), R);
    std::copy(R.data().begin(), R.data().end(), C.row(r).begin());
    req = req || needs(rows[r]);
  }
  Var out = push(std::move(C), req);
  set_backward(out, [ids = std::vector<Var>(rows.begin(), rows.end()), out, width](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!t.needs(ids[r])) continue;
      Tensor& GR = t.grad_ref(ids[r].id);
      auto grow = G.row(r);
      for (std::size_t c = 0; c < width; ++c) GR[c] += grow[c];
    }
  });
  return out;
}

Var Tape::gather_rows(Var table, std::span<const std::size_t> indices) {
  const Tensor& T = value(table);
  require_matrix("gather_rows", T);
  if (indices.empty()) throw ShapeError("gather_rows: no indices");
  const std::size_t cols = T.dim(1);
  Tensor C({indices.size(), cols});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= T.dim(0)) {
      throw ContractError("gather_rows: index " + std::to_string(indices[r]) + " out of range for " +
                          std::to_string(T.dim(0)) + " rows");
    }
    auto src = T.row(indices[r]);
    std::copy(src.begin(), src.end(), C.row(r).begin());
  }
  Var out = push(std::move(C), needs(table));
  set_backward(out, [table, out, idx = std::vector<std::size_t>(indices.begin(), indices.end()),
                     cols](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    Tensor& GT = t.grad_ref(table.id);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = GT.row(idx[r]);
      auto src = G.row(r);
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
  return out;
}

Var Tape::dropout(Var a, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout probability must lie in [0, 1)");
  if (p == 0.0) return a;
  const Tensor& A = value(a);
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(A.shape());
  for (auto& m : mask.data()) m = uniform01(rng) < p ? 0.0 : keep_scale;
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= mask[i];
  Var out = push(std::move(C), needs(a));
  set_backward(out, [a, out, mask = std::move(mask)](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    Tensor& GA = t.grad_ref(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * mask[i];
  });
  return out;
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).data()) s += v;
  Var out = push(Tensor::scalar(s), needs(a));
  set_backward(out, [a, out](Tape& t) {
    const double g = t.grad_ref(out.id)[0];
    for (auto& v : t.grad_ref(a.id).data()) v += g;
  });
  return out;
}

Var Tape::bilinear_rows(Var left, Var weight, Var right) {
  const Tensor& A = value(left);
  const Tensor& W = value(weight);
  const Tensor& B = value(right);
  require_matrix("bilinear_rows", A);
  require_matrix("bilinear_rows", B);
  if (W.rank() != 3) {
    throw ShapeError("bilinear_rows: weight must be L×d1×d2, got " + shape_string(W.shape()));
  }
  const std::size_t m = A.dim(0), d1 = A.dim(1), d2 = B.dim(1), labels = W.dim(0);
  if (B.dim(0) != m || W.dim(1) != d1 || W.dim(2) != d2) shape_mismatch("bilinear_rows", A, W);
  Tensor C({m, labels});
  for (std::size_t r = 0; r < m; ++r) {
    auto ar = A.row(r);
    auto br = B.row(r);
    for (std::size_t l = 0; l < labels; ++l) {
      const double* wl = W.data().data() + l * d1 * d2;
      double s = 0.0;
      for (std::size_t i = 0; i < d1; ++i) {
        if (ar[i] == 0.0) continue;
        const double* wrow = wl + i * d2;
        double inner = 0.0;
        for (std::size_t j = 0; j < d2; ++j) inner += wrow[j] * br[j];
        s += ar[i] * inner;
      }
      C.at(r, l) = s;
    }
  }
  Var out = push(std::move(C), needs(left) || needs(weight) || needs(right));
  set_backward(out, [left, weight, right, out, m, d1, d2, labels](Tape& t) {
    const Tensor& G = t.grad_ref(out.id);
    const Tensor& A = t.val(left.id);
    const Tensor& W = t.val(weight.id);
    const Tensor& B = t.val(right.id);
    Tensor* GA = t.needs(left) ? &t.grad_ref(left.id) : nullptr;
    Tensor* GW = t.needs(weight) ? &t.grad_ref(weight.id) : nullptr;
    Tensor* GB = t.needs(right) ? &t.grad_ref(right.id) : nullptr;
    for (std::size_t r = 0; r < m; ++r) {
      auto ar = A.row(r);
      auto br = B.row(r);
      for (std::size_t l = 0; l < labels; ++l) {
        const double g = G.at(r, l);
        if (g == 0.0) continue;
        const double* wl = W.data().data() + l * d1 * d2;
        double* gwl = GW ? GW->data().data() + l * d1 * d2 : nullptr;
        for (std::size_t i = 0; i < d1; ++i) {
          const double* wrow = wl + i * d2;
          if (GA) {
            double inner = 0.0;
            for (std::size_t j = 0; j < d2; ++j) inner += wrow[j] * br[j];
            GA->at(r, i) += g * inner;
          }
          const double ga = g * ar[i];
          if (ga == 0.0) continue;
          if (GB) {
            auto gb = GB->row(r);
            for (std::size_t j = 0; j < d2; ++j) gb[j] += ga * wrow[j];
          }
          if (gwl) {
            double* gwrow = gwl + i * d2;
            for (std::size_t j = 0; j < d2; ++j) gwrow[j] += ga * br[j];
          }
        }
      }
    }
  });
  return out;
}

Var Tape::softmax_cross_entropy(Var scores, std::span<const std::size_t> gold) {
  const Tensor& S = value(scores);
  require_matrix("softmax_cross_entropy", S);
  const std::size_t m = S.dim(0), labels = S.dim(1);
  if (gold.size() != m) {
    throw ContractError("softmax_cross_entropy: " + std::to_string(m) + " score rows but " +
                        std::to_string(gold.size()) + " gold labels");
  }
  Tensor probs({m, labels});
  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (gold[r] >= labels) throw ContractError("softmax_cross_entropy: gold label out of range");
    auto s = S.row(r);
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (std::size_t l = 0; l < labels; ++l) z += std::exp(s[l] - top);
    const double log_z = top + std::log(z);
    loss += log_z - s[gold[r]];
    auto p = probs.row(r);
    for (std::size_t l = 0; l < labels; ++l) p[l] = std::exp(s[l] - log_z);
  }
  loss /= static_cast<double>(m);
  Var out = push(Tensor::scalar(loss), needs(scores));
  set_backward(out, [scores, out, probs = std::move(probs),
                     gold_ids = std::vector<std::size_t>(gold.begin(), gold.end()), m,
                     labels](Tape& t) {
    const double g = t.grad_ref(out.id)[0] / static_cast<double>(m);
    Tensor& GS = t.grad_ref(scores.id);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t l = 0; l < labels; ++l)
        GS.at(r, l) += g * (probs.at(r, l) - (l == gold_ids[r] ? 1.0 : 0.0));
  });
  return out;
}

void Tape::backward(Var loss) {
  const Tensor& L = value(loss);
  if (L.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_string(L.shape()));
  }
  if (!record_) throw ContractError("backward: tape was created without gradient recording");
  grad_ref(loss.id)[0] += 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward) continue;
    if (n.grad.empty()) continue;
    n.backward(*this);
  }
}

}  // namespace gapseg::nn
