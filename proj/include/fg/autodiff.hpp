// Copyright (c) 2026 The fginfer Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fg/tensor.hpp"

namespace fg {

/// Named flat parameter arrays with gradient slots. std::map keeps iteration
/// order deterministic everywhere (Adam, checkpoints, gradient checks).
struct ParamStore {
  struct Entry {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grads;
  };
  std::map<std::string, Entry> entries;

  Entry& add(const std::string& name, std::vector<int> shape) {
    auto n = std::size_t(DenseTensor::size_of(shape));
    auto [it, inserted] = entries.emplace(name, Entry{std::move(shape), {}, {}});
    if (!inserted) throw std::invalid_argument("ParamStore: duplicate name " + name);
    it->second.values.assign(n, 0.0);
    it->second.grads.assign(n, 0.0);
    return it->second;
  }

  Entry& at(const std::string& name) {
    auto it = entries.find(name);
    if (it == entries.end()) throw std::out_of_range("ParamStore: unknown name " + name);
    return it->second;
  }
  const Entry& at(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw std::out_of_range("ParamStore: unknown name " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return entries.count(name) != 0; }

  void zero_grads() {
    for (auto& [name, e] : entries) std::fill(e.grads.begin(), e.grads.end(), 0.0);
  }
  void scale_grads(double c) {
    for (auto& [name, e] : entries)
      for (double& x : e.grads) x *= c;
  }
  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries) n += e.values.size();
    return n;
  }
};

/// Handle to one tape node.
struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over DenseTensor-valued nodes. Nodes are created in
/// topological order by construction; backward() walks them once in reverse.
/// Param nodes accumulate their gradients into the bound ParamStore entry,
/// so repeated backward calls over different tapes sum gradients (batching).
class Tape {
  enum class Op {
    constant, param,
    add, sub, mul, add_n, affine,
    badd_scalar, axis_add,
    matmul, matvec, add_row_vec,
    concat, slice, stack_cols, stack_rows, row, segment_sum_rows,
    sigmoid, tanh_, relu, leaky_relu, log_, abs_, exp_,
    softmax, softmax_rows, graph_norm_rows,
    lse_except, max_except, lse_all, sum_reduce,
    tensor_sum_, reshape,
    ce_logits_rows,
  };

  struct Node {
    Op op;
    std::vector<int> inputs;
    DenseTensor value;
    double d0 = 0.0, d1 = 0.0;
    int i0 = 0;
    std::vector<int> aux;          // argmax indices, segment tables
    std::string param_name;        // for Op::param
    DenseTensor aux_tensor;        // e.g. CE targets, graph-norm stats
  };

 public:
  const DenseTensor& value(Value v) const { return nodes_[std::size_t(v.id)].value; }
  double scalar(Value v) const { return value(v).scalar_value(); }
  std::size_t num_nodes() const { return nodes_.size(); }

  /// Hash over every kink decision (signs at relu/leaky/abs, argmax picks)
  /// taken during the forward pass. Finite-difference checks compare hashes
  /// of the two perturbed evaluations and skip coordinates that cross kinks.
  std::uint64_t kink_signature() const { return kink_hash_; }

  Value constant(DenseTensor t) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(t);
    return push(std::move(n));
  }
  Value constant_scalar(double x) { return constant(DenseTensor::scalar(x)); }
  Value constant_vector(std::vector<double> v) { return constant(DenseTensor::vector(std::move(v))); }

  Value param(ParamStore& store, const std::string& name) {
    if (store_ == nullptr) store_ = &store;
    else if (store_ != &store)
      throw std::invalid_argument("Tape: one ParamStore per tape");
    auto& e = store.at(name);
    Node n;
    n.op = Op::param;
    n.param_name = name;
    n.value = DenseTensor(e.shape, e.values);
    return push(std::move(n));
  }

  Value add(Value a, Value b) { return binary(Op::add, a, b); }
  Value sub(Value a, Value b) { return binary(Op::sub, a, b); }
  Value mul(Value a, Value b) { return binary(Op::mul, a, b); }

  Value add_n(const std::vector<Value>& xs) {
    if (xs.empty()) throw std::invalid_argument("add_n: empty list");
    if (xs.size() == 1) return xs[0];
    Node n;
    n.op = Op::add_n;
    n.value = value(xs[0]);
    for (std::size_t k = 1; k < xs.size(); ++k) {
      const auto& t = value(xs[k]);
      if (!same_shape(n.value, t)) throw std::invalid_argument("add_n: shape mismatch");
      for (std::size_t f = 0; f < t.data.size(); ++f) n.value.data[f] += t.data[f];
    }
    for (Value v : xs) n.inputs.push_back(v.id);
    return push(std::move(n));
  }

  Value scale(Value a, double c) { return affine(a, c, 0.0); }
  Value neg(Value a) { return affine(a, -1.0, 0.0); }

  Value affine(Value a, double mul_c, double add_c) {
    Node n;
    n.op = Op::affine;
    n.inputs = {a.id};
    n.d0 = mul_c;
    n.d1 = add_c;
    n.value = value(a);
    for (double& x : n.value.data) x = mul_c * x + add_c;
    return push(std::move(n));
  }

  /// t + sign * s (s rank 0, broadcast over t).
  Value badd_scalar(Value t, Value s, double sign) {
    if (!value(s).is_scalar()) throw std::invalid_argument("badd_scalar: s must be rank 0");
    Node n;
    n.op = Op::badd_scalar;
    n.inputs = {t.id, s.id};
    n.d0 = sign;
    n.value = value(t);
    double sv = sign * value(s).scalar_value();
    for (double& x : n.value.data) x += sv;
    return push(std::move(n));
  }

  /// t + sign * v broadcast along `axis` of t.
  Value axis_add(Value t, Value v, int axis, double sign = 1.0) {
    const auto& tv = value(t);
    const auto& vv = value(v);
    if (axis < 0 || axis >= tv.rank()) throw std::invalid_argument("axis_add: bad axis");
    if (vv.rank() != 1 || vv.shape[0] != tv.shape[std::size_t(axis)])
      throw std::invalid_argument("axis_add: vector length mismatch");
    Node n;
    n.op = Op::axis_add;
    n.inputs = {t.id, v.id};
    n.i0 = axis;
    n.d0 = sign;
    n.value = tv;
    const std::int64_t stride = tv.strides()[std::size_t(axis)];
    const int card = tv.shape[std::size_t(axis)];
    for (std::int64_t f = 0; f < n.value.size(); ++f)
      n.value.data[std::size_t(f)] += sign * vv.data[std::size_t((f / stride) % card)];
    return push(std::move(n));
  }

  /// [r,k] x [k,c] -> [r,c].
  Value matmul(Value a, Value b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[0])
      throw std::invalid_argument("matmul: shape mismatch");
    Node n;
    n.op = Op::matmul;
    n.inputs = {a.id, b.id};
    n.value = DenseTensor::zeros({av.shape[0], bv.shape[1]});
    mm_nn(av.data.data(), bv.data.data(), n.value.data.data(), av.shape[0], av.shape[1],
          bv.shape[1]);
    return push(std::move(n));
  }

  /// [r,c] x [c] -> [r].
  Value matvec(Value w, Value x) {
    const auto& wv = value(w);
    const auto& xv = value(x);
    if (wv.rank() != 2 || xv.rank() != 1 || wv.shape[1] != xv.shape[0])
      throw std::invalid_argument("matvec: shape mismatch");
    Node n;
    n.op = Op::matvec;
    n.inputs = {w.id, x.id};
    n.value = DenseTensor::zeros({wv.shape[0]});
    for (int r = 0; r < wv.shape[0]; ++r) {
      double s = 0.0;
      for (int c = 0; c < wv.shape[1]; ++c)
        s += wv.data[std::size_t(r * wv.shape[1] + c)] * xv.data[std::size_t(c)];
      n.value.data[std::size_t(r)] = s;
    }
    return push(std::move(n));
  }

  /// M[r,c] + b[c] broadcast over rows.
  Value add_row_vec(Value m, Value b) {
    const auto& mv = value(m);
    const auto& bv = value(b);
    if (mv.rank() != 2 || bv.rank() != 1 || bv.shape[0] != mv.shape[1])
      throw std::invalid_argument("add_row_vec: shape mismatch");
    Node n;
    n.op = Op::add_row_vec;
    n.inputs = {m.id, b.id};
    n.value = mv;
    for (int r = 0; r < mv.shape[0]; ++r)
      for (int c = 0; c < mv.shape[1]; ++c)
        n.value.data[std::size_t(r * mv.shape[1] + c)] += bv.data[std::size_t(c)];
    return push(std::move(n));
  }

  Value concat(const std::vector<Value>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat: empty list");
    Node n;
    n.op = Op::concat;
    std::vector<double> data;
    for (Value v : xs) {
      const auto& t = value(v);
      if (t.rank() != 1) throw std::invalid_argument("concat: rank-1 operands only");
      data.insert(data.end(), t.data.begin(), t.data.end());
      n.inputs.push_back(v.id);
    }
    n.value = DenseTensor::vector(std::move(data));
    return push(std::move(n));
  }

  Value slice(Value v, int offset, int len) {
    const auto& t = value(v);
    if (t.rank() != 1 || offset < 0 || len < 1 || offset + len > t.shape[0])
      throw std::invalid_argument("slice: bad range");
    Node n;
    n.op = Op::slice;
    n.inputs = {v.id};
    n.i0 = offset;
    n.value = DenseTensor::zeros({len});
    for (int k = 0; k < len; ++k) n.value.data[std::size_t(k)] = t.data[std::size_t(offset + k)];
    return push(std::move(n));
  }

  /// k vectors of length r -> [r,k] (vectors become columns).
  Value stack_cols(const std::vector<Value>& cols) {
    if (cols.empty()) throw std::invalid_argument("stack_cols: empty list");
    int r = value(cols[0]).shape[0];
    Node n;
    n.op = Op::stack_cols;
    n.value = DenseTensor::zeros({r, int(cols.size())});
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto& t = value(cols[j]);
      if (t.rank() != 1 || t.shape[0] != r) throw std::invalid_argument("stack_cols: length mismatch");
      for (int i = 0; i < r; ++i)
        n.value.data[std::size_t(i) * cols.size() + j] = t.data[std::size_t(i)];
      n.inputs.push_back(cols[j].id);
    }
    return push(std::move(n));
  }

  /// r vectors of length c -> [r,c] (vectors become rows).
  Value stack_rows(const std::vector<Value>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: empty list");
    int c = value(rows[0]).shape[0];
    Node n;
    n.op = Op::stack_rows;
    n.value = DenseTensor::zeros({int(rows.size()), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& t = value(rows[i]);
      if (t.rank() != 1 || t.shape[0] != c) throw std::invalid_argument("stack_rows: length mismatch");
      for (int j = 0; j < c; ++j) n.value.data[i * std::size_t(c) + std::size_t(j)] = t.data[std::size_t(j)];
      n.inputs.push_back(rows[i].id);
    }
    return push(std::move(n));
  }

  Value row(Value m, int r) {
    const auto& mv = value(m);
    if (mv.rank() != 2 || r < 0 || r >= mv.shape[0]) throw std::invalid_argument("row: bad index");
    Node n;
    n.op = Op::row;
    n.inputs = {m.id};
    n.i0 = r;
    n.value = DenseTensor::zeros({mv.shape[1]});
    for (int c = 0; c < mv.shape[1]; ++c)
      n.value.data[std::size_t(c)] = mv.data[std::size_t(r * mv.shape[1] + c)];
    return push(std::move(n));
  }

  /// Per output row s: sum of input rows indices[offsets[s] .. offsets[s+1]).
  /// Empty segments produce zero rows.
  Value segment_sum_rows(Value m, const std::vector<int>& offsets,
                         const std::vector<int>& indices) {
    const auto& mv = value(m);
    if (mv.rank() != 2 || offsets.size() < 1 || offsets.back() != int(indices.size()))
      throw std::invalid_argument("segment_sum_rows: bad segment table");
    const int segs = int(offsets.size()) - 1;
    const int c = mv.shape[1];
    Node n;
    n.op = Op::segment_sum_rows;
    n.inputs = {m.id};
    n.aux = offsets;
    n.aux.insert(n.aux.end(), indices.begin(), indices.end());
    n.i0 = segs;
    n.value = DenseTensor::zeros({segs, c});
    for (int s = 0; s < segs; ++s)
      for (int k = offsets[std::size_t(s)]; k < offsets[std::size_t(s) + 1]; ++k) {
        int src = indices[std::size_t(k)];
        for (int j = 0; j < c; ++j)
          n.value.data[std::size_t(s * c + j)] += mv.data[std::size_t(src * c + j)];
      }
    return push(std::move(n));
  }

  Value sigmoid(Value a) {
    return unary(Op::sigmoid, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  }
  Value tanh_(Value a) {
    return unary(Op::tanh_, a, [](double x) { return std::tanh(x); });
  }
  Value relu(Value a) {
    Value out = unary(Op::relu, a, [](double x) { return x > 0.0 ? x : 0.0; });
    hash_signs(value(a));
    return out;
  }
  Value leaky_relu(Value a, double slope = 0.01) {
    Value out = unary(Op::leaky_relu, a, [slope](double x) { return x > 0.0 ? x : slope * x; });
    nodes_.back().d0 = slope;
    hash_signs(value(a));
    return out;
  }
  Value log_(Value a) {
    return unary(Op::log_, a, [](double x) { return std::log(x); });
  }
  Value abs_(Value a) {
    Value out = unary(Op::abs_, a, [](double x) { return std::abs(x); });
    hash_signs(value(a));
    return out;
  }
  Value exp_(Value a) {
    return unary(Op::exp_, a, [](double x) { return std::exp(x); });
  }

  Value softmax(Value a) {
    const auto& av = value(a);
    if (av.rank() != 1) throw std::invalid_argument("softmax: rank-1 only");
    Node n;
    n.op = Op::softmax;
    n.inputs = {a.id};
    n.value = av;
    softmax_inplace(n.value.data.data(), std::size_t(av.shape[0]));
    return push(std::move(n));
  }

  Value softmax_rows(Value m) {
    const auto& mv = value(m);
    if (mv.rank() != 2) throw std::invalid_argument("softmax_rows: rank-2 only");
    Node n;
    n.op = Op::softmax_rows;
    n.inputs = {m.id};
    n.value = mv;
    for (int r = 0; r < mv.shape[0]; ++r)
      softmax_inplace(n.value.data.data() + std::size_t(r) * std::size_t(mv.shape[1]),
                      std::size_t(mv.shape[1]));
    return push(std::move(n));
  }

  /// Per-column standardization over the rows of one graph's feature matrix:
  /// (x - mean) / sqrt(var + eps), statistics over all rows.
  Value graph_norm_rows(Value m, double eps = 1e-5) {
    const auto& mv = value(m);
    if (mv.rank() != 2) throw std::invalid_argument("graph_norm_rows: rank-2 only");
    const int r = mv.shape[0], c = mv.shape[1];
    Node n;
    n.op = Op::graph_norm_rows;
    n.inputs = {m.id};
    n.d0 = eps;
    n.value = mv;
    n.aux_tensor = DenseTensor::zeros({2, c});  // row 0: mean, row 1: 1/sigma
    for (int j = 0; j < c; ++j) {
      double mean = 0.0;
      for (int i = 0; i < r; ++i) mean += mv.data[std::size_t(i * c + j)];
      mean /= r;
      double var = 0.0;
      for (int i = 0; i < r; ++i) {
        double d = mv.data[std::size_t(i * c + j)] - mean;
        var += d * d;
      }
      var /= r;
      double inv_sigma = 1.0 / std::sqrt(var + eps);
      n.aux_tensor.data[std::size_t(j)] = mean;
      n.aux_tensor.data[std::size_t(c + j)] = inv_sigma;
      for (int i = 0; i < r; ++i)
        n.value.data[std::size_t(i * c + j)] =
            (mv.data[std::size_t(i * c + j)] - mean) * inv_sigma;
    }
    return push(std::move(n));
  }

  /// Log-sum-exp over all axes except keep_axis; identical arithmetic to
  /// fg::reduce_except.
  Value logsumexp_except(Value t, int keep_axis) {
    Node n;
    n.op = Op::lse_except;
    n.inputs = {t.id};
    n.i0 = keep_axis;
    n.value = DenseTensor::vector(reduce_except(value(t), keep_axis, Reduce::logsumexp));
    return push(std::move(n));
  }

  /// Max over all axes except keep_axis. Gradient flows to the single argmax
  /// entry per output element, lowest flat index on ties.
  Value max_except(Value t, int keep_axis) {
    const auto& tv = value(t);
    if (keep_axis < 0 || keep_axis >= tv.rank())
      throw std::out_of_range("max_except: axis out of range");
    const int card = tv.shape[std::size_t(keep_axis)];
    const std::int64_t stride = tv.strides()[std::size_t(keep_axis)];
    Node n;
    n.op = Op::max_except;
    n.inputs = {t.id};
    n.i0 = keep_axis;
    n.aux.assign(std::size_t(card), -1);
    std::vector<double> best(std::size_t(card), -std::numeric_limits<double>::infinity());
    for (std::int64_t f = 0; f < tv.size(); ++f) {
      std::size_t l = std::size_t((f / stride) % card);
      if (tv.data[std::size_t(f)] > best[l]) {
        best[l] = tv.data[std::size_t(f)];
        n.aux[l] = int(f);
      }
    }
    for (int idx : n.aux) mix_hash(std::uint64_t(idx) + 0x9E3779B97F4A7C15ULL);
    n.value = DenseTensor::vector(std::move(best));
    return push(std::move(n));
  }

  Value lse_all(Value t) {
    Node n;
    n.op = Op::lse_all;
    n.inputs = {t.id};
    n.value = DenseTensor::scalar(logsumexp(value(t).data));
    return push(std::move(n));
  }

  Value sum_reduce(Value t) {
    Node n;
    n.op = Op::sum_reduce;
    n.inputs = {t.id};
    double s = 0.0;
    for (double x : value(t).data) s += x;
    n.value = DenseTensor::scalar(s);
    return push(std::move(n));
  }

  /// Outer sum of rank-1 operands, same semantics as fg::tensor_sum.
  Value tensor_sum(const std::vector<Value>& xs) {
    std::vector<std::vector<double>> ops;
    ops.reserve(xs.size());
    Node n;
    n.op = Op::tensor_sum_;
    for (Value v : xs) {
      if (value(v).rank() != 1) throw std::invalid_argument("tensor_sum: rank-1 operands only");
      ops.push_back(value(v).data);
      n.inputs.push_back(v.id);
    }
    n.value = fg::tensor_sum(ops);
    return push(std::move(n));
  }

  Value reshape(Value t, std::vector<int> shape) {
    if (DenseTensor::size_of(shape) != value(t).size())
      throw std::invalid_argument("reshape: size mismatch");
    Node n;
    n.op = Op::reshape;
    n.inputs = {t.id};
    n.value = DenseTensor(std::move(shape), value(t).data);
    return push(std::move(n));
  }

  /// Mean cross-entropy between target rows (constant, rows sum to 1) and
  /// softmax(logits) rows, computed stably from the logits:
  /// (1/r) * sum_r [ lse(logits_r) - <targets_r, logits_r> ].
  Value ce_logits_rows(Value logits, DenseTensor targets) {
    const auto& lv = value(logits);
    if (lv.rank() != 2 || !same_shape(lv, targets))
      throw std::invalid_argument("ce_logits_rows: shape mismatch");
    const int r = lv.shape[0], c = lv.shape[1];
    double loss = 0.0;
    for (int i = 0; i < r; ++i) {
      std::span<const double> rowv(lv.data.data() + std::size_t(i) * std::size_t(c), std::size_t(c));
      double z = logsumexp(rowv);
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += targets.data[std::size_t(i * c + j)] * rowv[std::size_t(j)];
      loss += z - dot;
    }
    Node n;
    n.op = Op::ce_logits_rows;
    n.inputs = {logits.id};
    n.aux_tensor = std::move(targets);
    n.value = DenseTensor::scalar(loss / r);
    return push(std::move(n));
  }

  /// Reverse pass from a rank-0 root. Gradients of param nodes are *added*
  /// into the bound ParamStore's grad slots.
  void backward(Value root) {
    if (!value(root).is_scalar()) throw std::invalid_argument("backward: root must be rank 0");
    grads_.assign(nodes_.size(), DenseTensor());
    has_grad_.assign(nodes_.size(), false);
    grad_at(root.id) = DenseTensor::scalar(1.0);
    for (int id = int(nodes_.size()) - 1; id >= 0; --id) {
      if (!has_grad_[std::size_t(id)]) continue;
      step_backward(id);
    }
    if (store_ != nullptr) {
      for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const Node& n = nodes_[id];
        if (n.op != Op::param || !has_grad_[id]) continue;
        auto& e = store_->at(n.param_name);
        const auto& gval = grads_[id];
        for (std::size_t k = 0; k < e.grads.size(); ++k) e.grads[k] += gval.data[k];
      }
    }
  }

  /// Gradient tensor of any node after backward() (zeros if unreached).
  DenseTensor gradient(Value v) const {
    if (v.id < int(has_grad_.size()) && has_grad_[std::size_t(v.id)])
      return grads_[std::size_t(v.id)];
    DenseTensor z = value(v);
    std::fill(z.data.begin(), z.data.end(), 0.0);
    return z;
  }

 private:
  Value push(Node n) {
    nodes_.push_back(std::move(n));
    return Value{int(nodes_.size()) - 1};
  }

  Value binary(Op op, Value a, Value b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (!same_shape(av, bv)) throw std::invalid_argument("elementwise op: shape mismatch");
    Node n;
    n.op = op;
    n.inputs = {a.id, b.id};
    n.value = av;
    switch (op) {
      case Op::add:
        for (std::size_t f = 0; f < bv.data.size(); ++f) n.value.data[f] += bv.data[f];
        break;
      case Op::sub:
        for (std::size_t f = 0; f < bv.data.size(); ++f) n.value.data[f] -= bv.data[f];
        break;
      case Op::mul:
        for (std::size_t f = 0; f < bv.data.size(); ++f) n.value.data[f] *= bv.data[f];
        break;
      default:
        throw std::logic_error("binary: bad op");
    }
    return push(std::move(n));
  }

  template <typename F>
  Value unary(Op op, Value a, F f) {
    Node n;
    n.op = op;
    n.inputs = {a.id};
    n.value = value(a);
    for (double& x : n.value.data) x = f(x);
    return push(std::move(n));
  }

  static void softmax_inplace(double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t k = 1; k < n; ++k) m = std::max(m, x[k]);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = std::exp(x[k] - m);
      s += x[k];
    }
    for (std::size_t k = 0; k < n; ++k) x[k] /= s;
  }

  static void mm_nn(const double* a, const double* b, double* out, int r, int k, int c) {
    for (int i = 0; i < r; ++i) {
      double* orow = out + std::size_t(i) * std::size_t(c);
      const double* arow = a + std::size_t(i) * std::size_t(k);
      for (int p = 0; p < k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const double* brow = b + std::size_t(p) * std::size_t(c);
        for (int j = 0; j < c; ++j) orow[j] += av * brow[j];
      }
    }
  }

  void mix_hash(std::uint64_t x) {
    kink_hash_ ^= x;
    kink_hash_ *= 0x100000001B3ULL;
  }
  void hash_signs(const DenseTensor& t) {
    for (double x : t.data) mix_hash(x > 0.0 ? 0x2545F4914F6CDD1DULL : 0x9E3779B97F4A7C15ULL);
  }

  DenseTensor& grad_at(int id) {
    if (!has_grad_[std::size_t(id)]) {
      DenseTensor z = nodes_[std::size_t(id)].value;
      std::fill(z.data.begin(), z.data.end(), 0.0);
      grads_[std::size_t(id)] = std::move(z);
      has_grad_[std::size_t(id)] = true;
    }
    return grads_[std::size_t(id)];
  }

  void step_backward(int id) {
    const Node& n = nodes_[std::size_t(id)];
    const DenseTensor& g = grads_[std::size_t(id)];
    auto in = [&](int k) -> const DenseTensor& { return nodes_[std::size_t(n.inputs[std::size_t(k)])].value; };
    auto gin = [&](int k) -> DenseTensor& { return grad_at(n.inputs[std::size_t(k)]); };

    switch (n.op) {
      case Op::constant:
      case Op::param:
        break;
      case Op::add: {
        auto &ga = gin(0), &gb = gin(1);
        for (std::size_t f = 0; f < g.data.size(); ++f) {
          ga.data[f] += g.data[f];
          gb.data[f] += g.data[f];
        }
        break;
      }
      case Op::sub: {
        auto &ga = gin(0), &gb = gin(1);
        for (std::size_t f = 0; f < g.data.size(); ++f) {
          ga.data[f] += g.data[f];
          gb.data[f] -= g.data[f];
        }
        break;
      }
      case Op::mul: {
        auto &ga = gin(0), &gb = gin(1);
        const auto &av = in(0), &bv = in(1);
        for (std::size_t f = 0; f < g.data.size(); ++f) {
          ga.data[f] += g.data[f] * bv.data[f];
          gb.data[f] += g.data[f] * av.data[f];
        }
        break;
      }
      case Op::add_n: {
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          auto& gi = gin(int(k));
          for (std::size_t f = 0; f < g.data.size(); ++f) gi.data[f] += g.data[f];
        }
        break;
      }
      case Op::affine: {
        auto& ga = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) ga.data[f] += n.d0 * g.data[f];
        break;
      }
      case Op::badd_scalar: {
        auto& gt = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) gt.data[f] += g.data[f];
        double s = 0.0;
        for (double x : g.data) s += x;
        gin(1).data[0] += n.d0 * s;
        break;
      }
      case Op::axis_add: {
        auto& gt = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) gt.data[f] += g.data[f];
        auto& gv = gin(1);
        const auto& tv = in(0);
        const std::int64_t stride = tv.strides()[std::size_t(n.i0)];
        const int card = tv.shape[std::size_t(n.i0)];
        for (std::int64_t f = 0; f < std::int64_t(g.data.size()); ++f)
          gv.data[std::size_t((f / stride) % card)] += n.d0 * g.data[std::size_t(f)];
        break;
      }
      case Op::matmul: {
        const auto &av = in(0), &bv = in(1);
        auto &ga = gin(0), &gb = gin(1);
        const int r = av.shape[0], k = av.shape[1], c = bv.shape[1];
        // dA += dC * B^T
        for (int i = 0; i < r; ++i)
          for (int p = 0; p < k; ++p) {
            double s = 0.0;
            for (int j = 0; j < c; ++j)
              s += g.data[std::size_t(i * c + j)] * bv.data[std::size_t(p * c + j)];
            ga.data[std::size_t(i * k + p)] += s;
          }
        // dB += A^T * dC
        for (int p = 0; p < k; ++p)
          for (int i = 0; i < r; ++i) {
            const double av_ip = av.data[std::size_t(i * k + p)];
            if (av_ip == 0.0) continue;
            for (int j = 0; j < c; ++j)
              gb.data[std::size_t(p * c + j)] += av_ip * g.data[std::size_t(i * c + j)];
          }
        break;
      }
      case Op::matvec: {
        const auto &wv = in(0), &xv = in(1);
        auto &gw = gin(0), &gx = gin(1);
        const int r = wv.shape[0], c = wv.shape[1];
        for (int i = 0; i < r; ++i) {
          const double gi = g.data[std::size_t(i)];
          for (int j = 0; j < c; ++j) {
            gw.data[std::size_t(i * c + j)] += gi * xv.data[std::size_t(j)];
            gx.data[std::size_t(j)] += gi * wv.data[std::size_t(i * c + j)];
          }
        }
        break;
      }
      case Op::add_row_vec: {
        auto &gm = gin(0), &gb = gin(1);
        const int r = in(0).shape[0], c = in(0).shape[1];
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) {
            gm.data[std::size_t(i * c + j)] += g.data[std::size_t(i * c + j)];
            gb.data[std::size_t(j)] += g.data[std::size_t(i * c + j)];
          }
        break;
      }
      case Op::concat: {
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          auto& gi = gin(int(k));
          for (std::size_t f = 0; f < gi.data.size(); ++f) gi.data[f] += g.data[off + f];
          off += gi.data.size();
        }
        break;
      }
      case Op::slice: {
        auto& gv = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f)
          gv.data[std::size_t(n.i0) + f] += g.data[f];
        break;
      }
      case Op::stack_cols: {
        const int r = n.value.shape[0];
        const int k = n.value.shape[1];
        for (int j = 0; j < k; ++j) {
          auto& gj = gin(j);
          for (int i = 0; i < r; ++i) gj.data[std::size_t(i)] += g.data[std::size_t(i * k + j)];
        }
        break;
      }
      case Op::stack_rows: {
        const int r = n.value.shape[0];
        const int c = n.value.shape[1];
        for (int i = 0; i < r; ++i) {
          auto& gi = gin(i);
          for (int j = 0; j < c; ++j) gi.data[std::size_t(j)] += g.data[std::size_t(i * c + j)];
        }
        break;
      }
      case Op::row: {
        auto& gm = gin(0);
        const int c = in(0).shape[1];
        for (int j = 0; j < c; ++j) gm.data[std::size_t(n.i0 * c + j)] += g.data[std::size_t(j)];
        break;
      }
      case Op::segment_sum_rows: {
        auto& gm = gin(0);
        const int segs = n.i0;
        const int c = in(0).shape[1];
        const int* offsets = n.aux.data();
        const int* indices = n.aux.data() + segs + 1;
        for (int s = 0; s < segs; ++s)
          for (int k = offsets[s]; k < offsets[s + 1]; ++k) {
            int dst = indices[k];
            for (int j = 0; j < c; ++j)
              gm.data[std::size_t(dst * c + j)] += g.data[std::size_t(s * c + j)];
          }
        break;
      }
      case Op::sigmoid: {
        auto& ga = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) {
          double y = n.value.data[f];
          ga.data[f] += g.data[f] * y * (1.0 - y);
        }
        break;
      }
      case Op::tanh_: {
        auto& ga = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) {
          double y = n.value.data[f];
          ga.data[f] += g.data[f] * (1.0 - y * y);
        }
        break;
      }
      case Op::relu: {
        auto& ga = gin(0);
        const auto& av = in(0);
        for (std::size_t f = 0; f < g.data.size(); ++f)
          if (av.data[f] > 0.0) ga.data[f] += g.data[f];
        break;
      }
      case Op::leaky_relu: {
        auto& ga = gin(0);
        const auto& av = in(0);
        for (std::size_t f = 0; f < g.data.size(); ++f)
          ga.data[f] += g.data[f] * (av.data[f] > 0.0 ? 1.0 : n.d0);
        break;
      }
      case Op::log_: {
        auto& ga = gin(0);
        const auto& av = in(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) ga.data[f] += g.data[f] / av.data[f];
        break;
      }
      case Op::abs_: {
        auto& ga = gin(0);
        const auto& av = in(0);
        for (std::size_t f = 0; f < g.data.size(); ++f)
          ga.data[f] += g.data[f] * (av.data[f] > 0.0 ? 1.0 : (av.data[f] < 0.0 ? -1.0 : 0.0));
        break;
      }
      case Op::exp_: {
        auto& ga = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) ga.data[f] += g.data[f] * n.value.data[f];
        break;
      }
      case Op::softmax: {
        auto& ga = gin(0);
        const auto& y = n.value;
        double dot = 0.0;
        for (std::size_t f = 0; f < g.data.size(); ++f) dot += g.data[f] * y.data[f];
        for (std::size_t f = 0; f < g.data.size(); ++f)
          ga.data[f] += y.data[f] * (g.data[f] - dot);
        break;
      }
      case Op::softmax_rows: {
        auto& ga = gin(0);
        const auto& y = n.value;
        const int r = y.shape[0], c = y.shape[1];
        for (int i = 0; i < r; ++i) {
          double dot = 0.0;
          for (int j = 0; j < c; ++j)
            dot += g.data[std::size_t(i * c + j)] * y.data[std::size_t(i * c + j)];
          for (int j = 0; j < c; ++j)
            ga.data[std::size_t(i * c + j)] +=
                y.data[std::size_t(i * c + j)] * (g.data[std::size_t(i * c + j)] - dot);
        }
        break;
      }
      case Op::graph_norm_rows: {
        auto& ga = gin(0);
        const auto& y = n.value;
        const int r = y.shape[0], c = y.shape[1];
        for (int j = 0; j < c; ++j) {
          const double inv_sigma = n.aux_tensor.data[std::size_t(c + j)];
          double gsum = 0.0, gysum = 0.0;
          for (int i = 0; i < r; ++i) {
            gsum += g.data[std::size_t(i * c + j)];
            gysum += g.data[std::size_t(i * c + j)] * y.data[std::size_t(i * c + j)];
          }
          const double gmean = gsum / r, gymean = gysum / r;
          for (int i = 0; i < r; ++i)
            ga.data[std::size_t(i * c + j)] +=
                inv_sigma *
                (g.data[std::size_t(i * c + j)] - gmean - y.data[std::size_t(i * c + j)] * gymean);
        }
        break;
      }
      case Op::lse_except: {
        auto& gt = gin(0);
        const auto& tv = in(0);
        const std::int64_t stride = tv.strides()[std::size_t(n.i0)];
        const int card = tv.shape[std::size_t(n.i0)];
        for (std::int64_t f = 0; f < tv.size(); ++f) {
          std::size_t l = std::size_t((f / stride) % card);
          gt.data[std::size_t(f)] +=
              g.data[l] * std::exp(tv.data[std::size_t(f)] - n.value.data[l]);
        }
        break;
      }
      case Op::max_except: {
        auto& gt = gin(0);
        for (std::size_t l = 0; l < n.aux.size(); ++l)
          if (n.aux[l] >= 0) gt.data[std::size_t(n.aux[l])] += g.data[l];
        break;
      }
      case Op::lse_all: {
        auto& gt = gin(0);
        const auto& tv = in(0);
        const double out = n.value.data[0], gs = g.data[0];
        for (std::size_t f = 0; f < tv.data.size(); ++f)
          gt.data[f] += gs * std::exp(tv.data[f] - out);
        break;
      }
      case Op::sum_reduce: {
        auto& gt = gin(0);
        const double gs = g.data[0];
        for (std::size_t f = 0; f < gt.data.size(); ++f) gt.data[f] += gs;
        break;
      }
      case Op::tensor_sum_: {
        const auto strides = n.value.strides();
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          auto& gk = gin(int(k));
          const int card = n.value.shape[k];
          const std::int64_t stride = strides[k];
          for (std::int64_t f = 0; f < n.value.size(); ++f)
            gk.data[std::size_t((f / stride) % card)] += g.data[std::size_t(f)];
        }
        break;
      }
      case Op::reshape: {
        auto& gt = gin(0);
        for (std::size_t f = 0; f < g.data.size(); ++f) gt.data[f] += g.data[f];
        break;
      }
      case Op::ce_logits_rows: {
        auto& gl = gin(0);
        const auto& lv = in(0);
        const int r = lv.shape[0], c = lv.shape[1];
        const double gs = g.data[0] / r;
        std::vector<double> sm(static_cast<std::size_t>(c));
        for (int i = 0; i < r; ++i) {
          for (int j = 0; j < c; ++j) sm[std::size_t(j)] = lv.data[std::size_t(i * c + j)];
          softmax_inplace(sm.data(), std::size_t(c));
          for (int j = 0; j < c; ++j)
            gl.data[std::size_t(i * c + j)] +=
                gs * (sm[std::size_t(j)] - n.aux_tensor.data[std::size_t(i * c + j)]);
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<DenseTensor> grads_;
  std::vector<bool> has_grad_;
  ParamStore* store_ = nullptr;
  std::uint64_t kink_hash_ = 0xCBF29CE484222325ULL;
};

}  // namespace fg
