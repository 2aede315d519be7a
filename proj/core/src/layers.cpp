// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stateless building blocks shared by the model zoo.

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rlab/errors.hpp"
#include "rlab/models.hpp"

namespace rlab {
namespace {

// Additive score mask; large enough that exp() underflows to exactly 0.
constexpr double kMasked = -1e9;

std::size_t time_steps(Value rows, std::size_t batch) {
  const std::size_t n = rows.shape().at(0);
  if (batch == 0 || n % batch != 0) {
    throw ShapeError(fmt::format("attention: {} rows is not a multiple of batch {}", n, batch));
  }
  return n / batch;
}

Value column(Value x, std::size_t i) { return slice(x, 1, i, i + 1); }

Value head_cols(Value x, std::size_t h, std::size_t heads) {
  if (heads == 1) return x;
  const std::size_t dh = x.shape()[1] / heads;
  return slice(x, 1, h * dh, (h + 1) * dh);
}

// Always slice, so every query sees the same op chain regardless of position.
Value prefix_rows(Value x, std::size_t rows) { return slice(x, 0, 0, rows); }

Value prefix_cols(Value x, std::size_t cols) { return slice(x, 1, 0, cols); }

bool all_valid(const std::vector<char>& key_valid) {
  return std::all_of(key_valid.begin(), key_valid.end(), [](char c) { return c != 0; });
}

// [B, (t+1)B] mask letting query row b see key s*B+b' iff b' == b and the key
// is valid. `additive` selects 0 / kMasked, otherwise 1 / 0.
Tensor batch_mask(std::size_t t, std::size_t batch, const std::vector<char>& key_valid,
                  bool additive) {
  const std::size_t keys = (t + 1) * batch;
  Tensor m = Tensor::filled({batch, keys}, additive ? kMasked : 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s <= t; ++s) {
      const std::size_t key = s * batch + b;
      if (key_valid.empty() || key_valid[key]) m.data[b * keys + key] = additive ? 0.0 : 1.0;
    }
  }
  return m;
}

// Softmax attention of one block of queries (position t of every sequence)
// against keys 0..t. q_t: [B, dh], k_t: [dh, (t+1)B] (already transposed),
// v_t: [(t+1)B, dh].
Value attend(Value q_t, Value kT_t, Value v_t, std::size_t t, std::size_t batch, bool scale_scores,
             const std::vector<char>& key_valid, bool masked) {
  Graph& g = q_t.graph();
  Value s = matmul(q_t, kT_t);
  if (scale_scores) s = scale(s, 1.0 / std::sqrt(static_cast<double>(q_t.shape()[1])));
  if (masked) s = add(s, g.input(batch_mask(t, batch, key_valid, true)));
  return matmul(softmax(s), v_t);
}

}  // namespace

std::vector<double> positional_code(std::size_t t, std::size_t d) {
  std::vector<double> pe(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
    pe[i] = i % 2 == 0 ? std::sin(static_cast<double>(t) * freq) : std::cos(static_cast<double>(t) * freq);
  }
  return pe;
}

Value rnn_cell(Value x, Value h_prev, Value w_x, Value w_h, Value b, Nonlinearity act) {
  return nonlinearity(add(add(matmul(x, w_x), matmul(h_prev, w_h)), b), act);
}

LstmOut lstm_cell(Value x, Value h_prev, Value c_prev, Value w_x, Value w_h, Value b) {
  const std::size_t d = h_prev.shape().back();
  if (w_h.shape().back() != 4 * d) {
    throw ShapeError(fmt::format("lstm: gate width {} != 4 * {}", w_h.shape().back(), d));
  }
  const Value z = add(add(matmul(x, w_x), matmul(h_prev, w_h)), b);
  const Value i = sigmoid(slice(z, 1, 0, d));
  const Value f = sigmoid(slice(z, 1, d, 2 * d));
  const Value gc = tanh(slice(z, 1, 2 * d, 3 * d));
  const Value o = sigmoid(slice(z, 1, 3 * d, 4 * d));
  const Value c = add(mul(f, c_prev), mul(i, gc));
  return {mul(o, tanh(c)), c};
}

Value soft_stack_update(Value stack, Value actions, Value value, std::size_t width) {
  Graph& g = stack.graph();
  const Shape s = stack.shape();
  if (s.size() != 2 || width == 0 || s[1] % width != 0 || s[1] == 0) {
    throw ShapeError(fmt::format("stack: shape {} is not [B, depth * {}]", shape_to_string(s), width));
  }
  if (actions.shape() != Shape{s[0], 3}) {
    throw ShapeError(fmt::format("stack: actions shape {} is not [{}, 3]", shape_to_string(actions.shape()), s[0]));
  }
  const std::size_t full = s[1];
  const Value empty = g.input(Tensor::zeros({s[0], width}));
  Value pushed = value;
  Value popped = empty;
  if (full > width) {
    const std::vector<Value> push_parts = {value, slice(stack, 1, 0, full - width)};
    const std::vector<Value> pop_parts = {slice(stack, 1, width, full), empty};
    pushed = concat(push_parts, 1);
    popped = concat(pop_parts, 1);
  }
  const Shape wide = {s[0], full};
  const Value a_push = expand(column(actions, 0), wide);
  const Value a_pop = expand(column(actions, 1), wide);
  const Value a_keep = expand(column(actions, 2), wide);
  return add(add(mul(a_push, pushed), mul(a_pop, popped)), mul(a_keep, stack));
}

Value soft_tape_update(Value tape, Value moves, Value value, std::size_t width) {
  const Shape s = tape.shape();
  if (s.size() != 2 || width == 0 || s[1] % width != 0 || s[1] == 0) {
    throw ShapeError(fmt::format("tape: shape {} is not [B, length * {}]", shape_to_string(s), width));
  }
  if (moves.shape() != Shape{s[0], 3}) {
    throw ShapeError(fmt::format("tape: moves shape {} is not [{}, 3]", shape_to_string(moves.shape()), s[0]));
  }
  const std::size_t full = s[1];
  if (full == width) {
    // A one-cell tape: every move lands on the written cell.
    return value;
  }
  const std::vector<Value> write_parts = {value, slice(tape, 1, width, full)};
  const Value written = concat(write_parts, 1);
  // Head moves right: new cell 0 is old cell 1.
  const std::vector<Value> right_parts = {slice(written, 1, width, full), slice(written, 1, 0, width)};
  // Head moves left: new cell 0 is old last cell.
  const std::vector<Value> left_parts = {slice(written, 1, full - width, full),
                                         slice(written, 1, 0, full - width)};
  const Value to_right = concat(right_parts, 1);
  const Value to_left = concat(left_parts, 1);
  const Shape wide = {s[0], full};
  return add(add(mul(expand(column(moves, 0), wide), to_left),
                 mul(expand(column(moves, 1), wide), written)),
             mul(expand(column(moves, 2), wide), to_right));
}

Value causal_attention(Value q, Value k, Value v, std::size_t heads, std::size_t batch,
                       bool scale_scores, const std::vector<char>& key_valid) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.shape().size() != 2) {
    throw ShapeError(fmt::format("attention: q/k/v shapes {} {} {} differ", shape_to_string(q.shape()),
                                 shape_to_string(k.shape()), shape_to_string(v.shape())));
  }
  if (heads == 0 || q.shape()[1] % heads != 0) throw ShapeError("attention: width not divisible by heads");
  const std::size_t steps = time_steps(q, batch);
  const bool masked = batch > 1 || !all_valid(key_valid);
  std::vector<Value> head_out;
  for (std::size_t h = 0; h < heads; ++h) {
    const Value qh = head_cols(q, h, heads);
    const Value khT = transpose(head_cols(k, h, heads));
    const Value vh = head_cols(v, h, heads);
    std::vector<Value> rows;
    rows.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const Value q_t = slice(qh, 0, t * batch, (t + 1) * batch);
      rows.push_back(attend(q_t, prefix_cols(khT, (t + 1) * batch), prefix_rows(vh, (t + 1) * batch), t,
                            batch, scale_scores, key_valid, masked));
    }
    head_out.push_back(concat(rows, 0));
  }
  return heads == 1 ? head_out[0] : concat(head_out, 1);
}

Value cached_attention(Value q, Value k, Value v, std::size_t heads, std::size_t batch,
                       bool scale_scores, const std::vector<char>& key_valid) {
  if (q.shape().size() != 2 || q.shape()[0] != batch || k.shape() != v.shape() ||
      k.shape().size() != 2 || k.shape()[1] != q.shape()[1]) {
    throw ShapeError(fmt::format("attention: query {} does not match cache {}", shape_to_string(q.shape()),
                                 shape_to_string(k.shape())));
  }
  if (heads == 0 || q.shape()[1] % heads != 0) throw ShapeError("attention: width not divisible by heads");
  const std::size_t t = time_steps(k, batch) - 1;
  const bool masked = batch > 1 || !all_valid(key_valid);
  std::vector<Value> head_out;
  for (std::size_t h = 0; h < heads; ++h) {
    head_out.push_back(attend(head_cols(q, h, heads), transpose(head_cols(k, h, heads)),
                              head_cols(v, h, heads), t, batch, scale_scores, key_valid, masked));
  }
  return heads == 1 ? head_out[0] : concat(head_out, 1);
}

Value rwkv_attn_parallel(Value k, Value v, Value w, Value u, std::size_t batch) {
  Graph& g = k.graph();
  if (k.shape() != v.shape() || k.shape().size() != 2) throw ShapeError("rwkv: k and v must be equal-shape matrices");
  const std::size_t d = k.shape()[1];
  if (w.shape() != Shape{d} || u.shape() != Shape{d}) throw ShapeError("rwkv: w and u must be [d]");
  const std::size_t steps = time_steps(k, batch);
  const std::vector<Value> rows_wu = {reshape(w, {1, d}), reshape(u, {1, d})};
  const Value wu = concat(rows_wu, 0);  // [2, d]
  std::vector<Value> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t keys = (t + 1) * batch;
    // Row s*B+b of the exponent is -(t-1-s) w + k_s for s < t and u + k_t at s = t.
    Tensor coeff = Tensor::zeros({keys, 2});
    for (std::size_t s = 0; s <= t; ++s) {
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t r = s * batch + b;
        if (s < t) coeff.data[r * 2] = -static_cast<double>(t - 1 - s);
        else coeff.data[r * 2 + 1] = 1.0;
      }
    }
    const Value e = add(prefix_rows(k, keys), matmul(g.input(std::move(coeff)), wu));
    // Subtract the per-(sequence, channel) maximum. The shift is a constant
    // input: it cancels between numerator and denominator, so it needs no
    // gradient.
    Tensor shift = Tensor::zeros({keys, d});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < d; ++c) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s <= t; ++s) mx = std::max(mx, e.data().data[(s * batch + b) * d + c]);
        for (std::size_t s = 0; s <= t; ++s) shift.data[(s * batch + b) * d + c] = mx;
      }
    }
    const Value weights = exp(sub(e, g.input(std::move(shift))));
    Tensor select = Tensor::zeros({batch, keys});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t s = 0; s <= t; ++s) select.data[b * keys + s * batch + b] = 1.0;
    }
    const Value sel = g.input(std::move(select));
    const Value num = matmul(sel, mul(weights, prefix_rows(v, keys)));
    const Value den = matmul(sel, weights);
    out.push_back(divide(num, den));
  }
  return concat(out, 0);
}

AccumulatorStep rwkv_attn_recurrent(Value a, Value b, Value k_t, Value v_t, Value w, Value u) {
  const Value bonus = exp(add(k_t, u));
  const Value out = divide(add(a, mul(bonus, v_t)), add(b, bonus));
  const Value z = exp(scale(w, -1.0));
  const Value ek = exp(k_t);
  return {out, add(mul(a, z), mul(ek, v_t)), add(mul(b, z), ek)};
}

Value linear_attn_parallel(Value q, Value k, Value v, std::size_t batch, Nonlinearity phi) {
  Graph& g = q.graph();
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.shape().size() != 2) {
    throw ShapeError("linear attention: q/k/v shapes differ");
  }
  const std::size_t steps = time_steps(q, batch);
  const std::size_t dh = q.shape()[1];
  const Value fq = nonlinearity(q, phi);
  const Value fkT = transpose(nonlinearity(k, phi));
  std::vector<Value> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t keys = (t + 1) * batch;
    Value s = matmul(slice(fq, 0, t * batch, (t + 1) * batch), prefix_cols(fkT, keys));
    if (batch > 1) s = mul(s, g.input(batch_mask(t, batch, {}, false)));
    const Value num = matmul(s, prefix_rows(v, keys));
    const Value den = matmul(s, g.input(Tensor::filled({keys, dh}, 1.0)));
    out.push_back(divide(num, den));
  }
  return concat(out, 0);
}

AccumulatorStep linear_attn_recurrent(Value a, Value b, Value q_t, Value k_t, Value v_t,
                                      Nonlinearity phi) {
  Graph& g = a.graph();
  const std::size_t batch = q_t.shape().at(0);
  const std::size_t dh = q_t.shape().at(1);
  if (a.shape() != Shape{batch * dh, dh} || b.shape() != Shape{batch, dh}) {
    throw ShapeError(fmt::format("linear attention: state {} / {} does not match query {}",
                                 shape_to_string(a.shape()), shape_to_string(b.shape()),
                                 shape_to_string(q_t.shape())));
  }
  const Value fq = nonlinearity(q_t, phi);
  const Value fk = nonlinearity(k_t, phi);
  // Rank-1 update per sequence: row b*dh+i gains fk[b,i] * v[b,:].
  const Value fk_rows = expand(reshape(fk, {batch * dh, 1}), {batch * dh, dh});
  const Value v_rows = reshape(expand(reshape(v_t, {batch, 1, dh}), {batch, dh, dh}), {batch * dh, dh});
  const Value a_next = add(a, mul(fk_rows, v_rows));
  const Value b_next = add(b, fk);
  Value num;
  if (batch == 1) {
    num = matmul(fq, a_next);
  } else {
    // Block-diagonal query so that sequence b only reads its own a_b.
    const std::vector<Value> tiles(batch, fq);
    Tensor mask = Tensor::zeros({batch, batch * dh});
    for (std::size_t r = 0; r < batch; ++r) {
      std::fill_n(mask.data.begin() + r * batch * dh + r * dh, dh, 1.0);
    }
    num = matmul(mul(concat(tiles, 1), g.input(std::move(mask))), a_next);
  }
  const Value den = matmul(mul(fq, b_next), g.input(Tensor::filled({dh, 1}, 1.0)));
  return {divide(num, expand(den, {batch, dh})), a_next, b_next};
}

}  // namespace rlab
