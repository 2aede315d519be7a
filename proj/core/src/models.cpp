// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rlab/errors.hpp"
#include "rlab/rng.hpp"
#include "rlab/tasks.hpp"

namespace rlab {
namespace {

struct ParamSpec {
  std::string name;
  Shape shape;
  enum class Init { kNormal, kZero, kOne, kEmbed, kDecay, kForgetBias } init = Init::kNormal;
};

std::string layer_key(std::size_t l, std::string_view role) { return fmt::format("layer{}.{}", l, role); }

std::size_t param_layers(const ModelConfig& c) {
  return c.arch == Arch::kUniversalTransformer ? 1 : c.n_layers;
}

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
  using I = ParamSpec::Init;
  const std::size_t d = c.d_model;
  const std::size_t f = d * c.ffn_multiplier;
  std::vector<ParamSpec> s;
  s.push_back({"embed", {c.vocab_size, d}, I::kEmbed});
  auto ffn = [&](std::size_t l) {
    s.push_back({layer_key(l, "ffn_w1"), {d, f}});
    s.push_back({layer_key(l, "ffn_b1"), {f}, I::kZero});
    s.push_back({layer_key(l, "ffn_w2"), {f, d}});
    s.push_back({layer_key(l, "ffn_b2"), {d}, I::kZero});
  };
  switch (c.arch) {
    case Arch::kMlp:
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        s.push_back({layer_key(l, "w"), {d, d}});
        s.push_back({layer_key(l, "b"), {d}, I::kZero});
      }
      break;
    case Arch::kRnn:
    case Arch::kStackRnn:
    case Arch::kTapeRnn:
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        s.push_back({layer_key(l, "w_x"), {d, d}});
        s.push_back({layer_key(l, "w_h"), {d, d}});
        s.push_back({layer_key(l, "b"), {d}, I::kZero});
      }
      if (c.arch != Arch::kRnn) {
        const std::size_t w = c.memory_width;
        s.push_back({"memory.w_action", {d, 3}});
        s.push_back({"memory.b_action", {3}, I::kZero});
        s.push_back({"memory.w_value", {d, w}});
        s.push_back({"memory.b_value", {w}, I::kZero});
        s.push_back({"memory.w_read", {w, d}});
      }
      break;
    case Arch::kLstm:
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        s.push_back({layer_key(l, "w_x"), {d, 4 * d}});
        s.push_back({layer_key(l, "w_h"), {d, 4 * d}});
        s.push_back({layer_key(l, "b"), {4 * d}, I::kForgetBias});
      }
      break;
    case Arch::kRwkv:
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        s.push_back({layer_key(l, "wk"), {d, d}});
        s.push_back({layer_key(l, "wv"), {d, d}});
        s.push_back({layer_key(l, "wo"), {d, d}});
        s.push_back({layer_key(l, "time_decay"), {d}, I::kDecay});
        s.push_back({layer_key(l, "time_first"), {d}, I::kZero});
        ffn(l);
      }
      break;
    default:  // softmax and linear attention stacks
      for (std::size_t l = 0; l < param_layers(c); ++l) {
        for (const char* role : {"wq", "wk", "wv", "wo"}) s.push_back({layer_key(l, role), {d, d}});
        ffn(l);
      }
      break;
  }
  s.push_back({"readout.w", {d, c.vocab_size}});
  s.push_back({"readout.b", {c.vocab_size}, I::kZero});
  return s;
}

const Value& param(const BoundParams& p, const std::string& name) {
  const auto it = p.find(name);
  if (it == p.end()) throw ValidationError(fmt::format("missing parameter '{}'", name));
  return it->second;
}

const Value& lp(const BoundParams& p, std::size_t l, std::string_view role) {
  return param(p, layer_key(l, role));
}

std::vector<std::size_t> to_rows(std::span<const int> ids, std::size_t vocab) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ValidationError(fmt::format("token id {} outside vocabulary of size {}", id, vocab));
    }
    rows.push_back(static_cast<std::size_t>(id));
  }
  return rows;
}

Value readout(const BoundParams& p, Value h) {
  return add(matmul(h, param(p, "readout.w")), param(p, "readout.b"));
}

Value final_norm(const ModelConfig& c, Value h) { return c.residual ? layer_norm(h) : h; }

Value pre_norm(const ModelConfig& c, Value h) { return c.residual ? layer_norm(h) : h; }

Value residual_add(const ModelConfig& c, Value h, Value branch) { return c.residual ? add(h, branch) : branch; }

Value ffn_block(const ModelConfig& c, const BoundParams& p, std::size_t l, Value h) {
  const Value f = pre_norm(c, h);
  const Value inner = relu(add(matmul(f, lp(p, l, "ffn_w1")), lp(p, l, "ffn_b1")));
  return residual_add(c, h, add(matmul(inner, lp(p, l, "ffn_w2")), lp(p, l, "ffn_b2")));
}

// Time-major positional codes for positions [t0, t0 + steps), repeated per sequence.
Tensor positional_rows(std::size_t t0, std::size_t steps, std::size_t batch, std::size_t d) {
  Tensor pe = Tensor::zeros({steps * batch, d});
  for (std::size_t t = 0; t < steps; ++t) {
    const auto code = positional_code(t0 + t, d);
    for (std::size_t b = 0; b < batch; ++b) std::copy(code.begin(), code.end(), pe.data.begin() + (t * batch + b) * d);
  }
  return pe;
}

std::vector<std::size_t> time_major_rows(const Batch& batch, std::size_t vocab) {
  std::vector<int> ids(batch.batch * batch.length);
  for (std::size_t t = 0; t < batch.length; ++t) {
    for (std::size_t b = 0; b < batch.batch; ++b) ids[t * batch.batch + b] = batch.at(b, t);
  }
  return to_rows(ids, vocab);
}

// Embeds every position of `batch` (time-major), plus positional codes where used.
Value embed_all(Graph& g, const ModelConfig& c, const BoundParams& p, const Batch& batch) {
  Value x = gather_rows(param(p, "embed"), time_major_rows(batch, c.vocab_size));
  if (c.uses_positional_encoding()) x = add(x, g.input(positional_rows(0, batch.length, batch.batch, c.d_model)));
  return x;
}

Value embed_step(Graph& g, const ModelConfig& c, const BoundParams& p, std::span<const int> tokens,
                 std::size_t position) {
  Value x = gather_rows(param(p, "embed"), to_rows(tokens, c.vocab_size));
  if (c.uses_positional_encoding()) x = add(x, g.input(positional_rows(position, 1, tokens.size(), c.d_model)));
  return x;
}

std::vector<char> key_validity(const Batch& batch) {
  std::vector<char> valid(batch.batch * batch.length, 1);
  bool any_pad = false;
  for (std::size_t t = 0; t < batch.length; ++t) {
    for (std::size_t b = 0; b < batch.batch; ++b) {
      if (batch.at(b, t) == Vocab::kPad) {
        valid[t * batch.batch + b] = 0;
        any_pad = true;
      }
    }
  }
  return any_pad ? valid : std::vector<char>{};
}

Value attention_layer_batch(const ModelConfig& c, const BoundParams& p, std::size_t l, Value h,
                            std::size_t batch, const std::vector<char>& valid) {
  const Value a = pre_norm(c, h);
  const Value q = matmul(a, lp(p, l, "wq"));
  const Value k = matmul(a, lp(p, l, "wk"));
  const Value v = matmul(a, lp(p, l, "wv"));
  Value att;
  if (c.arch == Arch::kLinearTransformer) {
    std::vector<Value> heads;
    for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
      auto cols = [&](Value x) { return c.n_heads == 1 ? x : slice(x, 1, hd * c.d_head(), (hd + 1) * c.d_head()); };
      heads.push_back(linear_attn_parallel(cols(q), cols(k), cols(v), batch, c.feature_map));
    }
    att = heads.size() == 1 ? heads[0] : concat(heads, 1);
  } else {
    att = causal_attention(q, k, v, c.n_heads, batch, c.scale_scores, valid);
  }
  return ffn_block(c, p, l, residual_add(c, h, matmul(att, lp(p, l, "wo"))));
}

Value attention_layer_step(const ModelConfig& c, const BoundParams& p, std::size_t l, Value h,
                           GraphState& s) {
  const Value a = pre_norm(c, h);
  const Value q = matmul(a, lp(p, l, "wq"));
  s.keys[l].push_back(matmul(a, lp(p, l, "wk")));
  s.values[l].push_back(matmul(a, lp(p, l, "wv")));
  const Value k = s.keys[l].size() == 1 ? s.keys[l][0] : concat(s.keys[l], 0);
  const Value v = s.values[l].size() == 1 ? s.values[l][0] : concat(s.values[l], 0);
  const Value att = cached_attention(q, k, v, c.n_heads, s.batch, c.scale_scores, s.key_valid);
  return ffn_block(c, p, l, residual_add(c, h, matmul(att, lp(p, l, "wo"))));
}

Value rwkv_layer_batch(const ModelConfig& c, const BoundParams& p, std::size_t l, Value h, std::size_t batch) {
  const Value a = pre_norm(c, h);
  const Value att = rwkv_attn_parallel(matmul(a, lp(p, l, "wk")), matmul(a, lp(p, l, "wv")),
                                       exp(lp(p, l, "time_decay")), lp(p, l, "time_first"), batch);
  return ffn_block(c, p, l, residual_add(c, h, matmul(att, lp(p, l, "wo"))));
}

Value mlp_forward(Graph& g, const ModelConfig& c, const BoundParams& p, const Batch& batch) {
  const std::size_t rows = batch.batch * batch.length;
  // Causal prefix mean: row t*B+b averages positions 0..t of sequence b.
  Tensor pool = Tensor::zeros({rows, rows});
  for (std::size_t t = 0; t < batch.length; ++t) {
    for (std::size_t b = 0; b < batch.batch; ++b) {
      for (std::size_t s = 0; s <= t; ++s) {
        pool.data[(t * batch.batch + b) * rows + s * batch.batch + b] = 1.0 / static_cast<double>(t + 1);
      }
    }
  }
  Value h = matmul(g.input(std::move(pool)), gather_rows(param(p, "embed"), time_major_rows(batch, c.vocab_size)));
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    h = nonlinearity(add(matmul(h, lp(p, l, "w")), lp(p, l, "b")), c.activation);
  }
  return h;
}

Value block_forward(Graph& g, const ModelConfig& c, const BoundParams& p, const Batch& batch,
                    const std::vector<char>& valid) {
  const Value x = embed_all(g, c, p, batch);
  const std::size_t B = batch.batch;
  std::vector<Value> tops;
  Value carry;
  for (std::size_t start = 0; start < batch.length; start += c.block_size) {
    const std::size_t end = std::min(batch.length, start + c.block_size);
    const std::size_t len = end - start;
    Value h = (start == 0 && end == batch.length) ? x : slice(x, 0, start * B, end * B);
    if (carry.valid()) {
      const std::vector<Value> copies(len, carry);
      h = add(h, concat(copies, 0));
    }
    std::vector<char> block_valid;
    if (!valid.empty()) block_valid.assign(valid.begin() + static_cast<long>(start * B), valid.begin() + static_cast<long>(end * B));
    for (std::size_t l = 0; l < c.n_layers; ++l) h = attention_layer_batch(c, p, l, h, B, block_valid);
    const Value top = final_norm(c, h);
    tops.push_back(top);
    carry = slice(top, 0, (len - 1) * B, len * B);
  }
  return concat(tops, 0);
}

// Top hidden for the whole batch using the arch's parallel/batch form.
Value batch_hidden(Graph& g, const ModelConfig& c, const BoundParams& p, const Batch& batch) {
  const std::vector<char> valid = key_validity(batch);
  switch (c.arch) {
    case Arch::kMlp: return mlp_forward(g, c, p, batch);
    case Arch::kTransformer:
    case Arch::kLinearTransformer: {
      Value h = embed_all(g, c, p, batch);
      for (std::size_t l = 0; l < c.n_layers; ++l) h = attention_layer_batch(c, p, l, h, batch.batch, valid);
      return final_norm(c, h);
    }
    case Arch::kUniversalTransformer: {
      const std::size_t steps = c.universal_steps(batch.length);
      Value h = embed_all(g, c, p, batch);
      for (std::size_t i = 0; i < steps; ++i) h = attention_layer_batch(c, p, 0, h, batch.batch, valid);
      return final_norm(c, h);
    }
    case Arch::kBlockRecurrentTransformer: return block_forward(g, c, p, batch, valid);
    case Arch::kRwkv: {
      Value h = embed_all(g, c, p, batch);
      for (std::size_t l = 0; l < c.n_layers; ++l) h = rwkv_layer_batch(c, p, l, h, batch.batch);
      return final_norm(c, h);
    }
    default:
      throw ValidationError(fmt::format("{} has no parallel form", arch_name(c.arch)));
  }
}

bool has_parallel(Arch a) {
  return a == Arch::kMlp || a == Arch::kTransformer || a == Arch::kLinearTransformer ||
         a == Arch::kUniversalTransformer || a == Arch::kBlockRecurrentTransformer || a == Arch::kRwkv;
}

Value zeros_input(Graph& g, Shape s) { return g.input(Tensor::zeros(std::move(s))); }

// Advances the state by one token per sequence and returns the top hidden.
Value step_hidden(Graph& g, const ModelConfig& c, const BoundParams& p, GraphState& s,
                  std::span<const int> tokens) {
  if (!has_step(c.arch)) throw ValidationError(fmt::format("{} has no step function", arch_name(c.arch)));
  if (tokens.size() != s.batch) {
    throw ValidationError(fmt::format("step: {} tokens for a state of batch {}", tokens.size(), s.batch));
  }
  const std::size_t t = s.position;
  const auto valid_rows = [&] {
    for (int tok : tokens) s.key_valid.push_back(tok == Vocab::kPad ? 0 : 1);
  };
  Value top;
  switch (c.arch) {
    case Arch::kRnn:
    case Arch::kStackRnn:
    case Arch::kTapeRnn:
    case Arch::kLstm: {
      Value in = embed_step(g, c, p, tokens, t);
      const bool memory = c.arch == Arch::kStackRnn || c.arch == Arch::kTapeRnn;
      if (memory) in = add(in, matmul(slice(s.memory[0], 1, 0, c.memory_width), param(p, "memory.w_read")));
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        if (c.arch == Arch::kLstm) {
          const LstmOut o = lstm_cell(in, s.hidden[l], s.cell[l], lp(p, l, "w_x"), lp(p, l, "w_h"), lp(p, l, "b"));
          s.hidden[l] = o.h;
          s.cell[l] = o.c;
        } else {
          s.hidden[l] = rnn_cell(in, s.hidden[l], lp(p, l, "w_x"), lp(p, l, "w_h"), lp(p, l, "b"), c.activation);
        }
        in = s.hidden[l];
      }
      top = in;
      if (memory) {
        const Value act = softmax(add(matmul(top, param(p, "memory.w_action")), param(p, "memory.b_action")));
        const Value val = tanh(add(matmul(top, param(p, "memory.w_value")), param(p, "memory.b_value")));
        s.memory[0] = c.arch == Arch::kStackRnn ? soft_stack_update(s.memory[0], act, val, c.memory_width)
                                                : soft_tape_update(s.memory[0], act, val, c.memory_width);
      }
      break;
    }
    case Arch::kTransformer:
    case Arch::kRecurrentTransformer: {
      Value h = embed_step(g, c, p, tokens, t);
      if (c.arch == Arch::kRecurrentTransformer && !c.ablate_recurrence) h = add(h, s.hidden[0]);
      valid_rows();
      for (std::size_t l = 0; l < c.n_layers; ++l) h = attention_layer_step(c, p, l, h, s);
      top = final_norm(c, h);
      if (c.arch == Arch::kRecurrentTransformer) s.hidden[0] = top;
      break;
    }
    case Arch::kBlockRecurrentTransformer: {
      if (t > 0 && t % c.block_size == 0) {
        s.hidden[0] = s.hidden[1];
        for (auto& k : s.keys) k.clear();
        for (auto& v : s.values) v.clear();
        s.key_valid.clear();
      }
      Value h = embed_step(g, c, p, tokens, t);
      if (t >= c.block_size) h = add(h, s.hidden[0]);
      valid_rows();
      for (std::size_t l = 0; l < c.n_layers; ++l) h = attention_layer_step(c, p, l, h, s);
      top = final_norm(c, h);
      s.hidden[1] = top;
      break;
    }
    case Arch::kFeedbackTransformer: {
      Value h = embed_step(g, c, p, tokens, t);
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        const Value a = pre_norm(c, h);
        std::vector<Value> rows = s.window;
        rows.push_back(a);
        const Value mem = rows.size() == 1 ? a : concat(rows, 0);
        const Value att = cached_attention(matmul(a, lp(p, l, "wq")), matmul(mem, lp(p, l, "wk")),
                                           matmul(mem, lp(p, l, "wv")), c.n_heads, s.batch, c.scale_scores);
        h = ffn_block(c, p, l, residual_add(c, h, matmul(att, lp(p, l, "wo"))));
      }
      top = final_norm(c, h);
      s.window.push_back(top);
      if (s.window.size() > c.block_size) s.window.erase(s.window.begin());
      break;
    }
    case Arch::kRwkv: {
      Value h = embed_step(g, c, p, tokens, t);
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        const Value a = pre_norm(c, h);
        const AccumulatorStep r = rwkv_attn_recurrent(s.acc_a[l], s.acc_b[l], matmul(a, lp(p, l, "wk")),
                                                      matmul(a, lp(p, l, "wv")), exp(lp(p, l, "time_decay")),
                                                      lp(p, l, "time_first"));
        s.acc_a[l] = r.a;
        s.acc_b[l] = r.b;
        h = ffn_block(c, p, l, residual_add(c, h, matmul(r.out, lp(p, l, "wo"))));
      }
      top = final_norm(c, h);
      break;
    }
    case Arch::kLinearTransformer: {
      Value h = embed_step(g, c, p, tokens, t);
      const std::size_t dh = c.d_head();
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        const Value a = pre_norm(c, h);
        const Value q = matmul(a, lp(p, l, "wq"));
        const Value k = matmul(a, lp(p, l, "wk"));
        const Value v = matmul(a, lp(p, l, "wv"));
        std::vector<Value> heads;
        for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
          auto cols = [&](Value x) { return c.n_heads == 1 ? x : slice(x, 1, hd * dh, (hd + 1) * dh); };
          const std::size_t i = l * c.n_heads + hd;
          const AccumulatorStep r = linear_attn_recurrent(s.acc_a[i], s.acc_b[i], cols(q), cols(k), cols(v), c.feature_map);
          s.acc_a[i] = r.a;
          s.acc_b[i] = r.b;
          heads.push_back(r.out);
        }
        const Value att = heads.size() == 1 ? heads[0] : concat(heads, 1);
        h = ffn_block(c, p, l, residual_add(c, h, matmul(att, lp(p, l, "wo"))));
      }
      top = final_norm(c, h);
      break;
    }
    default:
      throw ValidationError(fmt::format("{} has no step function", arch_name(c.arch)));
  }
  ++s.position;
  return top;
}

// ---- little-endian byte helpers -------------------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint64_t uint(std::size_t width) {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint: truncated", pos_);
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "RLABCKPT";

}  // namespace

// ---- names ----------------------------------------------------------------------

std::string_view arch_name(Arch arch) noexcept {
  switch (arch) {
    case Arch::kMlp: return "mlp";
    case Arch::kRnn: return "rnn";
    case Arch::kLstm: return "lstm";
    case Arch::kStackRnn: return "stack-rnn";
    case Arch::kTapeRnn: return "tape-rnn";
    case Arch::kTransformer: return "transformer";
    case Arch::kRecurrentTransformer: return "recurrent-transformer";
    case Arch::kFeedbackTransformer: return "feedback-transformer";
    case Arch::kBlockRecurrentTransformer: return "block-recurrent-transformer";
    case Arch::kUniversalTransformer: return "universal-transformer";
    case Arch::kRwkv: return "rwkv";
    case Arch::kLinearTransformer: return "linear-transformer";
  }
  return "?";
}

Arch parse_arch(std::string_view name) {
  for (Arch a : kAllArchs) {
    if (name == arch_name(a)) return a;
  }
  static const std::pair<std::string_view, Arch> kAliases[] = {
      {"recurrent", Arch::kRecurrentTransformer}, {"feedback", Arch::kFeedbackTransformer},
      {"block-recurrent", Arch::kBlockRecurrentTransformer}, {"block", Arch::kBlockRecurrentTransformer},
      {"universal", Arch::kUniversalTransformer}, {"linear", Arch::kLinearTransformer},
  };
  for (const auto& [alias, a] : kAliases) {
    if (name == alias) return a;
  }
  throw ValidationError(fmt::format("unknown arch '{}'", name));
}

bool has_step(Arch arch) noexcept { return arch != Arch::kMlp && arch != Arch::kUniversalTransformer; }

bool is_recurrence_incomplete(Arch arch) noexcept {
  return arch == Arch::kRwkv || arch == Arch::kLinearTransformer;
}

bool is_attention_arch(Arch arch) noexcept {
  switch (arch) {
    case Arch::kTransformer:
    case Arch::kRecurrentTransformer:
    case Arch::kFeedbackTransformer:
    case Arch::kBlockRecurrentTransformer:
    case Arch::kUniversalTransformer:
    case Arch::kLinearTransformer: return true;
    default: return false;
  }
}

// ---- config -------------------------------------------------------------------------

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw ValidationError("model config: " + why); };
  if (vocab_size < 3) fail("vocab-size must be at least 3 (PAD, SEP, PLACEHOLDER)");
  if (d_model == 0) fail("d-model must be positive");
  if (n_layers == 0) fail("n-layers must be positive");
  if (n_heads == 0 || d_model % n_heads != 0) fail(fmt::format("d-model {} not divisible by n-heads {}", d_model, n_heads));
  if (block_size == 0) fail("block-size must be at least 1");
  if (block_size == kUnboundedWindow && arch != Arch::kFeedbackTransformer) {
    fail("an unbounded block-size is only allowed for the feedback transformer");
  }
  if (max_halting_steps == 0) fail("max-halting-steps must be at least 1");
  if (halting_steps > max_halting_steps) fail("halting-steps exceeds max-halting-steps");
  if (!(halting_alpha > 0.0)) fail("halting-alpha must be positive");
  if (ffn_multiplier == 0) fail("ffn-multiplier must be positive");
  if (memory_width == 0) fail("memory-width must be positive");
  if (feature_map != Nonlinearity::kEluPlusOne) fail("feature-map must be elu_plus_one");
}

bool ModelConfig::uses_positional_encoding() const {
  return positional_encoding && is_attention_arch(arch) && arch != Arch::kLinearTransformer;
}

std::size_t ModelConfig::universal_steps(std::size_t n) const {
  const std::size_t t = halting_steps != 0
                            ? halting_steps
                            : static_cast<std::size_t>(std::ceil(halting_alpha * static_cast<double>(n)));
  if (t < 1 || t > max_halting_steps) {
    throw ValidationError(fmt::format("universal transformer: T = {} outside [1, {}]", t, max_halting_steps));
  }
  return t;
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["arch"] = std::string(arch_name(arch));
  j["vocab-size"] = vocab_size;
  j["d-model"] = d_model;
  j["n-layers"] = n_layers;
  j["n-heads"] = n_heads;
  if (block_size == kUnboundedWindow) j["block-size"] = "inf";
  else j["block-size"] = block_size;
  j["max-halting-steps"] = max_halting_steps;
  j["halting-steps"] = halting_steps;
  j["halting-alpha"] = halting_alpha;
  j["ffn-multiplier"] = ffn_multiplier;
  j["memory-width"] = memory_width;
  j["memory-slack"] = memory_slack;
  j["activation"] = nonlinearity_name(activation);
  j["feature-map"] = nonlinearity_name(feature_map);
  j["scale-scores"] = scale_scores;
  j["residual"] = residual;
  j["positional-encoding"] = positional_encoding;
  j["ablate-recurrence"] = ablate_recurrence;
  j["seed"] = seed;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("model config must be an object");
  ModelConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "arch") c.arch = parse_arch(v.get<std::string>());
      else if (key == "vocab-size") c.vocab_size = v.get<std::size_t>();
      else if (key == "d-model") c.d_model = v.get<std::size_t>();
      else if (key == "n-layers") c.n_layers = v.get<std::size_t>();
      else if (key == "n-heads") c.n_heads = v.get<std::size_t>();
      else if (key == "block-size") c.block_size = v.is_string() && v.get<std::string>() == "inf" ? kUnboundedWindow : v.get<std::size_t>();
      else if (key == "max-halting-steps") c.max_halting_steps = v.get<std::size_t>();
      else if (key == "halting-steps") c.halting_steps = v.get<std::size_t>();
      else if (key == "halting-alpha") c.halting_alpha = v.get<double>();
      else if (key == "ffn-multiplier") c.ffn_multiplier = v.get<std::size_t>();
      else if (key == "memory-width") c.memory_width = v.get<std::size_t>();
      else if (key == "memory-slack") c.memory_slack = v.get<std::size_t>();
      else if (key == "activation") c.activation = parse_nonlinearity(v.get<std::string>());
      else if (key == "feature-map") c.feature_map = parse_nonlinearity(v.get<std::string>());
      else if (key == "scale-scores") c.scale_scores = v.get<bool>();
      else if (key == "residual") c.residual = v.get<bool>();
      else if (key == "positional-encoding") c.positional_encoding = v.get<bool>();
      else if (key == "ablate-recurrence") c.ablate_recurrence = v.get<bool>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw ValidationError(fmt::format("model config: unknown key '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("model config: {}", e.what()));
  }
  return c;
}

// ---- params --------------------------------------------------------------------------

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, seed_stream::kModelInit));
  ModelParams params;
  for (const ParamSpec& s : param_specs(config)) {
    Tensor t = Tensor::zeros(s.shape);
    const std::size_t n = t.size();
    switch (s.init) {
      case ParamSpec::Init::kZero: break;
      case ParamSpec::Init::kOne: std::fill(t.data.begin(), t.data.end(), 1.0); break;
      case ParamSpec::Init::kEmbed:
        for (double& v : t.data) v = rng.normal();
        break;
      case ParamSpec::Init::kNormal: {
        const double sd = 1.0 / std::sqrt(static_cast<double>(s.shape[0]));
        for (double& v : t.data) v = sd * rng.normal();
        break;
      }
      case ParamSpec::Init::kDecay:
        // w = exp(time_decay) spans [e^-1, e^1] across channels.
        for (std::size_t i = 0; i < n; ++i) t.data[i] = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        break;
      case ParamSpec::Init::kForgetBias: {
        const std::size_t d = n / 4;
        std::fill(t.data.begin() + static_cast<long>(d), t.data.begin() + static_cast<long>(2 * d), 1.0);
        break;
      }
    }
    params.emplace(s.name, std::move(t));
  }
  return params;
}

BoundParams bind(Graph& g, const ModelParams& params) {
  BoundParams bound;
  for (const auto& [name, t] : params) bound.emplace(name, g.parameter(t, name));
  return bound;
}

void check_params(const ModelConfig& config, const ModelParams& params) {
  config.validate();
  const auto specs = param_specs(config);
  for (const ParamSpec& s : specs) {
    const auto it = params.find(s.name);
    if (it == params.end()) throw ValidationError(fmt::format("missing parameter '{}'", s.name));
    if (it->second.shape != s.shape) {
      throw ValidationError(fmt::format("parameter '{}' has shape {}, expected {}", s.name,
                                        shape_to_string(it->second.shape), shape_to_string(s.shape)));
    }
    for (double v : it->second.data) {
      if (!std::isfinite(v)) throw ValidationError(fmt::format("parameter '{}' is not finite", s.name));
    }
  }
  if (params.size() != specs.size()) throw ValidationError("unexpected extra parameters for this arch");
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto& [_, t] : params) n += t.size();
  return n;
}

// ---- batches ----------------------------------------------------------------------------

std::vector<int> Batch::column(std::size_t t) const {
  std::vector<int> col(batch);
  for (std::size_t b = 0; b < batch; ++b) col[b] = at(b, t);
  return col;
}

Batch Batch::single(std::span<const int> ids) { return Batch{1, ids.size(), {ids.begin(), ids.end()}}; }

Batch Batch::from_sequences(const std::vector<std::vector<int>>& sequences) {
  Batch out;
  out.batch = sequences.size();
  for (const auto& s : sequences) out.length = std::max(out.length, s.size());
  out.ids.assign(out.batch * out.length, Vocab::kPad);
  for (std::size_t b = 0; b < out.batch; ++b) std::copy(sequences[b].begin(), sequences[b].end(), out.ids.begin() + static_cast<long>(b * out.length));
  return out;
}

// ---- forward / step -------------------------------------------------------------------------

ForwardOutput model_forward(Graph& g, const ModelConfig& config, const BoundParams& params,
                            const Batch& batch, ForwardMode mode) {
  config.validate();
  if (batch.batch == 0 || batch.length == 0) throw ValidationError("model_forward: empty batch");
  if (batch.ids.size() != batch.batch * batch.length) throw ValidationError("model_forward: malformed batch");
  const bool parallel = mode == ForwardMode::kParallel ||
                        (mode == ForwardMode::kDefault && has_parallel(config.arch));
  if (mode == ForwardMode::kParallel && !has_parallel(config.arch)) {
    throw ValidationError(fmt::format("{} has no parallel form", arch_name(config.arch)));
  }
  Value hidden;
  if (parallel) {
    hidden = batch_hidden(g, config, params, batch);
  } else {
    GraphState state = initial_state(g, config, batch.batch, batch.length);
    std::vector<Value> rows;
    rows.reserve(batch.length);
    for (std::size_t t = 0; t < batch.length; ++t) {
      rows.push_back(step_hidden(g, config, params, state, batch.column(t)));
    }
    hidden = concat(rows, 0);
  }
  return {hidden, readout(params, hidden)};
}

Tensor forward_logits(const ModelConfig& config, const ModelParams& params, std::span<const int> ids,
                      ForwardMode mode) {
  Graph g;
  const BoundParams p = bind(g, params);
  return model_forward(g, config, p, Batch::single(ids), mode).logits.data();
}

GraphState initial_state(Graph& g, const ModelConfig& c, std::size_t batch, std::size_t seq_len) {
  c.validate();
  if (!has_step(c.arch)) throw ValidationError(fmt::format("{} has no step function", arch_name(c.arch)));
  if (batch == 0) throw ValidationError("initial_state: batch must be positive");
  GraphState s;
  s.batch = batch;
  s.capacity = seq_len;
  const std::size_t d = c.d_model;
  switch (c.arch) {
    case Arch::kRnn:
    case Arch::kStackRnn:
    case Arch::kTapeRnn:
    case Arch::kLstm:
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        s.hidden.push_back(zeros_input(g, {batch, d}));
        if (c.arch == Arch::kLstm) s.cell.push_back(zeros_input(g, {batch, d}));
      }
      if (c.arch == Arch::kStackRnn || c.arch == Arch::kTapeRnn) {
        s.memory.push_back(zeros_input(g, {batch, (seq_len + c.memory_slack) * c.memory_width}));
        if (seq_len + c.memory_slack == 0) throw ValidationError("memory needs at least one cell");
      }
      break;
    case Arch::kTransformer:
    case Arch::kRecurrentTransformer:
    case Arch::kBlockRecurrentTransformer:
      s.keys.resize(c.n_layers);
      s.values.resize(c.n_layers);
      if (c.arch == Arch::kRecurrentTransformer) s.hidden.push_back(zeros_input(g, {batch, d}));
      if (c.arch == Arch::kBlockRecurrentTransformer) {
        s.hidden.push_back(zeros_input(g, {batch, d}));
        s.hidden.push_back(zeros_input(g, {batch, d}));
      }
      break;
    case Arch::kFeedbackTransformer: break;
    case Arch::kRwkv:
      for (std::size_t l = 0; l < c.n_layers; ++l) {
        s.acc_a.push_back(zeros_input(g, {batch, d}));
        s.acc_b.push_back(zeros_input(g, {batch, d}));
      }
      break;
    case Arch::kLinearTransformer:
      for (std::size_t i = 0; i < c.n_layers * c.n_heads; ++i) {
        s.acc_a.push_back(zeros_input(g, {batch * c.d_head(), c.d_head()}));
        s.acc_b.push_back(zeros_input(g, {batch, c.d_head()}));
      }
      break;
    default: break;
  }
  return s;
}

namespace {

template <class To, class From, class F>
StateOf<To> convert_state(const StateOf<From>& in, F&& f) {
  StateOf<To> out;
  out.position = in.position;
  out.batch = in.batch;
  out.capacity = in.capacity;
  out.key_valid = in.key_valid;
  auto each = [&](const std::vector<From>& v) {
    std::vector<To> r;
    r.reserve(v.size());
    for (const auto& x : v) r.push_back(f(x));
    return r;
  };
  out.hidden = each(in.hidden);
  out.cell = each(in.cell);
  out.memory = each(in.memory);
  for (const auto& k : in.keys) out.keys.push_back(each(k));
  for (const auto& v : in.values) out.values.push_back(each(v));
  out.window = each(in.window);
  out.acc_a = each(in.acc_a);
  out.acc_b = each(in.acc_b);
  return out;
}

}  // namespace

SequentialState snapshot(const GraphState& state) {
  return convert_state<Tensor>(state, [](const Value& v) { return v.data(); });
}

GraphState restore(Graph& g, const SequentialState& state) {
  return convert_state<Value>(state, [&](const Tensor& t) { return g.input(t); });
}

std::size_t state_bytes(const SequentialState& s) {
  std::size_t n = 0;
  auto add_all = [&](const std::vector<Tensor>& v) {
    for (const auto& t : v) n += t.size() * sizeof(double);
  };
  add_all(s.hidden);
  add_all(s.cell);
  add_all(s.memory);
  for (const auto& k : s.keys) add_all(k);
  for (const auto& v : s.values) add_all(v);
  add_all(s.window);
  add_all(s.acc_a);
  add_all(s.acc_b);
  return n;
}

StepOutput model_step(Graph& g, const ModelConfig& config, const BoundParams& params, GraphState& state,
                      std::span<const int> tokens) {
  const Value top = step_hidden(g, config, params, state, tokens);
  return {top, readout(params, top)};
}

// ---- checkpoints ------------------------------------------------------------------------------

std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out(kMagic);
  put_u32(out, kCheckpointVersion);
  nlohmann::ordered_json header;
  header["config"] = ck.config.to_json();
  header["metadata"] = ck.metadata;
  const std::string text = header.dump();
  put_u64(out, text.size());
  out += text;
  put_u64(out, ck.params.size());
  for (const auto& [name, t] : ck.params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t dim : t.shape) put_u64(out, dim);
    for (double v : t.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) throw ParseError("checkpoint: bad magic", 0);
  const auto version = r.uint(4);
  if (version != kCheckpointVersion) {
    throw ValidationError(fmt::format("checkpoint: unsupported version {}", version));
  }
  Checkpoint ck;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.take(r.uint(8)));
    ck.config = ModelConfig::from_json(header.at("config"));
    ck.metadata = header.value("metadata", nlohmann::ordered_json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("checkpoint: bad header: {}", e.what()));
  }
  const auto count = r.uint(8);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(r.take(r.uint(4)));
    Shape shape(r.uint(4));
    for (auto& dim : shape) dim = r.uint(8);
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.data) v = std::bit_cast<double>(r.uint(8));
    ck.params.emplace(std::move(name), std::move(t));
  }
  if (!r.done()) throw ValidationError("checkpoint: trailing bytes");
  check_params(ck.config, ck.params);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write checkpoint '{}'", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(fmt::format("failed writing checkpoint '{}'", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read checkpoint '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace rlab
