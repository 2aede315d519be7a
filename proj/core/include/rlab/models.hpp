// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// The architecture zoo. Every model maps a grid of token ids to one logit row
// per position; the trainer reads the rows at placeholder positions.
//
// Layout conventions
//   * Row vectors: a layer computes h W + b.
//   * Batched activations are time-major: row t*B + b holds position t of
//     sequence b. A single sequence is simply B = 1.
//   * Sequences in a batch are right-padded with PAD. Every model is causal,
//     so padding never influences real positions; attention additionally
//     masks PAD keys.
//
// Recurrence-complete models (RNN family, recurrent/feedback/block
// transformers) are defined by their step function. The standard Transformer
// has both a batch form and a KV-cached step form. RWKV and the linear
// transformer have a parallel form and a recurrent accumulator form.

#pragma once

#include <array>
#include <climits>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlab/tensor.hpp"

namespace rlab {

enum class Arch {
  kMlp,
  kRnn,
  kLstm,
  kStackRnn,
  kTapeRnn,
  kTransformer,
  kRecurrentTransformer,
  kFeedbackTransformer,
  kBlockRecurrentTransformer,
  kUniversalTransformer,
  kRwkv,
  kLinearTransformer,
};

inline constexpr std::array<Arch, 12> kAllArchs = {
    Arch::kMlp,         Arch::kRnn,
    Arch::kLstm,        Arch::kStackRnn,
    Arch::kTapeRnn,     Arch::kTransformer,
    Arch::kRecurrentTransformer, Arch::kFeedbackTransformer,
    Arch::kBlockRecurrentTransformer, Arch::kUniversalTransformer,
    Arch::kRwkv,        Arch::kLinearTransformer,
};

std::string_view arch_name(Arch arch) noexcept;  // kebab-case, e.g. "stack-rnn"
Arch parse_arch(std::string_view name);
/// Archs with a step function (everything except MLP and Universal).
bool has_step(Arch arch) noexcept;
/// RWKV and the linear transformer.
bool is_recurrence_incomplete(Arch arch) noexcept;
/// Archs built from attention layers (they share layer parameter names).
bool is_attention_arch(Arch arch) noexcept;

/// Feedback window meaning "all previous top states".
inline constexpr std::size_t kUnboundedWindow = SIZE_MAX;

struct ModelConfig {
  Arch arch = Arch::kRnn;
  std::size_t vocab_size = 0;
  std::size_t d_model = 16;
  std::size_t n_layers = 1;
  std::size_t n_heads = 1;
  /// Block length k for the block-recurrent transformer; memory window k for
  /// the feedback transformer (kUnboundedWindow allowed there).
  std::size_t block_size = 4;
  std::size_t max_halting_steps = 64;  // Universal T_max
  /// Universal iteration count T. 0 means T = ceil(halting_alpha * n).
  std::size_t halting_steps = 0;
  double halting_alpha = 1.0;
  std::size_t ffn_multiplier = 2;
  std::size_t memory_width = 8;  // stack / tape cell width
  std::size_t memory_slack = 4;  // stack depth and tape length are n + slack
  Nonlinearity activation = Nonlinearity::kTanh;  // MLP and RNN family
  Nonlinearity feature_map = Nonlinearity::kEluPlusOne;
  bool scale_scores = true;      // 1/sqrt(d_head) on attention scores
  bool residual = true;          // pre-norm residual blocks
  bool positional_encoding = true;  // sinusoidal; transformer family only
  bool ablate_recurrence = false;   // recurrent transformer: drop the h_top feedback
  std::uint64_t seed = 0;

  /// Throws ValidationError on inconsistent fields.
  void validate() const;
  std::size_t d_head() const { return d_model / n_heads; }
  bool uses_positional_encoding() const;
  /// Universal transformer iteration count for a sequence of length n.
  std::size_t universal_steps(std::size_t n) const;

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

/// Named weights, e.g. "embed", "layer0.wq", "readout.w".
using ModelParams = std::map<std::string, Tensor>;
using BoundParams = std::map<std::string, Value>;

/// Deterministic in config.seed.
ModelParams init_params(const ModelConfig& config);
/// Adds every tensor to `g` as a named parameter node.
BoundParams bind(Graph& g, const ModelParams& params);
/// Throws ValidationError when a tensor is missing or has the wrong shape.
void check_params(const ModelConfig& config, const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

/// Token grid, stored sequence-major: ids[b * length + t].
struct Batch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> ids;

  int at(std::size_t b, std::size_t t) const { return ids[b * length + t]; }
  /// Tokens at position t for every sequence.
  std::vector<int> column(std::size_t t) const;

  static Batch single(std::span<const int> ids);
  /// Right-pads with PAD (id 0) to the longest sequence.
  static Batch from_sequences(const std::vector<std::vector<int>>& sequences);
};

enum class ForwardMode {
  kDefault,   // batch / parallel form where one exists, else steps
  kParallel,  // RI archs and Transformer: parallel form (error otherwise)
  kRecurrent, // step function for every position (error for MLP / Universal)
};

struct ForwardOutput {
  Value hidden;  // [length * batch, d_model], time-major, after the final norm
  Value logits;  // [length * batch, vocab_size]
};

ForwardOutput model_forward(Graph& g, const ModelConfig& config, const BoundParams& params,
                            const Batch& batch, ForwardMode mode = ForwardMode::kDefault);

/// Builds a private graph and returns [n, vocab_size] logits for one sequence.
Tensor forward_logits(const ModelConfig& config, const ModelParams& params,
                      std::span<const int> ids, ForwardMode mode = ForwardMode::kDefault);

/// Per-step carried state. Which fields are used depends on the arch:
///   RNN / Stack-RNN / Tape-RNN   hidden[l]; memory[0] (stack or tape)
///   LSTM                         hidden[l], cell[l]
///   Transformer                  keys[l], values[l] (one [B, d] row per token)
///   RecurrentTransformer         keys, values, hidden[0] = previous h_top
///   FeedbackTransformer          window (last k h_top rows)
///   BlockRecurrentTransformer    keys, values (current block only),
///                                hidden[0] = carry-in, hidden[1] = last h_top
///   RWKV                         acc_a[l], acc_b[l]             ([B, d])
///   LinearTransformer            acc_a[l*H+h] ([B*dh, dh]), acc_b[l*H+h] ([B, dh])
template <class T>
struct StateOf {
  std::size_t position = 0;  // tokens consumed
  std::size_t batch = 1;
  std::size_t capacity = 0;  // sequence length the memory was sized for
  std::vector<T> hidden;
  std::vector<T> cell;
  std::vector<T> memory;
  std::vector<std::vector<T>> keys;
  std::vector<std::vector<T>> values;
  std::vector<char> key_valid;  // one flag per cached row (non-PAD token)
  std::vector<T> window;
  std::vector<T> acc_a;
  std::vector<T> acc_b;
};

using SequentialState = StateOf<Tensor>;
using GraphState = StateOf<Value>;

/// Zero state for `batch` sequences. `seq_len` sizes the Stack/Tape memory
/// (n + memory_slack) and is ignored by other archs.
GraphState initial_state(Graph& g, const ModelConfig& config, std::size_t batch,
                         std::size_t seq_len);
SequentialState snapshot(const GraphState& state);
/// Re-creates the state in `g` as input nodes.
GraphState restore(Graph& g, const SequentialState& state);
std::size_t state_bytes(const SequentialState& state);

struct StepOutput {
  Value hidden;  // [B, d_model] top hidden after the final norm
  Value logits;  // [B, vocab_size]
};

/// Consumes one token per sequence and advances `state`. Throws
/// ValidationError for archs without a step function.
StepOutput model_step(Graph& g, const ModelConfig& config, const BoundParams& params,
                      GraphState& state, std::span<const int> tokens);

// ---- building blocks (exposed for tests and the profiler) -------------------

/// Sinusoidal position code for position t, width d.
std::vector<double> positional_code(std::size_t t, std::size_t d);

/// h_t = act(x W_x + h_prev W_h + b). x: [B, d_in], h_prev: [B, d].
Value rnn_cell(Value x, Value h_prev, Value w_x, Value w_h, Value b, Nonlinearity act);

struct LstmOut {
  Value h;
  Value c;
};
/// Gates packed as [i | f | g | o] along the last axis of w_x, w_h and b.
LstmOut lstm_cell(Value x, Value h_prev, Value c_prev, Value w_x, Value w_h, Value b);

/// stack: [B, depth * width], top cell first. actions: [B, 3] probabilities of
/// (push, pop, no-op). value: [B, width] pushed content.
Value soft_stack_update(Value stack, Value actions, Value value, std::size_t width);
/// tape: [B, length * width]; cell 0 is under the head. The value is written
/// into cell 0, then the tape is rolled by the move distribution over
/// (-1, 0, +1) ([B, 3]). Rolling is circular.
Value soft_tape_update(Value tape, Value moves, Value value, std::size_t width);

/// Causal multi-head softmax attention over time-major rows.
/// q, k, v: [T*B, d]. `key_valid` (size T*B, time-major) marks non-PAD keys;
/// empty means all valid. Returns [T*B, d].
Value causal_attention(Value q, Value k, Value v, std::size_t heads, std::size_t batch,
                       bool scale_scores, const std::vector<char>& key_valid = {});
/// One query step against cached rows: q [B, d], k / v [(t+1)*B, d].
Value cached_attention(Value q, Value k, Value v, std::size_t heads, std::size_t batch,
                       bool scale_scores, const std::vector<char>& key_valid = {});

/// RWKV time-mix core. k, v: [T*B, d]; w: [d] decay (> 0), u: [d] bonus.
/// out_t = (sum_{j<t} e^{-(t-1-j)w + k_j} v_j + e^{u+k_t} v_t) /
///         (sum_{j<t} e^{-(t-1-j)w + k_j}     + e^{u+k_t})
Value rwkv_attn_parallel(Value k, Value v, Value w, Value u, std::size_t batch);

struct AccumulatorStep {
  Value out;
  Value a;
  Value b;
};
/// a, b: [B, d]. Returns out_t and (a_t, b_t) with
/// a_t = e^{-w} a_{t-1} + e^{k_t} v_t,  b_t = e^{-w} b_{t-1} + e^{k_t}.
AccumulatorStep rwkv_attn_recurrent(Value a, Value b, Value k_t, Value v_t, Value w, Value u);

/// Linear attention with feature map phi over time-major rows, one head.
/// q, k, v: [T*B, dh]. out_t = sum_{i<=t} (phi(q_t).phi(k_i)) v_i / sum (phi(q_t).phi(k_i)).
Value linear_attn_parallel(Value q, Value k, Value v, std::size_t batch, Nonlinearity phi);
/// One head. a: [B*dh, dh] (row b*dh+i holds a_b[i, :]), b: [B, dh].
AccumulatorStep linear_attn_recurrent(Value a, Value b, Value q_t, Value k_t, Value v_t,
                                      Nonlinearity phi);

// ---- checkpoints ------------------------------------------------------------

/// Binary layout (all integers little-endian):
///   magic "RLABCKPT" | u32 version (1) | u64 header length | header JSON
///   | u64 array count | per array: u32 name length, name, u32 rank,
///   u64 dims[rank], f64 data[prod(dims)]
/// The header JSON holds {"config": ..., "metadata": ...}.
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rlab
