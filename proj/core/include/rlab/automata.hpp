// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference machines used as ground-truth oracles: a deterministic finite
// automaton, a stack machine and a bounded-tape machine. All are value types
// and pure functions; they are safe to share between threads.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlab/depth_profile.hpp"

namespace rlab {

class Dfa {
 public:
  Dfa() = default;
  /// `delta[q][s]` is the successor of state q on alphabet symbol s. Throws
  /// ValidationError unless delta is total and every index is in range.
  Dfa(std::vector<std::string> states, std::vector<std::string> alphabet,
      std::vector<std::vector<std::size_t>> delta, std::size_t start,
      std::vector<std::size_t> accepting);

  /// Two states {even, odd} over {apple, banana}; accepts an even apple count.
  static Dfa parity();
  /// States q0..q{m-1} over symbols "+k" / "-k" for k in [0, m); tracks a
  /// running sum modulo m. Accepts q0.
  static Dfa modular(std::size_t modulus);
  /// States 1..size over {forward, backward, stay}, starting at 1.
  static Dfa cycle(std::size_t size);

  const std::vector<std::string>& states() const noexcept { return states_; }
  const std::vector<std::string>& alphabet() const noexcept { return alphabet_; }
  std::size_t start() const noexcept { return start_; }
  bool accepting(std::size_t state) const;
  std::size_t transition(std::size_t state, std::size_t symbol) const;

  std::size_t state_index(std::string_view name) const;
  /// Throws ValidationError naming the symbol when it is not in the alphabet.
  std::size_t symbol_index(std::string_view symbol) const;

  /// Line-oriented text form:
  ///   dfa <name>
  ///   states <s0> <s1> ...
  ///   alphabet <a0> <a1> ...
  ///   start <state>
  ///   accept <state>...
  ///   <from> <symbol> <to>        (one line per transition)
  std::string to_text(std::string_view name = "machine") const;
  static Dfa from_text(std::string_view text);

  bool operator==(const Dfa&) const = default;

 private:
  std::vector<std::string> states_;
  std::vector<std::string> alphabet_;
  std::vector<std::vector<std::size_t>> delta_;
  std::size_t start_ = 0;
  std::vector<char> accepting_;
};

struct RunTrace {
  std::vector<std::size_t> states_visited;  // length step_count + 1
  std::size_t step_count = 0;
  bool accepted = false;

  std::size_t final_state() const { return states_visited.back(); }
};

std::size_t dfa_step(const Dfa& dfa, std::size_t state, std::string_view symbol);
RunTrace dfa_run(const Dfa& dfa, std::span<const std::string> input);
RunTrace dfa_run_from(const Dfa& dfa, std::size_t state, std::span<const std::string> input);

/// One sequential transition per input symbol: depth == total_ops == n.
DepthProfile machine_profile(const RunTrace& trace);

struct StackAction {
  enum class Kind { kPush, kPop };
  Kind kind = Kind::kPush;
  /// Pushed token for kPush. For kPop the token is advisory: the machine pops
  /// the top unconditionally.
  std::string token;

  static StackAction push(std::string token) { return {Kind::kPush, std::move(token)}; }
  static StackAction pop(std::string token = {}) { return {Kind::kPop, std::move(token)}; }
  bool operator==(const StackAction&) const = default;
};

/// Stacks are listed bottom to top. Throws ValidationError naming the action
/// index when a pop hits an empty stack.
std::vector<std::string> stack_run(std::span<const StackAction> program,
                                   std::vector<std::string> initial_stack);

struct TapeAction {
  enum class Kind { kWrite, kMove };
  Kind kind = Kind::kWrite;
  std::string token;  // kWrite
  int offset = 0;     // kMove: -1, 0 or +1

  static TapeAction write(std::string token) { return {Kind::kWrite, std::move(token), 0}; }
  static TapeAction move(int offset) { return {Kind::kMove, {}, offset}; }
};

inline constexpr std::string_view kBlankCell = "_";

struct TapeState {
  std::vector<std::string> tape;
  std::size_t head = 0;
};

/// Runs `program` on a blank tape of `tape_len` cells with the head at 0.
/// Moves past either end clamp to the boundary.
std::vector<std::string> tape_run(std::span<const TapeAction> program, std::size_t tape_len);
/// Runs `program` from an existing tape state.
TapeState tape_run_from(std::span<const TapeAction> program, TapeState state);

}  // namespace rlab
