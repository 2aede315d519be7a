// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/automata.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include <fmt/format.h>

#include "rlab/errors.hpp"

namespace rlab {

Dfa::Dfa(std::vector<std::string> states, std::vector<std::string> alphabet,
         std::vector<std::vector<std::size_t>> delta, std::size_t start,
         std::vector<std::size_t> accepting)
    : states_(std::move(states)),
      alphabet_(std::move(alphabet)),
      delta_(std::move(delta)),
      start_(start),
      accepting_(states_.size(), 0) {
  if (states_.empty()) throw ValidationError("dfa: no states");
  if (start_ >= states_.size()) throw ValidationError("dfa: start state out of range");
  if (delta_.size() != states_.size()) throw ValidationError("dfa: delta must have one row per state");
  for (std::size_t q = 0; q < delta_.size(); ++q) {
    if (delta_[q].size() != alphabet_.size()) {
      throw ValidationError(fmt::format("dfa: delta undefined for some symbol in state {}", states_[q]));
    }
    for (std::size_t to : delta_[q]) {
      if (to >= states_.size()) throw ValidationError("dfa: transition target out of range");
    }
  }
  for (std::size_t f : accepting) {
    if (f >= states_.size()) throw ValidationError("dfa: accepting state out of range");
    accepting_[f] = 1;
  }
}

Dfa Dfa::parity() {
  // even --apple--> odd, banana is a self-loop.
  return Dfa({"even", "odd"}, {"apple", "banana"}, {{1, 0}, {0, 1}}, 0, {0});
}

Dfa Dfa::modular(std::size_t modulus) {
  if (modulus == 0) throw ValidationError("dfa: modulus must be positive");
  std::vector<std::string> states, alphabet;
  for (std::size_t q = 0; q < modulus; ++q) states.push_back("q" + std::to_string(q));
  for (std::size_t k = 0; k < modulus; ++k) alphabet.push_back("+" + std::to_string(k));
  for (std::size_t k = 0; k < modulus; ++k) alphabet.push_back("-" + std::to_string(k));
  std::vector<std::vector<std::size_t>> delta(modulus, std::vector<std::size_t>(2 * modulus));
  for (std::size_t q = 0; q < modulus; ++q) {
    for (std::size_t k = 0; k < modulus; ++k) {
      delta[q][k] = (q + k) % modulus;
      delta[q][modulus + k] = (q + modulus - k) % modulus;
    }
  }
  return Dfa(std::move(states), std::move(alphabet), std::move(delta), 0, {0});
}

Dfa Dfa::cycle(std::size_t size) {
  if (size == 0) throw ValidationError("dfa: cycle size must be positive");
  std::vector<std::string> states;
  for (std::size_t q = 1; q <= size; ++q) states.push_back(std::to_string(q));
  std::vector<std::vector<std::size_t>> delta(size, std::vector<std::size_t>(3));
  for (std::size_t q = 0; q < size; ++q) {
    delta[q][0] = (q + 1) % size;
    delta[q][1] = (q + size - 1) % size;
    delta[q][2] = q;
  }
  return Dfa(std::move(states), {"forward", "backward", "stay"}, std::move(delta), 0, {0});
}

bool Dfa::accepting(std::size_t state) const { return accepting_.at(state) != 0; }

std::size_t Dfa::transition(std::size_t state, std::size_t symbol) const {
  if (state >= delta_.size()) throw ValidationError(fmt::format("dfa: unknown state {}", state));
  return delta_[state].at(symbol);
}

std::size_t Dfa::state_index(std::string_view name) const {
  const auto it = std::find(states_.begin(), states_.end(), name);
  if (it == states_.end()) throw ValidationError(fmt::format("dfa: unknown state '{}'", name));
  return static_cast<std::size_t>(it - states_.begin());
}

std::size_t Dfa::symbol_index(std::string_view symbol) const {
  const auto it = std::find(alphabet_.begin(), alphabet_.end(), symbol);
  if (it == alphabet_.end()) throw ValidationError(fmt::format("dfa: unknown symbol '{}'", symbol));
  return static_cast<std::size_t>(it - alphabet_.begin());
}

std::string Dfa::to_text(std::string_view name) const {
  std::string out = fmt::format("dfa {}\nstates", name);
  for (const auto& s : states_) out += " " + s;
  out += "\nalphabet";
  for (const auto& a : alphabet_) out += " " + a;
  out += "\nstart " + states_[start_] + "\naccept";
  for (std::size_t q = 0; q < states_.size(); ++q) {
    if (accepting_[q]) out += " " + states_[q];
  }
  out += "\n";
  for (std::size_t q = 0; q < states_.size(); ++q) {
    for (std::size_t s = 0; s < alphabet_.size(); ++s) {
      out += fmt::format("{} {} {}\n", states_[q], alphabet_[s], states_[delta_[q][s]]);
    }
  }
  return out;
}

Dfa Dfa::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> states, alphabet, accept_names;
  std::string start_name;
  std::vector<std::array<std::string, 3>> transitions;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream words(line);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty() || tok[0].starts_with("#")) continue;
    const std::string& head = tok[0];
    if (head == "dfa") continue;
    if (head == "states") states.assign(tok.begin() + 1, tok.end());
    else if (head == "alphabet") alphabet.assign(tok.begin() + 1, tok.end());
    else if (head == "start" && tok.size() == 2) start_name = tok[1];
    else if (head == "accept") accept_names.assign(tok.begin() + 1, tok.end());
    else if (tok.size() == 3) transitions.push_back({tok[0], tok[1], tok[2]});
    else throw ParseError("dfa: malformed line '" + line + "'", line_no);
  }
  auto index_of = [](const std::vector<std::string>& v, const std::string& x, const char* what) {
    const auto it = std::find(v.begin(), v.end(), x);
    if (it == v.end()) throw ValidationError(fmt::format("dfa: unknown {} '{}'", what, x));
    return static_cast<std::size_t>(it - v.begin());
  };
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::vector<std::size_t>> delta(states.size(),
                                              std::vector<std::size_t>(alphabet.size(), kUnset));
  for (const auto& [from, sym, to] : transitions) {
    delta[index_of(states, from, "state")][index_of(alphabet, sym, "symbol")] =
        index_of(states, to, "state");
  }
  for (const auto& row : delta) {
    if (std::find(row.begin(), row.end(), kUnset) != row.end()) {
      throw ValidationError("dfa: transition function is not total");
    }
  }
  std::vector<std::size_t> accepting;
  for (const auto& a : accept_names) accepting.push_back(index_of(states, a, "state"));
  return Dfa(std::move(states), std::move(alphabet), std::move(delta),
             index_of(states, start_name, "state"), std::move(accepting));
}

std::size_t dfa_step(const Dfa& dfa, std::size_t state, std::string_view symbol) {
  return dfa.transition(state, dfa.symbol_index(symbol));
}

RunTrace dfa_run_from(const Dfa& dfa, std::size_t state, std::span<const std::string> input) {
  RunTrace trace;
  trace.states_visited.reserve(input.size() + 1);
  trace.states_visited.push_back(state);
  for (std::size_t i = 0; i < input.size(); ++i) {
    try {
      state = dfa_step(dfa, state, input[i]);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{} at input position {}", e.what(), i));
    }
    trace.states_visited.push_back(state);
  }
  trace.step_count = input.size();
  trace.accepted = dfa.accepting(state);
  return trace;
}

RunTrace dfa_run(const Dfa& dfa, std::span<const std::string> input) {
  return dfa_run_from(dfa, dfa.start(), input);
}

DepthProfile machine_profile(const RunTrace& trace) {
  DepthProfile p;
  p.total_ops = trace.step_count;
  p.depth = trace.step_count;
  p.n = trace.step_count;
  p.arch = "DFA";
  p.flops = static_cast<double>(trace.step_count);
  return p;
}

std::vector<std::string> stack_run(std::span<const StackAction> program,
                                   std::vector<std::string> stack) {
  for (std::size_t i = 0; i < program.size(); ++i) {
    const StackAction& a = program[i];
    if (a.kind == StackAction::Kind::kPush) {
      stack.push_back(a.token);
    } else {
      if (stack.empty()) throw ValidationError(fmt::format("stack: pop on empty stack at action {}", i));
      stack.pop_back();
    }
  }
  return stack;
}

TapeState tape_run_from(std::span<const TapeAction> program, TapeState state) {
  if (state.tape.empty()) throw ValidationError("tape: length must be at least 1");
  const auto last = static_cast<long>(state.tape.size()) - 1;
  for (const TapeAction& a : program) {
    if (a.kind == TapeAction::Kind::kWrite) {
      state.tape[state.head] = a.token;
    } else {
      if (a.offset < -1 || a.offset > 1) {
        throw ValidationError(fmt::format("tape: move offset {} not in {{-1,0,+1}}", a.offset));
      }
      const long next = std::clamp(static_cast<long>(state.head) + a.offset, 0L, last);
      state.head = static_cast<std::size_t>(next);
    }
  }
  return state;
}

std::vector<std::string> tape_run(std::span<const TapeAction> program, std::size_t tape_len) {
  if (tape_len == 0) throw ValidationError("tape: length must be at least 1");
  TapeState s{std::vector<std::string>(tape_len, std::string(kBlankCell)), 0};
  return tape_run_from(program, std::move(s)).tape;
}

}  // namespace rlab
