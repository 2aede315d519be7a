// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference answers for every task, written independently of the
// library oracles: exact big integers, a shunting-yard evaluator, a deque
// stack and standard algorithms. Shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rlab/tasks.hpp"

namespace rlab::reference {

using Tokens = std::vector<std::string>;
using boost::multiprecision::cpp_int;

inline Tokens split(const std::string& s) {
  Tokens out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string join(const Tokens& t) {
  std::string s;
  for (const auto& x : t) s += x;
  return s;
}

// ---- independent reference implementations --------------------------------

inline int ref_mod(const cpp_int& v) {
  cpp_int r = v % 5;
  if (r < 0) r += 5;
  return static_cast<int>(r);
}

inline Tokens ref_mod_arith_simple(const Tokens& in) {
  cpp_int total = 0;
  int sign = 1;
  for (const auto& t : in) {
    if (t == "+") sign = 1;
    else if (t == "-") sign = -1;
    else total += sign * std::stoi(t);
  }
  return {std::to_string(ref_mod(total))};
}

// Shunting-yard over exact integers, reduced only at the end.
inline Tokens ref_mod_arith_complex(const Tokens& in) {
  std::vector<cpp_int> vals;
  std::vector<std::string> ops;
  auto prec = [](const std::string& op) { return op == "*" ? 2 : op == "(" ? 0 : 1; };
  auto reduce = [&] {
    const cpp_int b = vals.back();
    vals.pop_back();
    const cpp_int a = vals.back();
    vals.pop_back();
    const std::string op = ops.back();
    ops.pop_back();
    vals.push_back(op == "+" ? cpp_int(a + b) : op == "-" ? cpp_int(a - b) : cpp_int(a * b));
  };
  for (const auto& t : in) {
    if (t == "(") {
      ops.push_back(t);
    } else if (t == ")") {
      while (ops.back() != "(") reduce();
      ops.pop_back();
    } else if (t == "+" || t == "-" || t == "*") {
      while (!ops.empty() && prec(ops.back()) >= prec(t)) reduce();
      ops.push_back(t);
    } else {
      vals.emplace_back(std::stoi(t));
    }
  }
  while (!ops.empty()) reduce();
  return {std::to_string(ref_mod(vals.back()))};
}

inline Tokens ref_parity(const Tokens& in) {
  return {std::count(in.begin(), in.end(), "apple") % 2 == 0 ? "True" : "False"};
}

inline Tokens ref_cycle(const Tokens& in) {
  long f = std::count(in.begin(), in.end(), "forward");
  long b = std::count(in.begin(), in.end(), "backward");
  return {std::to_string(ref_mod(cpp_int(f - b)) + 1)};
}

inline Tokens ref_stack(const Tokens& in) {
  std::deque<std::string> st;
  std::size_t i = 0;
  for (; in[i] != ";"; ++i) st.push_back(in[i]);
  for (++i; i < in.size(); i += 2) {
    if (in[i] == "push") {
      st.push_back(in[i + 1]);
    } else {
      if (st.back() != in[i + 1]) throw std::logic_error("pop argument is not the top of the stack");
      st.pop_back();
    }
  }
  return {st.begin(), st.end()};
}

inline Tokens ref_odds_first(const Tokens& in) {
  std::vector<std::size_t> idx(in.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_partition(idx.begin(), idx.end(), [](std::size_t i) { return i % 2 == 0; });
  Tokens out;
  for (auto i : idx) out.push_back(in[i]);
  return out;
}

inline Tokens ref_arith(const Tokens& in, const std::string& sep) {
  const auto it = std::find(in.begin(), in.end(), sep);
  const cpp_int a(join(Tokens(in.begin(), it)));
  const cpp_int b(join(Tokens(it + 1, in.end())));
  const cpp_int r = sep == "+" ? cpp_int(a + b) : cpp_int(a * b);
  Tokens out;
  for (char c : r.str()) out.emplace_back(1, c);
  return out;
}

inline Tokens ref_sort(Tokens in) {
  std::sort(in.begin(), in.end(), [](const std::string& a, const std::string& b) { return std::stoi(a) < std::stoi(b); });
  return in;
}

inline Tokens reference_answer(TaskId task, const Tokens& in) {
  switch (task) {
    case TaskId::kModArithSimple: return ref_mod_arith_simple(in);
    case TaskId::kParityCheck: return ref_parity(in);
    case TaskId::kCycleNavigation: return ref_cycle(in);
    case TaskId::kStackManipulation: return ref_stack(in);
    case TaskId::kReverseList: return {in.rbegin(), in.rend()};
    case TaskId::kModArithComplex: return ref_mod_arith_complex(in);
    case TaskId::kOddsFirst: return ref_odds_first(in);
    case TaskId::kAddition: return ref_arith(in, "+");
    case TaskId::kMultiplication: return ref_arith(in, "*");
    case TaskId::kSorting: return ref_sort(in);
  }
  return {};
}

}  // namespace rlab::reference
