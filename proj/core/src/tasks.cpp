// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/tasks.hpp"

#include <algorithm>
#include <charconv>
#include <memory>

#include <fmt/format.h>

#include "rlab/automata.hpp"
#include "rlab/errors.hpp"
#include "rlab/rng.hpp"

namespace rlab {
namespace {

constexpr int kModulus = 5;
constexpr std::string_view kStackDelimiter = ";";

int mod5(long long v) { return static_cast<int>(((v % kModulus) + kModulus) % kModulus); }

std::string digit(long long v) { return std::to_string(v); }

bool is_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

long long number_mod5(std::string_view s) {
  long long r = 0;
  for (char c : s) r = (r * 10 + (c - '0')) % kModulus;
  return r;
}

// ---- ModArithComplex -------------------------------------------------------

struct Expr {
  char op = 0;  // 0 for a leaf
  int leaf = 0;
  std::unique_ptr<Expr> lhs, rhs;
};

std::unique_ptr<Expr> random_expr(Rng& rng, std::size_t ops) {
  auto e = std::make_unique<Expr>();
  if (ops == 0) {
    e->leaf = static_cast<int>(rng.uniform_int(0, kModulus - 1));
    return e;
  }
  static constexpr char kOps[] = {'+', '-', '*'};
  e->op = kOps[rng.uniform_index(3)];
  const auto left = static_cast<std::size_t>(rng.uniform_index(ops));
  e->lhs = random_expr(rng, left);
  e->rhs = random_expr(rng, ops - 1 - left);
  return e;
}

// Every compound operand is parenthesized; only the root is bare.
void render(const Expr& e, bool wrap, std::vector<std::string>& out) {
  if (e.op == 0) {
    out.push_back(digit(e.leaf));
    return;
  }
  if (wrap) out.emplace_back("(");
  render(*e.lhs, true, out);
  out.emplace_back(1, e.op);
  render(*e.rhs, true, out);
  if (wrap) out.emplace_back(")");
}

class ExprParser {
 public:
  explicit ExprParser(std::span<const std::string> t) : t_(t) {}

  int parse() {
    if (t_.empty()) throw ParseError("modular arithmetic: empty expression", 0);
    const int v = expr();
    if (pos_ != t_.size()) throw ParseError(fmt::format("modular arithmetic: unexpected '{}'", t_[pos_]), pos_);
    return v;
  }

 private:
  bool at(std::string_view s) const { return pos_ < t_.size() && t_[pos_] == s; }
  bool at_times() const { return at("*") || at("×") || at("x"); }

  int expr() {
    int v = term();
    while (at("+") || at("-")) {
      const bool plus = at("+");
      ++pos_;
      const int r = term();
      v = mod5(plus ? v + r : v - r);
    }
    return v;
  }

  int term() {
    int v = factor();
    while (at_times()) {
      ++pos_;
      v = mod5(static_cast<long long>(v) * factor());
    }
    return v;
  }

  int factor() {
    if (pos_ >= t_.size()) throw ParseError("modular arithmetic: unexpected end of input", pos_);
    if (at("(")) {
      ++pos_;
      const int v = expr();
      if (!at(")")) throw ParseError("modular arithmetic: expected ')'", pos_);
      ++pos_;
      return v;
    }
    if (!is_number(t_[pos_])) {
      throw ParseError(fmt::format("modular arithmetic: expected a number, got '{}'", t_[pos_]), pos_);
    }
    return static_cast<int>(number_mod5(t_[pos_++]));
  }

  std::span<const std::string> t_;
  std::size_t pos_ = 0;
};

// ---- oracles -----------------------------------------------------------------

std::vector<std::string> mod_arith_simple(std::span<const std::string> in) {
  if (in.empty()) throw ParseError("modular arithmetic: empty expression", 0);
  if (in.size() % 2 == 0) throw ParseError("modular arithmetic: expression ends with an operator", in.size());
  long long acc = 0;
  for (std::size_t i = 0; i < in.size(); i += 2) {
    if (!is_number(in[i])) {
      throw ParseError(fmt::format("modular arithmetic: expected a number, got '{}'", in[i]), i);
    }
    const long long v = number_mod5(in[i]);
    if (i == 0) {
      acc = v;
    } else if (in[i - 1] == "+") {
      acc += v;
    } else if (in[i - 1] == "-") {
      acc -= v;
    } else {
      throw ParseError(fmt::format("modular arithmetic: expected '+' or '-', got '{}'", in[i - 1]), i - 1);
    }
    acc = mod5(acc);
  }
  return {digit(acc)};
}

std::vector<std::string> parity(std::span<const std::string> in) {
  const Dfa dfa = Dfa::parity();
  return {dfa_run(dfa, in).accepted ? "True" : "False"};
}

std::vector<std::string> cycle(std::span<const std::string> in) {
  long long pos = 0;  // zero-based; state label is pos + 1
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == "forward") ++pos;
    else if (in[i] == "backward") --pos;
    else if (in[i] != "stay") throw ValidationError(fmt::format("cycle navigation: unknown action '{}' at position {}", in[i], i));
  }
  return {digit(mod5(pos) + 1)};
}

std::vector<std::string> stack_manipulation(std::span<const std::string> in) {
  const auto delim = std::find(in.begin(), in.end(), kStackDelimiter);
  if (delim == in.end()) throw ValidationError("stack manipulation: missing ';' between stack and actions");
  std::vector<std::string> stack(in.begin(), delim);
  std::vector<StackAction> program;
  for (auto it = delim + 1; it != in.end(); it += 2) {
    const auto pos = static_cast<std::size_t>(it - in.begin());
    if (it + 1 == in.end()) throw ValidationError(fmt::format("stack manipulation: action at position {} has no argument", pos));
    if (*it == "push") program.push_back(StackAction::push(*(it + 1)));
    else if (*it == "pop") program.push_back(StackAction::pop(*(it + 1)));
    else throw ValidationError(fmt::format("stack manipulation: unknown action '{}' at position {}", *it, pos));
  }
  return stack_run(program, std::move(stack));
}

std::vector<std::string> odds_first(std::span<const std::string> in) {
  std::vector<std::string> out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); i += 2) out.push_back(in[i]);
  for (std::size_t i = 1; i < in.size(); i += 2) out.push_back(in[i]);
  return out;
}

std::vector<std::string> split_digits(std::string_view s) {
  std::vector<std::string> out;
  for (char c : s) out.emplace_back(1, c);
  return out;
}

std::pair<std::string, std::string> two_operands(std::span<const std::string> in, std::string_view sep) {
  std::string a, b;
  bool seen = false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == sep) {
      if (seen) throw ParseError(fmt::format("expected one '{}'", sep), i);
      seen = true;
    } else if (in[i].size() == 1 && is_number(in[i])) {
      (seen ? b : a) += in[i];
    } else {
      throw ParseError(fmt::format("expected a digit, got '{}'", in[i]), i);
    }
  }
  if (!seen || a.empty() || b.empty()) throw ParseError(fmt::format("expected two operands around '{}'", sep), in.size());
  return {a, b};
}

std::vector<std::string> sorting(std::span<const std::string> in) {
  std::vector<std::pair<long long, std::string>> keyed;
  for (std::size_t i = 0; i < in.size(); ++i) {
    long long v = 0;
    const auto& s = in[i];
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw ParseError(fmt::format("sorting: expected a number, got '{}'", s), i);
    }
    keyed.emplace_back(v, s);
  }
  // Insertion sort, as the task statement asks.
  for (std::size_t i = 1; i < keyed.size(); ++i) {
    for (std::size_t j = i; j > 0 && keyed[j - 1].first > keyed[j].first; --j) std::swap(keyed[j - 1], keyed[j]);
  }
  std::vector<std::string> out;
  for (auto& [_, s] : keyed) out.push_back(std::move(s));
  return out;
}

std::string strip_leading_zeros(std::string s) {
  const auto nz = s.find_first_not_of('0');
  return nz == std::string::npos ? "0" : s.substr(nz);
}

std::string random_number(Rng& rng, std::size_t digits) {
  std::string s;
  s += static_cast<char>('1' + rng.uniform_index(9));
  for (std::size_t i = 1; i < digits; ++i) s += static_cast<char>('0' + rng.uniform_index(10));
  return s;
}

std::string fruit(Rng& rng) { return std::string(kFruits[rng.uniform_index(kFruits.size())]); }

}  // namespace

Level task_level(TaskId task) noexcept {
  switch (task) {
    case TaskId::kModArithSimple:
    case TaskId::kParityCheck:
    case TaskId::kCycleNavigation: return Level::kRegular;
    case TaskId::kStackManipulation:
    case TaskId::kReverseList:
    case TaskId::kModArithComplex: return Level::kContextFree;
    default: return Level::kContextSensitive;
  }
}

std::string_view level_label(Level level) noexcept {
  switch (level) {
    case Level::kRegular: return "R";
    case Level::kContextFree: return "CF";
    case Level::kContextSensitive: return "CS";
  }
  return "?";
}

std::string_view task_name(TaskId task) noexcept {
  switch (task) {
    case TaskId::kModArithSimple: return "modular-arithmetic";
    case TaskId::kParityCheck: return "parity";
    case TaskId::kCycleNavigation: return "cycle-navigation";
    case TaskId::kStackManipulation: return "stack-manipulation";
    case TaskId::kReverseList: return "reverse-list";
    case TaskId::kModArithComplex: return "modular-arithmetic-complex";
    case TaskId::kOddsFirst: return "odds-first";
    case TaskId::kAddition: return "addition";
    case TaskId::kMultiplication: return "multiplication";
    case TaskId::kSorting: return "sorting";
  }
  return "?";
}

std::string_view task_title(TaskId task) noexcept {
  switch (task) {
    case TaskId::kModArithSimple: return "Modular Arithmetic";
    case TaskId::kParityCheck: return "Parity Check";
    case TaskId::kCycleNavigation: return "Cycle Navigation";
    case TaskId::kStackManipulation: return "Stack Manipulation";
    case TaskId::kReverseList: return "Reverse List";
    case TaskId::kModArithComplex: return "Modular Arithmetic (Complex)";
    case TaskId::kOddsFirst: return "Odds First";
    case TaskId::kAddition: return "Addition";
    case TaskId::kMultiplication: return "Multiplication";
    case TaskId::kSorting: return "Sorting";
  }
  return "?";
}

TaskId parse_task(std::string_view name) {
  for (TaskId t : kAllTasks) {
    if (name == task_name(t)) return t;
  }
  static const std::pair<std::string_view, TaskId> kAliases[] = {
      {"mod-arith", TaskId::kModArithSimple},
      {"modular-arithmetic-simple", TaskId::kModArithSimple},
      {"parity-check", TaskId::kParityCheck},
      {"cycle", TaskId::kCycleNavigation},
      {"stack", TaskId::kStackManipulation},
      {"reverse", TaskId::kReverseList},
      {"mod-arith-complex", TaskId::kModArithComplex},
      {"odd-first", TaskId::kOddsFirst},
      {"sort", TaskId::kSorting},
  };
  for (const auto& [alias, t] : kAliases) {
    if (name == alias) return t;
  }
  throw ValidationError(fmt::format("unknown task '{}'", name));
}

bool is_classification(TaskId task) noexcept {
  return task == TaskId::kModArithSimple || task == TaskId::kParityCheck ||
         task == TaskId::kCycleNavigation || task == TaskId::kModArithComplex;
}

LengthRange default_length_range(TaskId task) noexcept {
  return task == TaskId::kReverseList ? LengthRange{30, 40} : LengthRange{10, 20};
}

LengthRange parse_length_range(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
      throw ValidationError(fmt::format("bad length range '{}': expected 'a-b' or 'a'", text));
    }
    return v;
  };
  const auto dash = text.find('-');
  LengthRange r;
  if (dash == std::string_view::npos) {
    r.min = r.max = number(text);
  } else {
    r.min = number(text.substr(0, dash));
    r.max = number(text.substr(dash + 1));
  }
  if (r.min < 1 || r.max < r.min) {
    throw ValidationError(fmt::format("bad length range '{}': need 1 <= min <= max", text));
  }
  return r;
}

std::string to_string(const LengthRange& range) { return fmt::format("{}-{}", range.min, range.max); }

TaskInstance generate(TaskId task, std::uint64_t seed) {
  return generate(task, seed, default_length_range(task));
}

TaskInstance generate(TaskId task, std::uint64_t seed, LengthRange lengths) {
  if (lengths.min < 1 || lengths.max < lengths.min) {
    throw ValidationError(fmt::format("bad length range {}", to_string(lengths)));
  }
  Rng rng(derive_seed(seed, seed_stream::kInstances));
  TaskInstance inst;
  inst.task = task;
  inst.seed = seed;
  inst.n = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lengths.min),
                                                    static_cast<std::int64_t>(lengths.max)));
  const std::size_t n = inst.n;
  auto& in = inst.input_tokens;
  switch (task) {
    case TaskId::kModArithSimple:
      for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) in.emplace_back(rng.uniform_index(2) ? "+" : "-");
        in.push_back(digit(rng.uniform_int(0, kModulus - 1)));
      }
      break;
    case TaskId::kParityCheck:
      for (std::size_t i = 0; i < n; ++i) in.emplace_back(rng.uniform_index(2) ? "apple" : "banana");
      break;
    case TaskId::kCycleNavigation: {
      static constexpr std::string_view kActions[] = {"forward", "backward", "stay"};
      for (std::size_t i = 0; i < n; ++i) in.emplace_back(kActions[rng.uniform_index(3)]);
      break;
    }
    case TaskId::kStackManipulation: {
      std::vector<std::string> stack;
      const auto depth = rng.uniform_int(1, 5);
      for (std::int64_t i = 0; i < depth; ++i) stack.push_back(fruit(rng));
      in = stack;
      in.emplace_back(kStackDelimiter);
      for (std::size_t i = 0; i < n; ++i) {
        // Never pop the last item, so the resulting stack is never empty.
        if (stack.size() >= 2 && rng.uniform_index(2) == 0) {
          in.emplace_back("pop");
          in.push_back(stack.back());
          stack.pop_back();
        } else {
          stack.push_back(fruit(rng));
          in.emplace_back("push");
          in.push_back(stack.back());
        }
      }
      break;
    }
    case TaskId::kReverseList:
    case TaskId::kOddsFirst:
      for (std::size_t i = 0; i < n; ++i) in.push_back(fruit(rng));
      break;
    case TaskId::kModArithComplex:
      render(*random_expr(rng, n), false, in);
      break;
    case TaskId::kAddition:
    case TaskId::kMultiplication: {
      const std::string a = random_number(rng, n);
      const std::string b = random_number(rng, n);
      in = split_digits(a);
      in.emplace_back(task == TaskId::kAddition ? "+" : "*");
      for (auto& d : split_digits(b)) in.push_back(std::move(d));
      break;
    }
    case TaskId::kSorting:
      for (std::size_t i = 0; i < n; ++i) in.push_back(digit(rng.uniform_int(0, 9)));
      break;
  }
  inst.target_tokens = oracle(task, in);
  return inst;
}

std::vector<std::string> oracle(TaskId task, std::span<const std::string> in) {
  switch (task) {
    case TaskId::kModArithSimple: return mod_arith_simple(in);
    case TaskId::kParityCheck: return parity(in);
    case TaskId::kCycleNavigation: return cycle(in);
    case TaskId::kStackManipulation: return stack_manipulation(in);
    case TaskId::kReverseList: return {in.rbegin(), in.rend()};
    case TaskId::kModArithComplex: return {digit(ExprParser(in).parse())};
    case TaskId::kOddsFirst: return odds_first(in);
    case TaskId::kAddition: {
      const auto [a, b] = two_operands(in, "+");
      return split_digits(decimal_add(a, b));
    }
    case TaskId::kMultiplication: {
      const auto [a, b] = two_operands(in, "*");
      return split_digits(decimal_multiply(a, b));
    }
    case TaskId::kSorting: return sorting(in);
  }
  throw ValidationError("unknown task");
}

std::string decimal_add(std::string_view a, std::string_view b) {
  std::string out;
  int carry = 0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()) || carry; ++i) {
    int s = carry;
    if (i < a.size()) s += a[a.size() - 1 - i] - '0';
    if (i < b.size()) s += b[b.size() - 1 - i] - '0';
    out += static_cast<char>('0' + s % 10);
    carry = s / 10;
  }
  std::reverse(out.begin(), out.end());
  return strip_leading_zeros(std::move(out));
}

std::string decimal_multiply(std::string_view a, std::string_view b) {
  std::vector<int> acc(a.size() + b.size(), 0);  // little-endian
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      acc[i + j] += (a[a.size() - 1 - i] - '0') * (b[b.size() - 1 - j] - '0');
    }
  }
  for (std::size_t k = 0; k + 1 < acc.size(); ++k) {
    acc[k + 1] += acc[k] / 10;
    acc[k] %= 10;
  }
  std::string out;
  for (auto it = acc.rbegin(); it != acc.rend(); ++it) out += static_cast<char>('0' + *it);
  return strip_leading_zeros(std::move(out));
}

// ---- vocab / encoding ---------------------------------------------------------

Vocab::Vocab(std::vector<std::string> tokens) {
  tokens_ = {std::string(kPadToken), std::string(kSepToken), std::string(kPlaceholderToken)};
  for (auto& t : tokens) {
    if (std::find(tokens_.begin(), tokens_.end(), t) == tokens_.end()) tokens_.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
}

Vocab Vocab::for_task(TaskId task) {
  std::vector<std::string> t;
  auto digits = [&](int hi) {
    for (int d = 0; d <= hi; ++d) t.push_back(std::to_string(d));
  };
  auto fruits = [&] {
    for (auto f : kFruits) t.emplace_back(f);
  };
  switch (task) {
    case TaskId::kModArithSimple:
      digits(4);
      t.insert(t.end(), {"+", "-"});
      break;
    case TaskId::kParityCheck: t = {"apple", "banana", "True", "False"}; break;
    case TaskId::kCycleNavigation:
      t = {"forward", "backward", "stay"};
      for (int s = 1; s <= kModulus; ++s) t.push_back(std::to_string(s));
      break;
    case TaskId::kStackManipulation:
      fruits();
      t.insert(t.end(), {std::string(kStackDelimiter), "push", "pop"});
      break;
    case TaskId::kReverseList:
    case TaskId::kOddsFirst: fruits(); break;
    case TaskId::kModArithComplex:
      digits(4);
      t.insert(t.end(), {"+", "-", "*", "(", ")"});
      break;
    case TaskId::kAddition:
      digits(9);
      t.emplace_back("+");
      break;
    case TaskId::kMultiplication:
      digits(9);
      t.emplace_back("*");
      break;
    case TaskId::kSorting: digits(9); break;
  }
  return Vocab(std::move(t));
}

int Vocab::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) throw ValidationError(fmt::format("unknown token '{}'", token));
  return it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValidationError(fmt::format("token id {} out of range [0, {})", id, tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

EncodedInstance encode(const TaskInstance& instance, const Vocab& vocab) {
  EncodedInstance e;
  for (const auto& t : instance.input_tokens) e.input_ids.push_back(vocab.id(t));
  e.input_ids.push_back(Vocab::kSep);
  for (const auto& t : instance.target_tokens) {
    e.placeholder_positions.push_back(e.input_ids.size());
    e.input_ids.push_back(Vocab::kPlaceholder);
    e.target_ids.push_back(vocab.id(t));
  }
  return e;
}

TaskInstance decode(const EncodedInstance& encoded, const Vocab& vocab, TaskId task, std::size_t n,
                    std::uint64_t seed) {
  TaskInstance inst;
  inst.task = task;
  inst.n = n;
  inst.seed = seed;
  const auto sep = std::find(encoded.input_ids.begin(), encoded.input_ids.end(), Vocab::kSep);
  if (sep == encoded.input_ids.end()) throw ValidationError("decode: missing separator");
  for (auto it = encoded.input_ids.begin(); it != sep; ++it) inst.input_tokens.push_back(vocab.token(*it));
  if (encoded.target_ids.size() != encoded.placeholder_positions.size()) {
    throw ValidationError("decode: targets and placeholders differ in length");
  }
  for (int id : encoded.target_ids) inst.target_tokens.push_back(vocab.token(id));
  return inst;
}

nlohmann::ordered_json to_json(const TaskInstance& instance) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(instance.task));
  j["seed"] = instance.seed;
  j["n"] = instance.n;
  j["input_tokens"] = instance.input_tokens;
  j["target_tokens"] = instance.target_tokens;
  return j;
}

TaskInstance instance_from_json(const nlohmann::json& j) {
  try {
    TaskInstance inst;
    inst.task = parse_task(j.at("task").get<std::string>());
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.n = j.at("n").get<std::size_t>();
    inst.input_tokens = j.at("input_tokens").get<std::vector<std::string>>();
    inst.target_tokens = j.at("target_tokens").get<std::vector<std::string>>();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("bad instance record: {}", e.what()));
  }
}

}  // namespace rlab
