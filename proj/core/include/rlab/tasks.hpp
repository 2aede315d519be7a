// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// The ten Chomsky-hierarchy tasks: generators, exact oracles, vocabularies
// and the placeholder encoding used by expert models.
//
// Every token is an atomic word (fruit name, digit, operator, action); no
// token is ever split into characters.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace rlab {

enum class TaskId {
  kModArithSimple,
  kParityCheck,
  kCycleNavigation,
  kStackManipulation,
  kReverseList,
  kModArithComplex,
  kOddsFirst,
  kAddition,
  kMultiplication,
  kSorting,
};

enum class Level { kRegular, kContextFree, kContextSensitive };

/// Table order: R rows, then CF, then CS.
inline constexpr std::array<TaskId, 10> kAllTasks = {
    TaskId::kModArithSimple,  TaskId::kParityCheck,    TaskId::kCycleNavigation,
    TaskId::kStackManipulation, TaskId::kReverseList,  TaskId::kModArithComplex,
    TaskId::kOddsFirst,       TaskId::kAddition,       TaskId::kMultiplication,
    TaskId::kSorting,
};

Level task_level(TaskId task) noexcept;
std::string_view level_label(Level level) noexcept;  // "R", "CF", "CS"
/// Kebab-case identifier used on the command line and in files.
std::string_view task_name(TaskId task) noexcept;
/// Human-readable title as used in result tables.
std::string_view task_title(TaskId task) noexcept;
/// Accepts task_name() values plus short aliases ("parity", "stack", ...).
TaskId parse_task(std::string_view name);

/// Single-label tasks whose target is exactly one token.
bool is_classification(TaskId task) noexcept;

struct LengthRange {
  std::size_t min = 0;
  std::size_t max = 0;

  bool contains(std::size_t n) const noexcept { return n >= min && n <= max; }
  bool operator==(const LengthRange&) const = default;
};

/// n in [10, 20] for every task except ReverseList, which uses [30, 40].
LengthRange default_length_range(TaskId task) noexcept;
/// Parses "a-b" or a single number "a".
LengthRange parse_length_range(std::string_view text);
std::string to_string(const LengthRange& range);

inline constexpr std::array<std::string_view, 8> kFruits = {
    "apple", "banana", "grape", "peach", "cherry", "mango", "lemon", "orange"};

struct TaskInstance {
  TaskId task = TaskId::kParityCheck;
  std::vector<std::string> input_tokens;
  std::vector<std::string> target_tokens;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  bool operator==(const TaskInstance&) const = default;
};

/// Deterministic in (task, seed). n is drawn uniformly from `lengths`.
TaskInstance generate(TaskId task, std::uint64_t seed);
TaskInstance generate(TaskId task, std::uint64_t seed, LengthRange lengths);

/// Exact reference answer. Throws ParseError (with token position) for
/// malformed arithmetic and ValidationError for inconsistent stack programs.
std::vector<std::string> oracle(TaskId task, std::span<const std::string> input_tokens);

/// Decimal helpers on digit strings (most significant first, no leading zeros).
std::string decimal_add(std::string_view a, std::string_view b);
std::string decimal_multiply(std::string_view a, std::string_view b);

/// Token <-> id map. Ids 0, 1, 2 are reserved for PAD, SEP and PLACEHOLDER.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSep = 1;
  static constexpr int kPlaceholder = 2;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kSepToken = "<sep>";
  static constexpr std::string_view kPlaceholderToken = "<ph>";

  Vocab() : Vocab(std::vector<std::string>{}) {}
  explicit Vocab(std::vector<std::string> tokens);

  /// Every token any instance of `task` can contain, in a fixed order.
  static Vocab for_task(TaskId task);

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  bool contains(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct EncodedInstance {
  /// tokens ++ [SEP] ++ [PLACEHOLDER] * |target|
  std::vector<int> input_ids;
  /// One id per placeholder, aligned with placeholder_positions.
  std::vector<int> target_ids;
  std::vector<std::size_t> placeholder_positions;
};

EncodedInstance encode(const TaskInstance& instance, const Vocab& vocab);
/// Inverse of encode for the token fields (task, n and seed are copied from
/// the arguments).
TaskInstance decode(const EncodedInstance& encoded, const Vocab& vocab, TaskId task,
                    std::size_t n = 0, std::uint64_t seed = 0);

/// Dataset record: {"task","seed","n","input_tokens","target_tokens"}.
nlohmann::ordered_json to_json(const TaskInstance& instance);
TaskInstance instance_from_json(const nlohmann::json& j);

}  // namespace rlab
