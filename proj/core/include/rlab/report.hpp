// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Merges training summaries and LLM score reports into one results table:
// rows are the ten tasks grouped R / CF / CS, columns are architectures
// followed by LLM (direct prompts) and CoT (step-by-step prompts).

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlab/models.hpp"
#include "rlab/tasks.hpp"

namespace rlab {

struct ReportCell {
  TaskId task = TaskId::kParityCheck;
  std::string column;
  double accuracy = 0.0;
  std::string source;
};

/// Display name used as a column header ("Stack-RNN", "LSTM", ...).
std::string arch_column(Arch arch);

/// Recognizes {"kind": "train-summary"} and {"kind": "llm-score"} records;
/// anything else yields nullopt.
std::optional<ReportCell> cell_from_json(const nlohmann::json& j, const std::string& source);

/// Every recognized *.json file under the given directories (recursive),
/// visited in sorted path order.
std::vector<ReportCell> collect_cells(std::span<const std::filesystem::path> dirs);

struct ReportTable {
  std::vector<std::string> columns;
  std::vector<ReportCell> cells;  // at most one per (task, column)
  const ReportCell* find(TaskId task, const std::string& column) const;
};

/// Columns RNN, Stack-RNN, Tape-RNN, Transformer, LSTM, then any other arch
/// present, then LLM, CoT. Duplicate cells with equal accuracy collapse;
/// differing duplicates throw ValidationError naming both sources.
ReportTable merge_cells(std::span<const ReportCell> cells);

/// Missing cells render as "—".
std::string report_markdown(const ReportTable& table);
std::string report_csv(const ReportTable& table);

}  // namespace rlab
