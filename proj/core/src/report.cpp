// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rlab/errors.hpp"

namespace rlab {

std::string arch_column(Arch arch) {
  switch (arch) {
    case Arch::kMlp: return "MLP";
    case Arch::kRnn: return "RNN";
    case Arch::kLstm: return "LSTM";
    case Arch::kStackRnn: return "Stack-RNN";
    case Arch::kTapeRnn: return "Tape-RNN";
    case Arch::kTransformer: return "Transformer";
    case Arch::kRecurrentTransformer: return "Recurrent-Transformer";
    case Arch::kFeedbackTransformer: return "Feedback-Transformer";
    case Arch::kBlockRecurrentTransformer: return "Block-Recurrent-Transformer";
    case Arch::kUniversalTransformer: return "Universal-Transformer";
    case Arch::kRwkv: return "RWKV";
    case Arch::kLinearTransformer: return "Linear-Transformer";
  }
  return "?";
}

std::optional<ReportCell> cell_from_json(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) return std::nullopt;
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "train-summary") {
      return ReportCell{parse_task(j.at("task").get<std::string>()), arch_column(parse_arch(j.at("arch").get<std::string>())),
                        j.at("accuracy").get<double>(), source};
    }
    if (kind == "llm-score") {
      const std::string mode = j.at("mode").get<std::string>();
      if (mode != "direct" && mode != "cot") throw ValidationError(fmt::format("unknown mode '{}'", mode));
      return ReportCell{parse_task(j.at("task").get<std::string>()), mode == "cot" ? "CoT" : "LLM",
                        j.at("accuracy").get<double>(), source};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: bad {} record: {}", source, kind, e.what()));
  }
  return std::nullopt;
}

std::vector<ReportCell> collect_cells(std::span<const std::filesystem::path> dirs) {
  std::vector<std::filesystem::path> files;
  for (const auto& d : dirs) {
    if (std::filesystem::is_regular_file(d)) {
      files.push_back(d);
      continue;
    }
    if (!std::filesystem::is_directory(d)) throw ValidationError(fmt::format("no such directory '{}'", d.string()));
    for (const auto& e : std::filesystem::recursive_directory_iterator(d)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ReportCell> cells;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error&) {
      continue;  // not one of ours
    }
    if (auto c = cell_from_json(j, f.generic_string())) cells.push_back(std::move(*c));
  }
  return cells;
}

const ReportCell* ReportTable::find(TaskId task, const std::string& column) const {
  for (const auto& c : cells) {
    if (c.task == task && c.column == column) return &c;
  }
  return nullptr;
}

ReportTable merge_cells(std::span<const ReportCell> cells) {
  ReportTable t;
  for (const auto& c : cells) {
    if (const ReportCell* prev = t.find(c.task, c.column)) {
      if (prev->accuracy != c.accuracy) {
        throw ValidationError(fmt::format("conflicting results for {} / {}: {} ({}) vs {} ({})", task_name(c.task),
                                          c.column, prev->accuracy, prev->source, c.accuracy, c.source));
      }
      continue;
    }
    t.cells.push_back(c);
  }
  t.columns = {"RNN", "Stack-RNN", "Tape-RNN", "Transformer", "LSTM"};
  for (Arch a : kAllArchs) {
    const std::string col = arch_column(a);
    if (std::find(t.columns.begin(), t.columns.end(), col) != t.columns.end()) continue;
    if (std::any_of(t.cells.begin(), t.cells.end(), [&](const ReportCell& c) { return c.column == col; })) {
      t.columns.push_back(col);
    }
  }
  t.columns.push_back("LLM");
  t.columns.push_back("CoT");
  return t;
}

namespace {

std::string cell_text(const ReportTable& t, TaskId task, const std::string& col) {
  const ReportCell* c = t.find(task, col);
  return c ? fmt::format("{:.1f}", c->accuracy) : "—";
}

}  // namespace

std::string report_markdown(const ReportTable& t) {
  std::string out = "| Level | Task |";
  std::string rule = "|---|---|";
  for (const auto& c : t.columns) {
    out += " " + c + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (TaskId task : kAllTasks) {
    out += fmt::format("| {} | {} |", level_label(task_level(task)), task_title(task));
    for (const auto& c : t.columns) out += " " + cell_text(t, task, c) + " |";
    out += "\n";
  }
  return out;
}

std::string report_csv(const ReportTable& t) {
  std::string out = "level,task";
  for (const auto& c : t.columns) out += "," + c;
  out += "\n";
  for (TaskId task : kAllTasks) {
    out += fmt::format("{},{}", level_label(task_level(task)), task_name(task));
    for (const auto& c : t.columns) {
      const ReportCell* cell = t.find(task, c);
      out += "," + (cell ? fmt::format("{:.1f}", cell->accuracy) : std::string());
    }
    out += "\n";
  }
  return out;
}

}  // namespace rlab
