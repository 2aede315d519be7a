// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// rlab: dataset generation, training, evaluation, profiling, prompted LLM
// evaluation and report synthesis behind one command.
//
// Exit codes: 0 success, 2 invalid input, 3 runtime or numeric failure,
// 4 network failure. Failures also print one JSON line on stderr:
//   {"error":"<kind>","message":"...","exit_code":N}

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rlab/llm_eval.hpp"
#include "rlab/profiler.hpp"
#include "rlab/report.hpp"
#include "rlab/tasks.hpp"
#include "rlab/trainer.hpp"

namespace fs = std::filesystem;
using namespace rlab;

namespace {

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const NetworkError*>(&e)) return 4;
  return 3;
}

int fail(const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << '\n';
  return code;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text;
  else write_text(path, text);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- gen ---------------------------------------------------------------------------

struct GenArgs {
  std::string task;
  std::size_t count = 50;
  std::uint64_t seed = 0;
  std::string lengths;
  std::string out;
};

std::string dataset(TaskId task, const GenArgs& a) {
  std::string text;
  for (std::size_t i = 0; i < a.count; ++i) {
    const TaskInstance x = a.lengths.empty() ? generate(task, a.seed + i)
                                             : generate(task, a.seed + i, parse_length_range(a.lengths));
    text += to_json(x).dump() + "\n";
  }
  return text;
}

void run_gen(const GenArgs& a) {
  if (a.task == "all") {
    const fs::path dir = a.out.empty() ? fs::path("data") : fs::path(a.out);
    for (TaskId t : kAllTasks) write_text(dir / (std::string(task_name(t)) + ".jsonl"), dataset(t, a));
    return;
  }
  emit(a.out, dataset(parse_task(a.task), a));
}

// ---- train / eval --------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps;
  std::optional<std::size_t> n_seeds;
  bool quiet = false;
};

void run_train(const TrainArgs& a) {
  TrainConfig c = load_train_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (a.max_steps) c.max_steps = *a.max_steps;
  if (a.n_seeds) c.n_seeds = *a.n_seeds;
  c.validate();
  const fs::path dir =
      a.out.empty() ? fs::path("runs") / fmt::format("{}-{}", task_name(c.task), arch_name(c.model.arch)) : fs::path(a.out);
  fs::create_directories(dir);

  std::vector<Metrics> all;
  std::mutex m;
  const TrainResult r = best_of_seeds(c, [&](const Metrics& x) {
    std::lock_guard lock(m);
    all.push_back(x);
    if (!a.quiet) std::cerr << x.to_json().dump() << '\n';
  });
  // Runs finish in any order; the file is sorted so reruns are byte-identical.
  std::sort(all.begin(), all.end(), [](const Metrics& x, const Metrics& y) {
    return std::tie(x.seed, x.step) < std::tie(y.seed, y.step);
  });
  std::string lines;
  for (const auto& x : all) lines += x.to_json().dump() + "\n";
  write_text(dir / "metrics.jsonl", lines);
  save_checkpoint(dir / "best.ckpt", r.best);

  nlohmann::ordered_json s;
  s["kind"] = "train-summary";
  s["task"] = std::string(task_name(c.task));
  s["arch"] = std::string(arch_name(c.model.arch));
  s["accuracy"] = r.best_test_accuracy;
  s["seed"] = r.seed;
  s["step"] = r.best_step;
  s["n_seeds"] = c.n_seeds;
  s["train_lengths"] = to_string(c.train_lengths);
  s["test_lengths"] = to_string(c.test_lengths);
  s["config"] = c.to_json();
  write_text(dir / "summary.json", s.dump(2) + "\n");
  std::cout << s.dump() << '\n';
}

struct EvalArgs {
  std::string checkpoint;
  std::string task;
  std::string lengths;
  std::size_t count = 500;
  std::uint64_t seed = 0;
};

void run_eval(const EvalArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  std::string task = a.task;
  if (task.empty()) {
    if (!ck.metadata.contains("task")) throw ValidationError("checkpoint has no task; pass --task");
    task = ck.metadata["task"].get<std::string>();
  }
  std::string lengths = a.lengths;
  if (lengths.empty()) {
    if (!ck.metadata.contains("test_lengths")) throw ValidationError("checkpoint has no test lengths; pass --lengths");
    lengths = ck.metadata["test_lengths"].get<std::string>();
  }
  const TaskId t = parse_task(task);
  const LengthRange range = parse_length_range(lengths);
  nlohmann::ordered_json j;
  j["kind"] = "eval";
  j["task"] = std::string(task_name(t));
  j["arch"] = std::string(arch_name(ck.config.arch));
  j["lengths"] = to_string(range);
  j["count"] = a.count;
  j["seed"] = a.seed;
  j["accuracy"] = evaluate(ck, t, range, a.count, a.seed);
  std::cout << j.dump() << '\n';
}

// ---- profile -----------------------------------------------------------------------

struct ProfileArgs {
  std::string archs;
  std::string n_grid = "4,8,16,32";
  std::size_t k = 4;
  std::size_t d_model = 8;
  std::size_t layers = 1;
  std::size_t heads = 1;
  std::size_t vocab = 8;
  std::string csv;
  std::string markdown;
};

void run_profile(const ProfileArgs& a) {
  std::vector<ModelConfig> configs;
  for (const auto& name : split_commas(a.archs)) {
    ModelConfig c;
    c.arch = parse_arch(name);
    c.vocab_size = a.vocab;
    c.d_model = a.d_model;
    c.n_layers = a.layers;
    c.n_heads = a.heads;
    c.block_size = a.k;
    c.validate();
    configs.push_back(c);
  }
  if (configs.empty()) throw ValidationError("profile: no architectures given");
  std::vector<std::size_t> grid;
  for (const auto& s : split_commas(a.n_grid)) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ValidationError(fmt::format("profile: bad length '{}'", s));
    grid.push_back(v);
  }
  const auto rows = profile_table(configs, grid);
  if (!a.csv.empty()) emit(a.csv, profile_csv(rows));
  emit(a.markdown, profile_markdown(rows));
}

// ---- llm-eval / score ------------------------------------------------------------

struct LlmArgs {
  std::string task;
  std::string mode = "direct";
  std::size_t count = 50;
  std::uint64_t seed = 0;
  std::size_t trials = 3;
  std::size_t concurrency = 4;
  std::string out;
  std::string replay;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature;
  std::size_t timeout_ms = 60000;
  std::size_t max_retries = 4;
  std::string score_out;
};

void run_llm_eval_cmd(const LlmArgs& a) {
  const TaskId task = parse_task(a.task);
  const PromptMode mode = parse_prompt_mode(a.mode);
  if (a.replay.empty() == a.endpoint.empty()) throw ValidationError("llm-eval: pass exactly one of --replay and --endpoint");
  std::unique_ptr<ChatClient> client;
  if (!a.replay.empty()) {
    client = std::make_unique<ReplayChatClient>(ReplayChatClient::from_file(a.replay));
  } else {
    EndpointConfig cfg;
    cfg.url = a.endpoint;
    cfg.model = a.model;
    cfg.api_key_env = a.api_key_env;
    cfg.temperature = a.temperature;
    cfg.timeout = std::chrono::milliseconds(a.timeout_ms);
    cfg.max_retries = a.max_retries;
    client = std::make_unique<HttpChatClient>(cfg);
  }
  const auto instances = llm_instances(task, a.count, a.seed);
  TranscriptSink sink(a.out);
  const auto ts = run_llm_eval(instances, mode, *client, sink, a.trials, a.concurrency, a.model, a.temperature);
  // The sink holds completion order; rewrite it ordered by instance and trial.
  std::string lines;
  for (const auto& t : ts) lines += t.to_json().dump() + "\n";
  write_text(a.out, lines);
  emit(a.score_out, score(task, ts, instances, a.trials).to_json().dump(2) + "\n");
}

struct ScoreArgs {
  std::string transcripts;
  std::string task;
  std::size_t count = 50;
  std::uint64_t seed = 0;
  std::size_t trials = 3;
  std::string out;
};

void run_score(const ScoreArgs& a) {
  const auto ts = read_transcripts(a.transcripts);
  std::string task = a.task;
  if (task.empty()) {
    if (ts.empty()) throw ValidationError("score: no transcripts and no --task");
    task = std::string(task_name(ts.front().task));
  }
  const TaskId t = parse_task(task);
  emit(a.out, score(t, ts, llm_instances(t, a.count, a.seed), a.trials).to_json().dump(2) + "\n");
}

// ---- prompt ------------------------------------------------------------------------

struct PromptArgs {
  std::string task;
  std::string mode = "direct";
  std::uint64_t seed = 0;
};

// Prints the exact system and user messages llm-eval sends for instance 0.
void run_prompt(const PromptArgs& a) {
  const auto x = llm_instances(parse_task(a.task), 1, a.seed).front();
  const PromptSpec p = build_prompt(x, parse_prompt_mode(a.mode));
  std::cout << "--- system ---\n" << p.system << "\n--- user ---\n" << p.user() << "\n";
}

// ---- report ------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> dirs;
  std::string csv;
  std::string markdown;
};

void run_report(const ReportArgs& a) {
  std::vector<fs::path> dirs(a.dirs.begin(), a.dirs.end());
  const ReportTable t = merge_cells(collect_cells(dirs));
  if (!a.csv.empty()) emit(a.csv, report_csv(t));
  emit(a.markdown, report_markdown(t));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rlab: a laboratory for sequence models on formal-language tasks", "rlab"};
  app.require_subcommand(1);
  app.footer("\n" + config_reference());

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write task instances as JSON lines (instance i uses seed + i)");
  g->add_option("task", gen.task, "Task name, or 'all' for one file per task")->required();
  g->add_option("--count", gen.count, "Instances per task")->capture_default_str();
  g->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
  g->add_option("--lengths", gen.lengths, "Length range a-b (default: the task's range)");
  g->add_option("--out", gen.out, "Output file (default stdout); a directory for 'all' (default data/)");

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train best-of-seeds from a YAML config");
  tr->add_option("config", train_args.config, "YAML config (keys listed below)")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", train_args.out, "Run directory (default runs/<task>-<arch>)");
  tr->add_option("--seed", train_args.seed, "Override the config seed");
  tr->add_option("--max-steps", train_args.max_steps, "Override max-steps");
  tr->add_option("--n-seeds", train_args.n_seeds, "Override n-seeds");
  tr->add_flag("--quiet", train_args.quiet, "Do not stream metrics to stderr");
  tr->footer("\n" + config_reference());

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("checkpoint", eval.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--task", eval.task, "Task (default: the checkpoint's)");
  ev->add_option("--lengths", eval.lengths, "Length range a-b (default: the checkpoint's test range)");
  ev->add_option("--count", eval.count, "Instances")->capture_default_str();
  ev->add_option("--seed", eval.seed, "Evaluation seed")->capture_default_str();

  ProfileArgs prof;
  auto* pr = app.add_subcommand("profile", "Depth, time and state growth per architecture");
  pr->add_option("archs", prof.archs, "Comma-separated architectures")->required();
  pr->add_option("--n", prof.n_grid, "Comma-separated input lengths (at least 4 distinct)")->capture_default_str();
  pr->add_option("--k", prof.k, "Block length for block-recurrent")->capture_default_str();
  pr->add_option("--d-model", prof.d_model, "Model width")->capture_default_str();
  pr->add_option("--layers", prof.layers, "Layers")->capture_default_str();
  pr->add_option("--heads", prof.heads, "Attention heads")->capture_default_str();
  pr->add_option("--vocab", prof.vocab, "Vocabulary size")->capture_default_str();
  pr->add_option("--csv", prof.csv, "Also write per-length samples as CSV");
  pr->add_option("--markdown", prof.markdown, "Write the markdown table here (default stdout)");

  LlmArgs llm;
  auto* le = app.add_subcommand("llm-eval", "Prompt a chat model (or replay transcripts) and score best-of-trials");
  le->add_option("--task", llm.task, "Task")->required();
  le->add_option("--mode", llm.mode, "direct or cot")->capture_default_str();
  le->add_option("--count", llm.count, "Instances")->capture_default_str();
  le->add_option("--seed", llm.seed, "Instance i uses seed + i")->capture_default_str();
  le->add_option("--trials", llm.trials, "Trials per instance")->capture_default_str();
  le->add_option("--concurrency", llm.concurrency, "Requests in flight")->capture_default_str();
  le->add_option("--out", llm.out, "Transcript file (JSON lines)")->required();
  le->add_option("--replay", llm.replay, "Serve completions from recorded transcripts");
  le->add_option("--endpoint", llm.endpoint, "Chat-completions URL");
  le->add_option("--model", llm.model, "Model name sent to the endpoint");
  le->add_option("--api-key-env", llm.api_key_env, "Environment variable holding the key")->capture_default_str();
  le->add_option("--temperature", llm.temperature, "Sampling temperature (default: endpoint default)");
  le->add_option("--timeout-ms", llm.timeout_ms, "Per-request timeout")->capture_default_str();
  le->add_option("--max-retries", llm.max_retries, "Retries for transient failures")->capture_default_str();
  le->add_option("--score", llm.score_out, "Write the score report here (default stdout)");

  ScoreArgs sc;
  auto* so = app.add_subcommand("score", "Re-score persisted transcripts");
  so->add_option("transcripts", sc.transcripts, "Transcript file")->required()->check(CLI::ExistingFile);
  so->add_option("--task", sc.task, "Task (default: from the transcripts)");
  so->add_option("--count", sc.count, "Instances")->capture_default_str();
  so->add_option("--seed", sc.seed, "Instance i uses seed + i")->capture_default_str();
  so->add_option("--trials", sc.trials, "Trials per instance")->capture_default_str();
  so->add_option("--out", sc.out, "Output file (default stdout)");

  ReportArgs rep;
  auto* rp = app.add_subcommand("report", "Merge training summaries and LLM scores into one table");
  rp->add_option("dirs", rep.dirs, "Directories (or files) to scan for *.json")->required();
  rp->add_option("--csv", rep.csv, "Also write CSV here");
  rp->add_option("--markdown", rep.markdown, "Write markdown here (default stdout)");

  PromptArgs pa;
  auto* pm = app.add_subcommand("prompt", "Print the rendered LLM prompt for one instance");
  pm->add_option("task", pa.task, "Task")->required();
  pm->add_option("--mode", pa.mode, "direct or cot")->capture_default_str();
  pm->add_option("--seed", pa.seed, "Instance seed")->capture_default_str();
  pm->callback([&] { run_prompt(pa); });

  app.add_subcommand("config-reference", "Print every training config key with its default")
      ->callback([] { std::cout << config_reference(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), exit_code_for(e));
  }

  try {
    if (g->parsed()) run_gen(gen);
    else if (tr->parsed()) run_train(train_args);
    else if (ev->parsed()) run_eval(eval);
    else if (pr->parsed()) run_profile(prof);
    else if (le->parsed()) run_llm_eval_cmd(llm);
    else if (so->parsed()) run_score(sc);
    else if (rp->parsed()) run_report(rep);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), exit_code_for(e));
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 3);
  }
  return 0;
}
