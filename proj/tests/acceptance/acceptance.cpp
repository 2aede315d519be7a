// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one line per criterion:
//   PASS <n> <name>: <details>
//   FAIL <n> <name>: <details>
// and exits 1 if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "reference_tasks.hpp"
#include "rlab/llm_eval.hpp"
#include "rlab/models.hpp"
#include "rlab/profiler.hpp"
#include "rlab/rng.hpp"
#include "rlab/tasks.hpp"
#include "rlab/trainer.hpp"

namespace fs = std::filesystem;
using namespace rlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Paths {
  fs::path fixtures;
  fs::path configs;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<int> random_ids(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<int> ids(n);
  for (auto& id : ids) id = static_cast<int>(rng.uniform_int(3, static_cast<std::int64_t>(vocab) - 1));
  return ids;
}

// ---- 1, 2: parallel and recurrent forms agree ---------------------------------------

Outcome forms_agree(std::vector<Arch> archs, double tol, double budget_s) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_at;
  for (Arch a : archs) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      ModelConfig c;
      c.arch = a;
      c.vocab_size = 10;
      c.d_model = 16;
      c.n_layers = 2;
      c.n_heads = 2;
      c.seed = seed;
      Rng rng(derive_seed(seed, seed_stream::kInstances));
      const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 64));
      const auto ids = random_ids(rng, n, c.vocab_size);
      const ModelParams p = init_params(c);
      const double d = max_abs_diff(forward_logits(c, p, ids, ForwardMode::kParallel),
                                    forward_logits(c, p, ids, ForwardMode::kRecurrent));
      if (d > worst || std::isnan(d)) {
        worst = d;
        worst_at = fmt::format("{} seed {} n {}", arch_name(a), seed, n);
      }
    }
  }
  const double t = seconds_since(t0);
  const bool pass = worst < tol && t < budget_s;
  return {pass, fmt::format("max |parallel - recurrent| = {:.3g} (tol {:g}, worst at {}), {} archs x 100 seeds, "
                            "{:.1f} s (budget {:g} s)",
                            worst, tol, worst_at.empty() ? "-" : worst_at, archs.size(), t, budget_s)};
}

// ---- 3: gradients --------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_at = "-";
  for (Arch a : kAllArchs) {
    ModelConfig c;
    c.arch = a;
    c.vocab_size = 6;
    c.d_model = 4;
    c.n_layers = 1;
    c.n_heads = 2;
    c.block_size = 2;
    c.memory_width = 2;
    c.seed = 17;
    const ModelParams params = init_params(c);
    std::vector<std::string> names;
    std::vector<Tensor> points;
    for (const auto& [name, t] : params) {
      names.push_back(name);
      points.push_back(t);
    }
    const std::vector<int> ids = {3, 5, 4, 3, 1};
    const std::vector<std::size_t> targets = {1, 4, 2, 5, 3};
    const GraphFunction f = [&](Graph& g, std::span<const Value> leaves) {
      BoundParams p;
      for (std::size_t i = 0; i < names.size(); ++i) p[names[i]] = leaves[i];
      return cross_entropy(model_forward(g, c, p, Batch::single(ids)).logits, targets);
    };
    const GradReport r = grad_check(f, points, 1e-5);
    if (r.max_rel_err > worst || std::isnan(r.max_rel_err)) {
      worst = r.max_rel_err;
      worst_at = fmt::format("{} {}[{}]", arch_name(a), names[r.worst_input], r.worst_index);
    }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 300,
          fmt::format("max relative error {:.3g} over {} archs (tol 1e-4, worst at {}), {:.1f} s", worst,
                      kAllArchs.size(), worst_at, t)};
}

// ---- 4: oracles ------------------------------------------------------------------------

Outcome oracles() {
  using reference::split;
  using Tokens = std::vector<std::string>;
  std::vector<std::string> problems;
  auto expect = [&](TaskId task, const std::string& input, const Tokens& want) {
    if (oracle(task, split(input)) != want) problems.push_back(fmt::format("example '{}'", input));
  };
  expect(TaskId::kModArithSimple, "1 + 3 - 2", {"2"});
  expect(TaskId::kModArithComplex, "( ( 3 + 4 ) - 1 ) × ( 2 + ( 1 - 2 ) )", {"1"});
  expect(TaskId::kStackManipulation, "grape banana apple ; pop apple push peach", {"grape", "banana", "peach"});
  expect(TaskId::kOddsFirst, "apple grape banana peach", {"apple", "banana", "grape", "peach"});
  expect(TaskId::kParityCheck, "apple apple banana", {"True"});

  std::size_t checked = 0;
  for (TaskId task : kAllTasks) {
    std::size_t bad = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const TaskInstance x = generate(task, seed);
      ++checked;
      if (oracle(task, x.input_tokens) != x.target_tokens ||
          reference::reference_answer(task, x.input_tokens) != x.target_tokens) {
        ++bad;
      }
    }
    if (bad) problems.push_back(fmt::format("{}: {} disagreements", task_name(task), bad));
  }
  std::string detail = fmt::format("{} instances across {} tasks agree with brute-force references; 5 printed examples",
                                   checked, kAllTasks.size());
  if (!problems.empty()) detail = "mismatches: " + problems.front() + fmt::format(" (+{} more)", problems.size() - 1);
  return {problems.empty(), detail};
}

// ---- 5: complexity profile --------------------------------------------------------

Outcome complexity() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = [](Arch a) {
    ModelConfig c;
    c.arch = a;
    c.vocab_size = 8;
    c.d_model = 8;
    c.block_size = 4;
    c.halting_alpha = 1.0;  // Universal: T = n
    return c;
  };
  auto series = [](const ModelConfig& c, std::size_t lo, std::size_t hi, std::size_t step) {
    const ModelParams p = init_params(c);
    std::vector<std::pair<std::size_t, double>> s;
    for (std::size_t n = lo; n <= hi; n += step) {
      s.emplace_back(n, static_cast<double>(profile(c, p, profile_tokens(c, n)).depth));
    }
    return s;
  };
  const ComplexityFit tf = fit_complexity(series(cfg(Arch::kTransformer), 4, 32, 4));
  const ComplexityFit rnn = fit_complexity(series(cfg(Arch::kRnn), 4, 32, 4));
  // Every length from the second block on, so steps inside a block are seen.
  const ComplexityFit blk = fit_complexity(series(cfg(Arch::kBlockRecurrentTransformer), 5, 32, 1), 4);
  const ComplexityFit uni = fit_complexity(series(cfg(Arch::kUniversalTransformer), 4, 32, 4));
  const double t = seconds_since(t0);

  const bool ok_tf = tf.class_label == ComplexityClass::kConstant && tf.slope == 0.0;
  const bool ok_rnn = rnn.class_label == ComplexityClass::kLinear && rnn.r_squared > 0.999;
  const bool ok_blk = blk.class_label == ComplexityClass::kLinearOverK && blk.k == 4;
  const bool ok_uni = uni.class_label == ComplexityClass::kLinear && uni.r_squared > 0.999;
  return {ok_tf && ok_rnn && ok_blk && ok_uni && t < 60,
          fmt::format("transformer {} (slope {:g}); rnn {} (r² {:.5f}); block-recurrent {} (r² {:.5f}); "
                      "universal {} (r² {:.5f}); {:.1f} s",
                      tf.big_o(), tf.slope, rnn.big_o(), rnn.r_squared, blk.big_o(), blk.r_squared, uni.big_o(),
                      uni.r_squared, t)};
}

// ---- 6: training ------------------------------------------------------------------------

Outcome training(const Paths& paths) {
  struct Statement {
    const char* config;
    bool at_least;
    double bound;
  };
  const Statement statements[] = {
      {"parity-rnn.yaml", true, 90.0},
      {"parity-transformer.yaml", false, 75.0},
      {"sorting-lstm.yaml", true, 80.0},
  };
  int held = 0;
  std::vector<std::string> parts;
  for (const auto& s : statements) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrainConfig c = load_train_config(paths.configs / s.config);
    std::vector<Metrics> history;
    std::mutex m;
    std::string result;
    bool ok = false;
    try {
      const TrainResult r = best_of_seeds(c, [&](const Metrics& x) {
        std::lock_guard lock(m);
        history.push_back(x);
      });
      ok = s.at_least ? r.best_test_accuracy >= s.bound : r.best_test_accuracy <= s.bound;
      result = fmt::format("{} {} {}: best {:.1f} (seed {}, step {})", s.config, s.at_least ? ">=" : "<=", s.bound,
                           r.best_test_accuracy, r.seed, r.best_step);
    } catch (const Error& e) {
      result = fmt::format("{}: error {}", s.config, e.what());
    }
    result += fmt::format(" [{:.0f} s]", seconds_since(t0));
    if (!ok) {
      // Triage: per-seed trajectory.
      std::sort(history.begin(), history.end(),
                [](const Metrics& a, const Metrics& b) { return std::tie(a.seed, a.step) < std::tie(b.seed, b.step); });
      for (const auto& h : history) std::cerr << "  " << s.config << " " << h.to_json().dump() << '\n';
    }
    held += ok;
    parts.push_back((ok ? "holds: " : "fails: ") + result);
  }
  std::string detail = fmt::format("{}/3 statements hold (need 2)", held);
  for (const auto& p : parts) detail += "; " + p;
  return {held >= 2, detail};
}

// ---- 7: LLM protocol --------------------------------------------------------------

Outcome llm_protocol(const Paths& paths) {
  std::vector<std::string> problems;
  struct Fixture {
    const char* file;
    TaskId task;
    std::size_t count;
    std::uint64_t seed;
    PromptMode mode;
    double expected;
  };
  const Fixture fixtures[] = {
      {"parity-direct.jsonl", TaskId::kParityCheck, 50, 1000, PromptMode::kDirect, 46.0},
      {"reverse-list-cot.jsonl", TaskId::kReverseList, 10, 2000, PromptMode::kCot, 70.0},
  };
  std::vector<std::string> scores;
  for (const auto& f : fixtures) {
    const fs::path path = paths.fixtures / f.file;
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string recorded = ss.str();

    // Full pipeline: prompts -> replay client -> transcripts -> score.
    ReplayChatClient replay = ReplayChatClient::from_file(path);
    const auto instances = llm_instances(f.task, f.count, f.seed);
    TranscriptSink sink;
    const auto ts = run_llm_eval(instances, f.mode, replay, sink, 3, 4);
    std::string replayed;
    for (const auto& t : ts) replayed += t.to_json().dump() + "\n";
    if (replayed != recorded) problems.push_back(fmt::format("{}: replayed transcripts differ from the fixture", f.file));

    const ScoreReport r = score(f.task, ts, instances);
    if (r.accuracy != f.expected) problems.push_back(fmt::format("{}: accuracy {} != {}", f.file, r.accuracy, f.expected));
    scores.push_back(fmt::format("{} {:.1f}", f.file, r.accuracy));

    // Persist, read back and re-score.
    const fs::path tmp = fs::temp_directory_path() / fmt::format("rlab_acceptance_{}", f.file);
    {
      TranscriptSink out(tmp);
      for (const auto& t : ts) out.write(t);
    }
    const std::string again = score(f.task, read_transcripts(tmp), instances).to_json().dump();
    if (again != r.to_json().dump()) problems.push_back(fmt::format("{}: re-score differs", f.file));
    fs::remove(tmp);

    if (f.mode == PromptMode::kDirect) {
      for (const auto& t : ts) {
        if (t.user.find("Give a direct answer without steps") == std::string::npos) {
          problems.push_back(fmt::format("{}: direct prompt without the clause", f.file));
          break;
        }
      }
    }
  }
  // Synthetic grid: 23 of 50 instances right on exactly one trial.
  const auto xs = llm_instances(TaskId::kCycleNavigation, 50, 77);
  std::vector<Transcript> grid;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::string right = xs[i].target_tokens[0];
    for (std::size_t k = 1; k <= 3; ++k) {
      Transcript t;
      t.task = xs[i].task;
      t.instance_seed = xs[i].seed;
      t.trial = k;
      t.completion = "ANSWER: " + ((i < 23 && k == 3) ? right : std::string(right == "1" ? "2" : "1"));
      grid.push_back(t);
    }
  }
  const double g = score(TaskId::kCycleNavigation, grid, xs).accuracy;
  if (g != 46.0) problems.push_back(fmt::format("synthetic grid scored {}", g));
  for (TaskId task : kAllTasks) {
    if (build_prompt(generate(task, 1), PromptMode::kDirect).user().find("Give a direct answer without steps") ==
        std::string::npos) {
      problems.push_back(fmt::format("{} direct prompt lacks the clause", task_name(task)));
    }
  }
  std::string detail = problems.empty() ? "replay reproduces fixtures byte-exact; " : problems.front() + "; ";
  detail += fmt::format("scores {}; synthetic grid {:.1f}; re-score bit-stable", fmt::join(scores, ", "), g);
  return {problems.empty(), detail};
}

// ---- 8: prefix state ------------------------------------------------------------------

Outcome prefix_state() {
  const Arch archs[] = {Arch::kRnn,         Arch::kLstm,
                        Arch::kStackRnn,    Arch::kTapeRnn,
                        Arch::kTransformer, Arch::kRecurrentTransformer,
                        Arch::kFeedbackTransformer, Arch::kBlockRecurrentTransformer,
                        Arch::kRwkv,        Arch::kLinearTransformer};
  std::size_t pairs = 0;
  std::string first_failure;
  for (Arch a : archs) {
    ModelConfig c;
    c.arch = a;
    c.vocab_size = 8;
    c.d_model = 8;
    c.n_layers = 2;
    c.n_heads = 2;
    c.block_size = 3;
    c.memory_width = 4;
    c.seed = 5;
    const ModelParams params = init_params(c);
    Rng rng(derive_seed(static_cast<std::uint64_t>(a), seed_stream::kInstances));
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 24));
      const std::size_t j = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(n) - 1));
      const auto ids = random_ids(rng, n, c.vocab_size);
      std::vector<Tensor> straight;
      {
        Graph g;
        const BoundParams p = rlab::bind(g, params);
        GraphState s = initial_state(g, c, 1, n);
        for (int id : ids) straight.push_back(model_step(g, c, p, s, std::vector<int>{id}).logits.data());
      }
      SequentialState saved;
      {
        Graph g;
        const BoundParams p = rlab::bind(g, params);
        GraphState s = initial_state(g, c, 1, n);
        for (std::size_t t = 0; t < j; ++t) model_step(g, c, p, s, std::vector<int>{ids[t]});
        saved = snapshot(s);
      }
      Graph g;
      const BoundParams p = rlab::bind(g, params);
      GraphState s = restore(g, saved);
      bool same = true;
      for (std::size_t t = j; t < n; ++t) same &= model_step(g, c, p, s, std::vector<int>{ids[t]}).logits.data() == straight[t];
      ++pairs;
      if (!same && first_failure.empty()) first_failure = fmt::format("{} n={} j={}", arch_name(a), n, j);
    }
  }
  return {first_failure.empty(),
          first_failure.empty()
              ? fmt::format("{} archs x 50 (n, j) pairs resume bit-identically ({} pairs)", std::size(archs), pairs)
              : "resume differs at " + first_failure};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rlab acceptance suite"};
  std::vector<int> only;
  Paths paths{RLAB_FIXTURE_DIR "/llm", RLAB_CONFIG_DIR};
  std::string fixtures = paths.fixtures.string(), configs = paths.configs.string();
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 8));
  app.add_option("--fixtures", fixtures, "Directory of LLM replay fixtures")->capture_default_str();
  app.add_option("--configs", configs, "Directory of training configs")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  paths = {fixtures, configs};

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"recurrent-inference equivalence", [] { return forms_agree({Arch::kRwkv, Arch::kLinearTransformer}, 1e-8, 60); }},
      {"kv-cache equivalence", [] { return forms_agree({Arch::kTransformer}, 1e-9, 600); }},
      {"gradient suite", gradients},
      {"oracle suite", oracles},
      {"complexity profile", complexity},
      {"desk-scale training", [&] { return training(paths); }},
      {"llm protocol (offline)", [&] { return llm_protocol(paths); }},
      {"prefix-state resume", prefix_state},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    all &= o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
