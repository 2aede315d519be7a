// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Regenerates the replay fixtures in tests/fixtures/llm/. The completions are
// scripted so that the expected scores can be worked out by hand:
//
//   parity-direct.jsonl     50 instances (seeds 1000..1049), 3 trials each.
//                           Instances 0..22 have exactly one correct trial,
//                           the rest none: 23/50 = 46.0.
//   reverse-list-cot.jsonl  10 instances (seeds 2000..2009). Instances 0..6
//                           are right on trial 3 only (F, F, T); 7..9 never:
//                           7/10 = 70.0.
//
// Usage: make_llm_fixtures <output-dir>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>

#include "rlab/llm_eval.hpp"

namespace {

using namespace rlab;

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + xs[i];
  return out;
}

ChatResponse canned(std::string text) {
  ChatResponse r;
  r.text = std::move(text);
  r.metadata["model"] = "fixture-model";
  r.metadata["temperature"] = "default";
  r.metadata["timestamp"] = "2026-01-01T00:00:00Z";
  r.metadata["endpoint"] = "replay";
  r.metadata["attempts"] = 1;
  return r;
}

// Index of an instance within its fixture, and the trial, from the replay key.
std::pair<std::size_t, std::size_t> slot(const ChatRequest& req, std::uint64_t base) {
  const auto a = req.key.find('/');
  const auto b = req.key.find('/', a + 1);
  const std::uint64_t seed = std::stoull(req.key.substr(a + 1, b - a - 1));
  return {static_cast<std::size_t>(seed - base), static_cast<std::size_t>(req.key.back() - '0')};
}

class ParityScript : public ChatClient {
 public:
  explicit ParityScript(std::span<const TaskInstance> xs) : xs_(xs) {}
  ChatResponse complete(const ChatRequest& req) override {
    const auto [i, trial] = slot(req, 1000);
    const std::string right = xs_[i].target_tokens[0];
    const std::string wrong = right == "True" ? "False" : "True";
    const bool correct = i < 23 && trial == i % 3 + 1;
    const std::string ans = correct ? right : wrong;
    // Vary the surface form; every variant parses.
    switch ((i + trial) % 4) {
      case 0: return canned("ANSWER: " + ans);
      case 1: return canned("**Answer:** " + std::string(ans == "True" ? "true" : "false"));
      case 2: return canned("ANSWER: " + std::string(ans == "True" ? "yes" : "no") + ".");
      default: return canned(ans);  // no delimiter: lenient parse
    }
  }

 private:
  std::span<const TaskInstance> xs_;
};

class ReverseScript : public ChatClient {
 public:
  explicit ReverseScript(std::span<const TaskInstance> xs) : xs_(xs) {}
  ChatResponse complete(const ChatRequest& req) override {
    const auto [i, trial] = slot(req, 2000);
    const auto& x = xs_[i];
    std::vector<std::string> built;
    std::string text;
    for (std::size_t k = x.input_tokens.size(); k-- > 0;) {
      built.push_back(x.input_tokens[k]);
      text += "Step " + std::to_string(built.size()) + ": [" + join(built) + "]\n";
    }
    std::vector<std::string> answer = x.target_tokens;
    if (!(i < 7 && trial == 3)) {
      std::swap(answer.front(), answer.back());
      if (answer == x.target_tokens) answer.pop_back();  // equal ends
    }
    return canned(text + "ANSWER: [" + join(answer) + "]");
  }

 private:
  std::span<const TaskInstance> xs_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_llm_fixtures <output-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);

  const auto parity = llm_instances(TaskId::kParityCheck, 50, 1000);
  ParityScript ps(parity);
  TranscriptSink p_sink(dir / "parity-direct.jsonl");
  run_llm_eval(parity, PromptMode::kDirect, ps, p_sink, 3, 1);

  const auto rev = llm_instances(TaskId::kReverseList, 10, 2000);
  ReverseScript rs(rev);
  TranscriptSink r_sink(dir / "reverse-list-cot.jsonl");
  run_llm_eval(rev, PromptMode::kCot, rs, r_sink, 3, 1);
  return 0;
}
