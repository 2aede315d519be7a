// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Prompted evaluation of chat models on the task suite: prompt rendering in
// direct-answer and step-by-step modes, a chat-completions HTTP client with
// retries, record/replay transcripts, answer extraction and best-of-3
// scoring.

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlab/errors.hpp"
#include "rlab/tasks.hpp"

namespace rlab {

enum class PromptMode { kCot, kDirect };
std::string_view prompt_mode_name(PromptMode mode) noexcept;  // "cot" | "direct"
PromptMode parse_prompt_mode(std::string_view name);

/// Verbatim clause required in every direct-mode prompt.
inline constexpr std::string_view kDirectClause = "Give a direct answer without steps";

struct PromptSpec {
  PromptMode mode = PromptMode::kDirect;
  TaskId task = TaskId::kParityCheck;
  TaskInstance instance;
  std::string system;
  /// payload + "\n\n" + instructions
  std::string payload;
  std::string instructions;

  std::string user() const { return payload + "\n\n" + instructions; }
};

PromptSpec build_prompt(const TaskInstance& instance, PromptMode mode);

// ---- transport -------------------------------------------------------------------

/// Missing or rejected credential. Never retried.
class AuthError : public NetworkError {
 public:
  using NetworkError::NetworkError;
  const char* kind() const noexcept override { return "auth"; }
};

/// Transient failures persisted through every retry.
class TimeoutError : public NetworkError {
 public:
  using NetworkError::NetworkError;
  const char* kind() const noexcept override { return "timeout"; }
};

/// The endpoint answered, but not with a chat completion.
class MalformedResponseError : public NetworkError {
 public:
  using NetworkError::NetworkError;
  const char* kind() const noexcept override { return "malformed-response"; }
};

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  std::optional<double> temperature;  // unset: endpoint default
  /// Lookup key for replay: task, instance seed, mode and trial.
  std::string key;
};

struct ChatResponse {
  std::string text;
  /// model, temperature, timestamp, attempts, ...
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct EndpointConfig {
  std::string url;  // e.g. https://api.example.com/v1/chat/completions
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature;
  std::chrono::milliseconds timeout{60000};
  std::size_t max_retries = 4;
  std::chrono::milliseconds backoff{1000};  // doubled after every failed attempt
};

/// Chat-completions over HTTP(S). Retries 429, 5xx and connection failures
/// with exponential backoff; 401/403 raise AuthError immediately.
class HttpChatClient : public ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  using Clock = std::function<std::string()>;  // ISO-8601 timestamp

  /// Reads the credential from the environment; throws AuthError when it is
  /// missing, before any request is made.
  explicit HttpChatClient(EndpointConfig config, Sleeper sleep = {}, Clock clock = {});
  /// Explicit credential (tests).
  HttpChatClient(EndpointConfig config, std::string api_key, Sleeper sleep = {}, Clock clock = {});

  ChatResponse complete(const ChatRequest& request) override;
  /// One line per attempt: "attempt N: status S" or "attempt N: error ...".
  std::vector<std::string> attempt_log() const;

 private:
  EndpointConfig config_;
  std::string api_key_;
  Sleeper sleep_;
  Clock clock_;
  mutable std::mutex log_mutex_;
  std::vector<std::string> log_;
};

struct Transcript {
  TaskId task = TaskId::kParityCheck;
  std::uint64_t instance_seed = 0;
  std::size_t n = 0;
  PromptMode mode = PromptMode::kDirect;
  std::size_t trial = 1;  // 1..3
  std::string system;
  std::string user;
  std::string completion;  // raw text, byte-exact
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::optional<std::vector<std::string>> parsed;  // unset when parsing failed
  std::string parse_status = "failed";             // ok | lenient | failed

  nlohmann::ordered_json to_json() const;
  static Transcript from_json(const nlohmann::ordered_json& j);
  bool operator==(const Transcript&) const = default;
};

std::string transcript_key(TaskId task, std::uint64_t instance_seed, PromptMode mode, std::size_t trial);

/// Serves completions from previously recorded transcripts, keyed by
/// (task, instance seed, mode, trial). Never touches the network.
class ReplayChatClient : public ChatClient {
 public:
  explicit ReplayChatClient(std::vector<Transcript> transcripts);
  static ReplayChatClient from_file(const std::filesystem::path& path);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::map<std::string, Transcript> by_key_;
};

/// Appends transcripts as JSON lines, flushing after each one.
class TranscriptSink {
 public:
  explicit TranscriptSink(const std::filesystem::path& path);
  TranscriptSink() = default;  // memory only
  void write(const Transcript& t);
  std::vector<Transcript> written() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mutex_;
  std::vector<Transcript> written_;
};

std::vector<Transcript> read_transcripts(const std::filesystem::path& path);
std::vector<Transcript> parse_transcripts(std::string_view jsonl);

/// Sends one prompt and persists the transcript before returning it.
Transcript query_endpoint(const PromptSpec& prompt, std::size_t trial, ChatClient& client, TranscriptSink& sink,
                          const std::string& model = {}, std::optional<double> temperature = {});

/// Runs every (instance, trial) pair with at most `concurrency` requests in
/// flight. Transcripts come back ordered by instance, then trial.
std::vector<Transcript> run_llm_eval(std::span<const TaskInstance> instances, PromptMode mode, ChatClient& client,
                                     TranscriptSink& sink, std::size_t trials = 3, std::size_t concurrency = 4,
                                     const std::string& model = {}, std::optional<double> temperature = {});

// ---- answers and scores --------------------------------------------------------

enum class ParseStatus { kOk, kLenient, kFailed };
std::string_view parse_status_name(ParseStatus s) noexcept;

struct ParsedAnswer {
  ParseStatus status = ParseStatus::kFailed;
  std::vector<std::string> tokens;
};

/// Reads the last "ANSWER:" line (falling back to the last non-empty line,
/// flagged lenient) and normalizes it to the task's target tokens.
ParsedAnswer extract_answer(std::string_view completion, TaskId task);

struct InstanceOutcome {
  std::uint64_t seed = 0;
  std::vector<char> trials;  // one flag per trial, missing trials false
  bool correct = false;
};

struct ScoreReport {
  TaskId task = TaskId::kParityCheck;
  std::optional<PromptMode> mode;
  std::vector<InstanceOutcome> instances;
  double accuracy = 0.0;  // percent
  std::size_t trials = 3;
  std::size_t lenient_parses = 0;

  nlohmann::ordered_json to_json() const;
};

/// Best-of-`trials`: an instance is correct if any of its trials is. Throws
/// ValidationError for transcripts that belong to no instance or carry a
/// trial index outside 1..trials.
ScoreReport score(TaskId task, std::span<const Transcript> transcripts, std::span<const TaskInstance> instances,
                  std::size_t trials = 3);

/// Instances drawn for prompting: instance i is generate(task, seed + i),
/// so n follows the task's default range.
std::vector<TaskInstance> llm_instances(TaskId task, std::size_t count, std::uint64_t seed);

}  // namespace rlab
