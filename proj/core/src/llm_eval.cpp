// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/llm_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace rlab {

std::string_view prompt_mode_name(PromptMode mode) noexcept { return mode == PromptMode::kCot ? "cot" : "direct"; }

PromptMode parse_prompt_mode(std::string_view name) {
  if (name == "cot") return PromptMode::kCot;
  if (name == "direct") return PromptMode::kDirect;
  throw ValidationError(fmt::format("unknown prompt mode '{}' (expected cot or direct)", name));
}

std::string_view parse_status_name(ParseStatus s) noexcept {
  switch (s) {
    case ParseStatus::kOk: return "ok";
    case ParseStatus::kLenient: return "lenient";
    case ParseStatus::kFailed: return "failed";
  }
  return "failed";
}

// ---- prompts ---------------------------------------------------------------------

namespace {

std::string joined(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string concat_digits(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

struct TaskText {
  std::string payload;
  std::string answer_shape;
  std::string cot_hint;
};

TaskText task_text(const TaskInstance& x) {
  const auto& in = x.input_tokens;
  switch (x.task) {
    case TaskId::kModArithSimple:
    case TaskId::kModArithComplex:
      return {fmt::format("Evaluate the following expression and give the result modulo 5 (a number from 0 to 4).\n"
                          "Expression: {}",
                          joined(in, " ")),
              "<number>", "evaluate the expression one operation at a time, reducing modulo 5 after each operation"};
    case TaskId::kParityCheck:
      return {fmt::format("Here is a sequence of fruits: {}.\n"
                          "Does the word \"apple\" appear an even number of times? Answer True if the count is "
                          "even (including zero) and False if it is odd.",
                          joined(in, ", ")),
              "True or False", "go through the fruits one at a time and track whether the apple count so far is even or odd"};
    case TaskId::kCycleNavigation:
      return {fmt::format("Positions 1, 2, 3, 4, 5 form a cycle. You start at position 1. \"forward\" moves to the "
                          "next position (5 wraps to 1), \"backward\" moves to the previous one (1 wraps to 5) and "
                          "\"stay\" does not move.\nActions: {}.\nWhat is the final position?",
                          joined(in, ", ")),
              "<position>", "apply the actions one at a time and write down the position after each"};
    case TaskId::kStackManipulation: {
      const auto delim = std::find(in.begin(), in.end(), ";");
      const std::vector<std::string> init(in.begin(), delim);
      std::vector<std::string> ops;
      for (auto it = delim == in.end() ? delim : delim + 1; it != in.end() && it + 1 != in.end(); it += 2) {
        ops.push_back(*it + " " + *(it + 1));
      }
      return {fmt::format("A stack holds, from bottom to top: {}.\nApply these operations in order: {}.\n"
                          "List the final stack from bottom to top.",
                          joined(init, ", "), joined(ops, ", ")),
              "<comma-separated list>", "apply the operations one at a time and write the whole stack after each"};
    }
    case TaskId::kReverseList:
      return {fmt::format("Reverse this list of fruits: {}.", joined(in, ", ")), "<comma-separated list>",
              "build the reversed list step by step, taking one element at a time from the end of the input"};
    case TaskId::kOddsFirst:
      return {fmt::format("Here is a list of fruits: {}.\nRewrite it with the items at odd positions (1st, 3rd, "
                          "5th, ...) first, followed by the items at even positions (2nd, 4th, ...), keeping the "
                          "original order within each group.",
                          joined(in, ", ")),
              "<comma-separated list>", "first copy the odd-position items one by one, then the even-position items"};
    case TaskId::kAddition:
    case TaskId::kMultiplication: {
      const std::string op = x.task == TaskId::kAddition ? "+" : "*";
      const auto it = std::find(in.begin(), in.end(), op);
      const std::string a = concat_digits(std::span<const std::string>(in.begin(), it));
      const std::string b = it == in.end() ? "" : concat_digits(std::span<const std::string>(it + 1, in.end()));
      return {fmt::format("Compute {} {} {}.", a, x.task == TaskId::kAddition ? "+" : "×", b), "<number>",
              x.task == TaskId::kAddition ? "add digit by digit from the right, writing each carry"
                                          : "multiply by one digit at a time and add the partial products"};
    }
    case TaskId::kSorting:
      return {fmt::format("Sort these numbers in ascending order: {}.", joined(in, ", ")), "<comma-separated list>",
              "insert the numbers one at a time into a sorted list and write the list after each insertion"};
  }
  return {};
}

}  // namespace

PromptSpec build_prompt(const TaskInstance& instance, PromptMode mode) {
  const TaskText t = task_text(instance);
  PromptSpec p;
  p.mode = mode;
  p.task = instance.task;
  p.instance = instance;
  p.system = "You are a careful assistant that solves small formal reasoning problems exactly.";
  p.payload = t.payload;
  if (mode == PromptMode::kDirect) {
    p.instructions = fmt::format("{}. Reply with exactly one line of the form:\nANSWER: {}", kDirectClause,
                                 t.answer_shape);
  } else {
    p.instructions = fmt::format("Think step by step: {}. Show your reasoning, then finish with one final line of "
                                 "the form:\nANSWER: {}",
                                 t.cot_hint, t.answer_shape);
  }
  return p;
}

// ---- transcripts -------------------------------------------------------------------

std::string transcript_key(TaskId task, std::uint64_t instance_seed, PromptMode mode, std::size_t trial) {
  return fmt::format("{}/{}/{}/{}", task_name(task), instance_seed, prompt_mode_name(mode), trial);
}

nlohmann::ordered_json Transcript::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(task));
  j["instance_seed"] = instance_seed;
  j["n"] = n;
  j["mode"] = std::string(prompt_mode_name(mode));
  j["trial"] = trial;
  j["system"] = system;
  j["user"] = user;
  j["completion"] = completion;
  j["metadata"] = metadata;
  j["parsed"] = parsed ? nlohmann::ordered_json(*parsed) : nlohmann::ordered_json(nullptr);
  j["parse_status"] = parse_status;
  return j;
}

Transcript Transcript::from_json(const nlohmann::ordered_json& j) {
  try {
    Transcript t;
    t.task = parse_task(j.at("task").get<std::string>());
    t.instance_seed = j.at("instance_seed").get<std::uint64_t>();
    t.n = j.at("n").get<std::size_t>();
    t.mode = parse_prompt_mode(j.at("mode").get<std::string>());
    t.trial = j.at("trial").get<std::size_t>();
    t.system = j.at("system").get<std::string>();
    t.user = j.at("user").get<std::string>();
    t.completion = j.at("completion").get<std::string>();
    t.metadata = j.value("metadata", nlohmann::ordered_json::object());
    if (j.contains("parsed") && !j["parsed"].is_null()) t.parsed = j["parsed"].get<std::vector<std::string>>();
    t.parse_status = j.value("parse_status", std::string("failed"));
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("bad transcript record: {}", e.what()));
  }
}

std::vector<Transcript> parse_transcripts(std::string_view jsonl) {
  std::vector<Transcript> out;
  std::size_t line_no = 0, start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(start, end - start);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      nlohmann::ordered_json j;
      try {
        j = nlohmann::ordered_json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(fmt::format("transcripts: line {}: {}", line_no, e.what()), line_no);
      }
      out.push_back(Transcript::from_json(j));
    }
    start = end + 1;
  }
  return out;
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read transcripts '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_transcripts(ss.str());
}

TranscriptSink::TranscriptSink(const std::filesystem::path& path) : path_(path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write transcripts '{}'", path.string()));
}

void TranscriptSink::write(const Transcript& t) {
  std::lock_guard lock(mutex_);
  if (path_) {
    std::ofstream out(*path_, std::ios::binary | std::ios::app);
    out << t.to_json().dump() << '\n';
    out.flush();
    if (!out) throw Error(fmt::format("failed writing transcripts '{}'", path_->string()));
  }
  written_.push_back(t);
}

std::vector<Transcript> TranscriptSink::written() const {
  std::lock_guard lock(mutex_);
  return written_;
}

ReplayChatClient::ReplayChatClient(std::vector<Transcript> transcripts) {
  for (auto& t : transcripts) {
    const std::string key = transcript_key(t.task, t.instance_seed, t.mode, t.trial);
    by_key_.insert_or_assign(key, std::move(t));
  }
}

ReplayChatClient ReplayChatClient::from_file(const std::filesystem::path& path) {
  return ReplayChatClient(read_transcripts(path));
}

ChatResponse ReplayChatClient::complete(const ChatRequest& request) {
  const auto it = by_key_.find(request.key);
  if (it == by_key_.end()) throw ValidationError(fmt::format("replay: no recorded completion for {}", request.key));
  return {it->second.completion, it->second.metadata};
}

// ---- HTTP client -------------------------------------------------------------------

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError(fmt::format("endpoint '{}' has no scheme", url));
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ValidationError(fmt::format("endpoint scheme '{}' unsupported", scheme));
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.origin = url.substr(0, path_start);
  p.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (p.origin.size() <= scheme_end + 3) throw ValidationError(fmt::format("endpoint '{}' has no host", url));
  return p;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool transient(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpChatClient::HttpChatClient(EndpointConfig config, Sleeper sleep, Clock clock)
    : HttpChatClient(config, [&] {
        const char* key = config.api_key_env.empty() ? nullptr : std::getenv(config.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
          throw AuthError(fmt::format("missing credential: environment variable {} is not set", config.api_key_env));
        }
        return std::string(key);
      }(), std::move(sleep), std::move(clock)) {}

HttpChatClient::HttpChatClient(EndpointConfig config, std::string api_key, Sleeper sleep, Clock clock)
    : config_(std::move(config)), api_key_(std::move(api_key)), sleep_(std::move(sleep)), clock_(std::move(clock)) {
  if (api_key_.empty()) throw AuthError("missing credential");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!clock_) clock_ = utc_now;
  parse_url(config_.url);
}

std::vector<std::string> HttpChatClient::attempt_log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  const ParsedUrl url = parse_url(config_.url);
  nlohmann::ordered_json body;
  body["model"] = request.model.empty() ? config_.model : request.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", request.system}}, {{"role", "user"}, {"content", request.user}}});
  const std::optional<double> temperature = request.temperature ? request.temperature : config_.temperature;
  if (temperature) body["temperature"] = *temperature;
  const std::string payload = body.dump();

  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

  auto log = [&](std::string line) {
    std::lock_guard lock(log_mutex_);
    log_.push_back(std::move(line));
  };
  std::string last_failure;
  std::chrono::milliseconds wait = config_.backoff;
  const std::size_t attempts = config_.max_retries + 1;
  for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
    const auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_failure = fmt::format("connection error: {}", httplib::to_string(res.error()));
      log(fmt::format("attempt {}: error {}", attempt, last_failure));
    } else {
      log(fmt::format("attempt {}: status {}", attempt, res->status));
      if (res->status == 401 || res->status == 403) {
        throw AuthError(fmt::format("endpoint rejected the credential (HTTP {})", res->status));
      }
      if (res->status >= 200 && res->status < 300) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
          throw MalformedResponseError("endpoint response is not JSON");
        }
        const auto* content = [&]() -> const nlohmann::json* {
          if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) return nullptr;
          const auto& c = j["choices"][0];
          if (!c.is_object() || !c.contains("message") || !c["message"].contains("content")) return nullptr;
          return c["message"]["content"].is_string() ? &c["message"]["content"] : nullptr;
        }();
        if (content == nullptr) throw MalformedResponseError("endpoint response has no choices[0].message.content");
        ChatResponse out;
        out.text = content->get<std::string>();
        out.metadata["model"] = j.contains("model") && j["model"].is_string() ? j["model"].get<std::string>()
                                                                              : body["model"].get<std::string>();
        out.metadata["temperature"] = temperature ? nlohmann::ordered_json(*temperature) : nlohmann::ordered_json("default");
        out.metadata["timestamp"] = clock_();
        out.metadata["endpoint"] = config_.url;
        out.metadata["attempts"] = attempt;
        return out;
      }
      if (!transient(res->status)) {
        throw NetworkError(fmt::format("endpoint returned HTTP {}: {}", res->status, res->body.substr(0, 200)));
      }
      last_failure = fmt::format("HTTP {}", res->status);
    }
    if (attempt < attempts) {
      sleep_(wait);
      wait *= 2;
    }
  }
  throw TimeoutError(fmt::format("gave up after {} attempts; last failure: {}", attempts, last_failure));
}

// ---- running ---------------------------------------------------------------------------

Transcript query_endpoint(const PromptSpec& prompt, std::size_t trial, ChatClient& client, TranscriptSink& sink,
                          const std::string& model, std::optional<double> temperature) {
  ChatRequest req;
  req.model = model;
  req.system = prompt.system;
  req.user = prompt.user();
  req.temperature = temperature;
  req.key = transcript_key(prompt.task, prompt.instance.seed, prompt.mode, trial);
  ChatResponse resp = client.complete(req);

  Transcript t;
  t.task = prompt.task;
  t.instance_seed = prompt.instance.seed;
  t.n = prompt.instance.n;
  t.mode = prompt.mode;
  t.trial = trial;
  t.system = req.system;
  t.user = req.user;
  t.completion = std::move(resp.text);
  t.metadata = std::move(resp.metadata);
  const ParsedAnswer a = extract_answer(t.completion, t.task);
  if (a.status != ParseStatus::kFailed) t.parsed = a.tokens;
  t.parse_status = std::string(parse_status_name(a.status));
  sink.write(t);
  return t;
}

std::vector<Transcript> run_llm_eval(std::span<const TaskInstance> instances, PromptMode mode, ChatClient& client,
                                     TranscriptSink& sink, std::size_t trials, std::size_t concurrency,
                                     const std::string& model, std::optional<double> temperature) {
  if (trials == 0) throw ValidationError("llm-eval: trials must be positive");
  const std::size_t jobs = instances.size() * trials;
  std::vector<PromptSpec> prompts;
  for (const auto& x : instances) prompts.push_back(build_prompt(x, mode));
  std::vector<Transcript> out(jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs || stop) return;
      try {
        out[i] = query_endpoint(prompts[i / trials], i % trials + 1, client, sink, model, temperature);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
        return;
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(concurrency, jobs));
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---- answers ------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s, std::string_view chars = " \t\r\n") {
  const auto b = s.find_first_not_of(chars);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(chars);
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Digits only, leading zeros removed ("007" -> "7", "000" -> "0").
std::optional<std::string> canonical_natural(std::string s) {
  std::erase_if(s, [](char c) { return c == ',' || c == '_' || c == ' '; });
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
  const auto nz = s.find_first_not_of('0');
  return nz == std::string::npos ? "0" : s.substr(nz);
}

std::vector<std::string> list_items(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const std::string t = trim(cur, " \t\r\n'\"`*");
    if (!t.empty()) out.push_back(lower(t));
    cur.clear();
  };
  for (char c : s) {
    if (c == ',' || c == ';' || c == ' ' || c == '\t') flush();
    else if (c == '[' || c == ']' || c == '(' || c == ')' || c == '{' || c == '}') flush();
    else cur += c;
  }
  flush();
  return out;
}

std::optional<std::vector<std::string>> normalize(const std::string& raw, TaskId task) {
  const std::string s = trim(raw, " \t\r\n.*`\"'");
  if (s.empty()) return std::nullopt;
  switch (task) {
    case TaskId::kParityCheck: {
      const std::string v = lower(s);
      if (v == "true" || v == "yes") return std::vector<std::string>{"True"};
      if (v == "false" || v == "no") return std::vector<std::string>{"False"};
      return std::nullopt;
    }
    case TaskId::kCycleNavigation: {
      const auto v = canonical_natural(s);
      if (!v || v->size() != 1 || (*v)[0] < '1' || (*v)[0] > '5') return std::nullopt;
      return std::vector<std::string>{*v};
    }
    case TaskId::kModArithSimple:
    case TaskId::kModArithComplex: {
      const auto v = canonical_natural(s);
      if (!v) return std::nullopt;
      return std::vector<std::string>{*v};
    }
    case TaskId::kAddition:
    case TaskId::kMultiplication: {
      const auto v = canonical_natural(s);
      if (!v) return std::nullopt;
      std::vector<std::string> digits;
      for (char c : *v) digits.emplace_back(1, c);
      return digits;
    }
    case TaskId::kSorting: {
      std::vector<std::string> out;
      for (const auto& item : list_items(s)) {
        const auto v = canonical_natural(item);
        if (!v) return std::nullopt;
        out.push_back(*v);
      }
      if (out.empty()) return std::nullopt;
      return out;
    }
    case TaskId::kStackManipulation:
    case TaskId::kReverseList:
    case TaskId::kOddsFirst: {
      auto out = list_items(s);
      if (out.empty()) return std::nullopt;
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace

ParsedAnswer extract_answer(std::string_view completion, TaskId task) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= completion.size()) {
    std::size_t end = completion.find('\n', start);
    if (end == std::string_view::npos) end = completion.size();
    lines.push_back(trim(completion.substr(start, end - start)));
    start = end + 1;
  }
  std::optional<std::string> payload;
  ParseStatus status = ParseStatus::kOk;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const std::string line = trim(*it, " \t*#`");
    if (lower(line.substr(0, 7)) == "answer:") {
      payload = line.substr(7);
      break;
    }
  }
  if (!payload) {
    status = ParseStatus::kLenient;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      if (!it->empty()) {
        payload = *it;
        break;
      }
    }
  }
  ParsedAnswer out;
  if (!payload) return out;
  auto tokens = normalize(*payload, task);
  if (!tokens) return out;
  out.status = status;
  out.tokens = std::move(*tokens);
  return out;
}

// ---- scoring -------------------------------------------------------------------------

nlohmann::ordered_json ScoreReport::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = "llm-score";
  j["task"] = std::string(task_name(task));
  j["mode"] = mode ? nlohmann::ordered_json(std::string(prompt_mode_name(*mode))) : nlohmann::ordered_json(nullptr);
  j["trials"] = trials;
  j["instances"] = instances.size();
  j["correct"] = std::count_if(instances.begin(), instances.end(), [](const InstanceOutcome& o) { return o.correct; });
  j["accuracy"] = accuracy;
  j["lenient_parses"] = lenient_parses;
  nlohmann::ordered_json outcomes = nlohmann::ordered_json::array();
  for (const auto& o : instances) {
    nlohmann::ordered_json r;
    r["seed"] = o.seed;
    nlohmann::ordered_json flags = nlohmann::ordered_json::array();
    for (char c : o.trials) flags.push_back(c != 0);
    r["trials"] = flags;
    r["correct"] = o.correct;
    outcomes.push_back(r);
  }
  j["outcomes"] = outcomes;
  return j;
}

ScoreReport score(TaskId task, std::span<const Transcript> transcripts, std::span<const TaskInstance> instances,
                  std::size_t trials) {
  if (instances.empty()) throw ValidationError("score: no instances");
  if (trials == 0) throw ValidationError("score: trials must be positive");
  ScoreReport r;
  r.task = task;
  r.trials = trials;
  std::map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].task != task) throw ValidationError("score: instance of another task");
    if (!index.emplace(instances[i].seed, i).second) {
      throw ValidationError(fmt::format("score: duplicate instance seed {}", instances[i].seed));
    }
    r.instances.push_back({instances[i].seed, std::vector<char>(trials, 0), false});
  }
  std::vector<std::vector<char>> seen(instances.size(), std::vector<char>(trials, 0));
  bool first = true;
  for (const auto& t : transcripts) {
    if (t.task != task) {
      throw ValidationError(fmt::format("score: transcript for {} in a {} run", task_name(t.task), task_name(task)));
    }
    const auto it = index.find(t.instance_seed);
    if (it == index.end()) throw ValidationError(fmt::format("score: transcript for unknown instance seed {}", t.instance_seed));
    if (t.trial < 1 || t.trial > trials) {
      throw ValidationError(fmt::format("score: trial {} outside 1..{} (instance seed {})", t.trial, trials, t.instance_seed));
    }
    const std::size_t i = it->second;
    if (seen[i][t.trial - 1]) {
      throw ValidationError(fmt::format("score: duplicate trial {} for instance seed {}", t.trial, t.instance_seed));
    }
    seen[i][t.trial - 1] = 1;
    if (first) r.mode = t.mode;
    else if (r.mode && *r.mode != t.mode) r.mode.reset();
    first = false;
    const ParsedAnswer a = extract_answer(t.completion, task);
    if (a.status == ParseStatus::kLenient) ++r.lenient_parses;
    const bool ok = a.status != ParseStatus::kFailed && a.tokens == instances[i].target_tokens;
    r.instances[i].trials[t.trial - 1] = ok;
  }
  std::size_t correct = 0;
  for (auto& o : r.instances) {
    o.correct = std::any_of(o.trials.begin(), o.trials.end(), [](char c) { return c != 0; });
    correct += o.correct;
  }
  r.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(instances.size());
  return r;
}

std::vector<TaskInstance> llm_instances(TaskId task, std::size_t count, std::uint64_t seed) {
  std::vector<TaskInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate(task, seed + i));
  return out;
}

}  // namespace rlab
