// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "rlab/llm_eval.hpp"

namespace rlab {
namespace {

const std::filesystem::path kFixtures = std::filesystem::path(RLAB_FIXTURE_DIR) / "llm";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rlab_llm_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Transcript make(const TaskInstance& x, std::size_t trial, std::string completion, PromptMode mode = PromptMode::kDirect) {
  Transcript t;
  t.task = x.task;
  t.instance_seed = x.seed;
  t.n = x.n;
  t.mode = mode;
  t.trial = trial;
  t.completion = std::move(completion);
  return t;
}

std::string answer_line(const std::vector<std::string>& tokens) {
  std::string s = "ANSWER: ";
  for (std::size_t i = 0; i < tokens.size(); ++i) s += (i ? ", " : "") + tokens[i];
  return s;
}

// ---- prompts ---------------------------------------------------------------------

TEST(Prompt, DirectModeCarriesTheClauseForEveryTask) {
  for (TaskId task : kAllTasks) {
    const PromptSpec p = build_prompt(generate(task, 3), PromptMode::kDirect);
    EXPECT_NE(p.user().find("Give a direct answer without steps"), std::string::npos) << task_name(task);
    EXPECT_NE(p.user().find("\nANSWER: "), std::string::npos);
    EXPECT_EQ(p.user().find("step by step"), std::string::npos);
  }
}

TEST(Prompt, ParityDirectListsTheWords) {
  const TaskInstance x = generate(TaskId::kParityCheck, 12);
  const std::string user = build_prompt(x, PromptMode::kDirect).user();
  std::string words;
  for (std::size_t i = 0; i < x.input_tokens.size(); ++i) words += (i ? ", " : "") + x.input_tokens[i];
  EXPECT_NE(user.find(words), std::string::npos);
}

TEST(Prompt, ReverseListCotAsksForStepwiseConstruction) {
  const PromptSpec p = build_prompt(generate(TaskId::kReverseList, 4), PromptMode::kCot);
  EXPECT_NE(p.instructions.find("step by step"), std::string::npos);
  EXPECT_NE(p.instructions.find("reversed list"), std::string::npos);
  EXPECT_EQ(p.user().find("Give a direct answer without steps"), std::string::npos);
}

TEST(Prompt, ModesShareThePayload) {
  for (TaskId task : kAllTasks) {
    const TaskInstance x = generate(task, 21);
    const PromptSpec d = build_prompt(x, PromptMode::kDirect);
    const PromptSpec c = build_prompt(x, PromptMode::kCot);
    EXPECT_EQ(d.payload, c.payload);
    EXPECT_EQ(d.system, c.system);
    EXPECT_NE(d.instructions, c.instructions);
    EXPECT_EQ(d.user(), d.payload + "\n\n" + d.instructions);
    EXPECT_EQ(build_prompt(x, PromptMode::kDirect).user(), d.user());  // deterministic
  }
}

TEST(Prompt, ModeNames) {
  EXPECT_EQ(parse_prompt_mode("cot"), PromptMode::kCot);
  EXPECT_EQ(parse_prompt_mode("direct"), PromptMode::kDirect);
  EXPECT_THROW(parse_prompt_mode("tot"), ValidationError);
}

// ---- answers -------------------------------------------------------------------

TEST(Extract, DelimitedAnswers) {
  auto ok = [](std::string_view text, TaskId task, std::vector<std::string> want) {
    const ParsedAnswer a = extract_answer(text, task);
    EXPECT_EQ(a.status, ParseStatus::kOk) << text;
    EXPECT_EQ(a.tokens, want) << text;
  };
  ok("Counting...\nANSWER: True", TaskId::kParityCheck, {"True"});
  ok("ANSWER: [peach, banana]", TaskId::kReverseList, {"peach", "banana"});
  ok("ANSWER: 007", TaskId::kAddition, {"7"});
  ok("ANSWER: 1204", TaskId::kMultiplication, {"1", "2", "0", "4"});
  ok("answer: no", TaskId::kParityCheck, {"False"});
  ok("**ANSWER:** 3", TaskId::kCycleNavigation, {"3"});
  ok("ANSWER: 04", TaskId::kModArithSimple, {"4"});
  ok("ANSWER: (1, 02, 10)", TaskId::kSorting, {"1", "2", "10"});
  ok("ANSWER: Apple, Grape.", TaskId::kOddsFirst, {"apple", "grape"});
  ok("ANSWER: 1\nthinking again\nANSWER: 2", TaskId::kCycleNavigation, {"2"});
}

TEST(Extract, LenientFallbackAndFailures) {
  const ParsedAnswer lenient = extract_answer("The count is even.\nTrue\n\n", TaskId::kParityCheck);
  EXPECT_EQ(lenient.status, ParseStatus::kLenient);
  EXPECT_EQ(lenient.tokens, std::vector<std::string>{"True"});
  EXPECT_EQ(extract_answer("ANSWER: maybe", TaskId::kParityCheck).status, ParseStatus::kFailed);
  EXPECT_EQ(extract_answer("ANSWER: 6", TaskId::kCycleNavigation).status, ParseStatus::kFailed);
  EXPECT_EQ(extract_answer("ANSWER: twelve", TaskId::kAddition).status, ParseStatus::kFailed);
  EXPECT_EQ(extract_answer("ANSWER: 1, x", TaskId::kSorting).status, ParseStatus::kFailed);
  EXPECT_EQ(extract_answer("", TaskId::kReverseList).status, ParseStatus::kFailed);
  EXPECT_EQ(extract_answer("ANSWER:", TaskId::kReverseList).status, ParseStatus::kFailed);
}

TEST(Extract, OracleTargetsRoundTripThroughAnswerLines) {
  for (TaskId task : kAllTasks) {
    for (std::uint64_t s = 0; s < 50; ++s) {
      const TaskInstance x = generate(task, s);
      std::string line = answer_line(x.target_tokens);
      if (task == TaskId::kAddition || task == TaskId::kMultiplication) {
        line = "ANSWER: ";
        for (const auto& d : x.target_tokens) line += d;
      }
      EXPECT_EQ(extract_answer(line, task).tokens, x.target_tokens) << task_name(task) << " " << line;
    }
  }
}

// ---- scoring -----------------------------------------------------------------------

TEST(Score, AllCorrectAndBestOfThree) {
  const auto xs = llm_instances(TaskId::kParityCheck, 4, 70);
  std::vector<Transcript> ts;
  for (const auto& x : xs) {
    for (std::size_t k = 1; k <= 3; ++k) ts.push_back(make(x, k, answer_line(x.target_tokens)));
  }
  EXPECT_EQ(score(TaskId::kParityCheck, ts, xs).accuracy, 100.0);

  const TaskInstance& x = xs[0];
  const std::string wrong = x.target_tokens[0] == "True" ? "ANSWER: False" : "ANSWER: True";
  const std::vector<Transcript> fft = {make(x, 1, wrong), make(x, 2, wrong), make(x, 3, answer_line(x.target_tokens))};
  const ScoreReport r = score(TaskId::kParityCheck, fft, std::span(xs).first(1));
  EXPECT_TRUE(r.instances[0].correct);
  EXPECT_EQ(r.instances[0].trials, (std::vector<char>{0, 0, 1}));
  EXPECT_EQ(r.accuracy, 100.0);
}

TEST(Score, SyntheticGridOf23In50) {
  const auto xs = llm_instances(TaskId::kCycleNavigation, 50, 300);
  std::vector<Transcript> ts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::string right = xs[i].target_tokens[0];
    const std::string wrong = right == "1" ? "2" : "1";
    for (std::size_t k = 1; k <= 3; ++k) {
      const bool hit = i < 23 && k == 2;
      ts.push_back(make(xs[i], k, "ANSWER: " + (hit ? right : wrong)));
    }
  }
  const ScoreReport r = score(TaskId::kCycleNavigation, ts, xs);
  EXPECT_EQ(r.accuracy, 46.0);
  EXPECT_EQ(r.to_json()["correct"], 23);
}

TEST(Score, MissingTrialsCountIncorrect) {
  const auto xs = llm_instances(TaskId::kParityCheck, 2, 5);
  const std::vector<Transcript> ts = {make(xs[0], 2, answer_line(xs[0].target_tokens))};
  const ScoreReport r = score(TaskId::kParityCheck, ts, xs);
  EXPECT_EQ(r.accuracy, 50.0);
  EXPECT_EQ(r.instances[1].trials, (std::vector<char>{0, 0, 0}));
}

TEST(Score, MismatchesAreErrors) {
  const auto xs = llm_instances(TaskId::kParityCheck, 2, 5);
  const std::string a = answer_line(xs[0].target_tokens);
  auto bad = [&](std::vector<Transcript> ts) {
    EXPECT_THROW(score(TaskId::kParityCheck, ts, xs), ValidationError);
  };
  Transcript unknown = make(xs[0], 1, a);
  unknown.instance_seed = 999;
  bad({unknown});
  bad({make(xs[0], 0, a)});
  bad({make(xs[0], 4, a)});
  bad({make(xs[0], 1, a), make(xs[0], 1, a)});
  Transcript other = make(xs[0], 1, a);
  other.task = TaskId::kCycleNavigation;
  bad({other});
  const auto cyc = llm_instances(TaskId::kCycleNavigation, 1, 0);
  EXPECT_THROW(score(TaskId::kParityCheck, std::vector<Transcript>{}, cyc), ValidationError);
}

TEST(Score, Monotone) {
  const auto xs = llm_instances(TaskId::kReverseList, 10, 2000);
  auto ts = read_transcripts(kFixtures / "reverse-list-cot.jsonl");
  std::mt19937_64 rng(5);
  double acc = score(TaskId::kReverseList, ts, xs).accuracy;
  for (int round = 0; round < 60; ++round) {
    Transcript& t = ts[rng() % ts.size()];
    const auto& x = *std::find_if(xs.begin(), xs.end(), [&](const TaskInstance& y) { return y.seed == t.instance_seed; });
    const bool make_right = rng() % 2 == 0;
    t.completion = make_right ? answer_line(x.target_tokens) : "ANSWER: [nothing]";
    const double next = score(TaskId::kReverseList, ts, xs).accuracy;
    if (make_right) EXPECT_GE(next, acc);
    else EXPECT_LE(next, acc);
    acc = next;
  }
}

// ---- fixtures and replay -----------------------------------------------------------

TEST(Replay, FixtureScoresMatchHandCounts) {
  const auto parity = llm_instances(TaskId::kParityCheck, 50, 1000);
  const auto pt = read_transcripts(kFixtures / "parity-direct.jsonl");
  ASSERT_EQ(pt.size(), 150u);
  const ScoreReport pr = score(TaskId::kParityCheck, pt, parity);
  EXPECT_EQ(pr.accuracy, 46.0);
  EXPECT_EQ(pr.mode, PromptMode::kDirect);
  // Completions without a delimiter are the (i + trial) % 4 == 3 slots.
  std::size_t lenient = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t k = 1; k <= 3; ++k) lenient += (i + k) % 4 == 3;
  }
  EXPECT_EQ(pr.lenient_parses, lenient);
  for (const auto& t : pt) EXPECT_NE(t.user.find("Give a direct answer without steps"), std::string::npos);

  const auto rev = llm_instances(TaskId::kReverseList, 10, 2000);
  const ScoreReport rr = score(TaskId::kReverseList, read_transcripts(kFixtures / "reverse-list-cot.jsonl"), rev);
  EXPECT_EQ(rr.accuracy, 70.0);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(rr.instances[i].trials, (std::vector<char>{0, 0, 1}));
}

TEST(Replay, PipelineReproducesFixtureBytes) {
  struct Case {
    const char* file;
    TaskId task;
    std::size_t count;
    std::uint64_t seed;
    PromptMode mode;
  };
  for (const Case& c : {Case{"parity-direct.jsonl", TaskId::kParityCheck, 50, 1000, PromptMode::kDirect},
                        Case{"reverse-list-cot.jsonl", TaskId::kReverseList, 10, 2000, PromptMode::kCot}}) {
    const std::string fixture = slurp(kFixtures / c.file);
    ReplayChatClient replay = ReplayChatClient::from_file(kFixtures / c.file);
    const auto xs = llm_instances(c.task, c.count, c.seed);

    const auto out = temp_file(c.file);
    {
      TranscriptSink sink(out);
      run_llm_eval(xs, c.mode, replay, sink, 3, 1);
    }
    EXPECT_EQ(slurp(out), fixture) << c.file;

    TranscriptSink mem;
    const auto ts = run_llm_eval(xs, c.mode, replay, mem, 3, 4);
    const auto want = lines_of(fixture);
    ASSERT_EQ(ts.size(), want.size());
    for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(ts[i].to_json().dump(), want[i]);
  }
}

TEST(Replay, RescoringPersistedTranscriptsIsBitStable) {
  const auto xs = llm_instances(TaskId::kParityCheck, 50, 1000);
  const auto ts = read_transcripts(kFixtures / "parity-direct.jsonl");
  const std::string first = score(TaskId::kParityCheck, ts, xs).to_json().dump();
  const auto path = temp_file("rescore.jsonl");
  {
    TranscriptSink sink(path);
    for (const auto& t : ts) sink.write(t);
  }
  const auto again = read_transcripts(path);
  EXPECT_EQ(again, ts);
  EXPECT_EQ(score(TaskId::kParityCheck, again, xs).to_json().dump(), first);
  EXPECT_EQ(score(TaskId::kParityCheck, ts, xs).to_json().dump(), first);
}

TEST(Replay, MissingRecordingIsAnError) {
  ReplayChatClient replay(std::vector<Transcript>{});
  ChatRequest req;
  req.key = transcript_key(TaskId::kParityCheck, 1, PromptMode::kDirect, 1);
  EXPECT_THROW(replay.complete(req), ValidationError);
  EXPECT_THROW(parse_transcripts("{\"task\":\"parity\"\n"), ParseError);
  EXPECT_THROW(parse_transcripts("{\"task\":\"parity\"}\n"), ValidationError);
}

TEST(Run, ConcurrencyStaysWithinTheLimit) {
  class Slow : public ChatClient {
   public:
    std::atomic<int> in_flight{0}, peak{0}, calls{0};
    ChatResponse complete(const ChatRequest&) override {
      const int now = ++in_flight;
      int p = peak.load();
      while (now > p && !peak.compare_exchange_weak(p, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      ++calls;
      --in_flight;
      return {"ANSWER: True", {}};
    }
  };
  const auto xs = llm_instances(TaskId::kParityCheck, 20, 0);
  Slow client;
  TranscriptSink sink;
  const auto ts = run_llm_eval(xs, PromptMode::kDirect, client, sink, 3, 4);
  EXPECT_EQ(client.calls, 60);
  EXPECT_LE(client.peak, 4);
  EXPECT_GE(client.peak, 2);
  EXPECT_EQ(sink.written().size(), 60u);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_EQ(ts[i].instance_seed, xs[i / 3].seed);
    EXPECT_EQ(ts[i].trial, i % 3 + 1);
  }
}

// ---- HTTP -----------------------------------------------------------------------------

// A local chat-completions endpoint whose responses are scripted per request.
class FakeEndpoint {
 public:
  using Script = std::function<void(int call, const httplib::Request&, httplib::Response&)>;

  explicit FakeEndpoint(Script script) : script_(std::move(script)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int call = ++calls_;
      {
        std::lock_guard lock(mutex_);
        last_body_ = req.body;
        last_auth_ = req.get_header_value("Authorization");
      }
      script_(call, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig config(std::size_t retries = 4) const {
    EndpointConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.model = "test-model";
    c.timeout = std::chrono::milliseconds(5000);
    c.max_retries = retries;
    c.backoff = std::chrono::milliseconds(100);
    return c;
  }
  int calls() const { return calls_; }
  std::string last_body() const {
    std::lock_guard lock(mutex_);
    return last_body_;
  }
  std::string last_auth() const {
    std::lock_guard lock(mutex_);
    return last_auth_;
  }

 private:
  Script script_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  mutable std::mutex mutex_;
  std::string last_body_, last_auth_;
};

void reply(httplib::Response& res, const std::string& text) {
  nlohmann::json j;
  j["model"] = "served-model";
  j["choices"] = nlohmann::json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}});
  res.set_content(j.dump(), "application/json");
}

struct Recorder {
  std::vector<long> waits;
  HttpChatClient::Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { waits.push_back(static_cast<long>(d.count())); };
  }
};

HttpChatClient::Clock fixed_clock() {
  return [] { return std::string("2026-01-01T00:00:00Z"); };
}

ChatRequest request() {
  ChatRequest r;
  r.system = "sys";
  r.user = "Is it True?";
  return r;
}

TEST(Http, RetriesRateLimitsThenSucceeds) {
  FakeEndpoint ep([](int call, const httplib::Request&, httplib::Response& res) {
    if (call <= 2) {
      res.status = 429;
      return;
    }
    reply(res, "ANSWER: True");
  });
  Recorder rec;
  HttpChatClient client(ep.config(), std::string("k-123"), rec.sleeper(), fixed_clock());
  const ChatResponse r = client.complete(request());
  EXPECT_EQ(r.text, "ANSWER: True");
  EXPECT_EQ(ep.calls(), 3);
  EXPECT_EQ(client.attempt_log(),
            (std::vector<std::string>{"attempt 1: status 429", "attempt 2: status 429", "attempt 3: status 200"}));
  EXPECT_EQ(rec.waits, (std::vector<long>{100, 200}));
  EXPECT_EQ(r.metadata["attempts"], 3);
  EXPECT_EQ(r.metadata["model"], "served-model");
  EXPECT_EQ(r.metadata["temperature"], "default");
  EXPECT_EQ(r.metadata["timestamp"], "2026-01-01T00:00:00Z");
  EXPECT_EQ(ep.last_auth(), "Bearer k-123");
  const auto body = nlohmann::json::parse(ep.last_body());
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "Is it True?");
  EXPECT_FALSE(body.contains("temperature"));
}

TEST(Http, TemperatureIsSentAndRecorded) {
  FakeEndpoint ep([](int, const httplib::Request&, httplib::Response& res) { reply(res, "ok"); });
  EndpointConfig cfg = ep.config();
  cfg.temperature = 0.25;
  HttpChatClient client(cfg, std::string("k"), Recorder{}.sleeper(), fixed_clock());
  const ChatResponse r = client.complete(request());
  EXPECT_EQ(nlohmann::json::parse(ep.last_body())["temperature"], 0.25);
  EXPECT_EQ(r.metadata["temperature"], 0.25);
}

TEST(Http, AuthFailureIsNotRetried) {
  FakeEndpoint ep([](int, const httplib::Request&, httplib::Response& res) { res.status = 401; });
  Recorder rec;
  HttpChatClient client(ep.config(), std::string("bad"), rec.sleeper(), fixed_clock());
  try {
    client.complete(request());
    FAIL();
  } catch (const AuthError& e) {
    EXPECT_STREQ(e.kind(), "auth");
  }
  EXPECT_EQ(ep.calls(), 1);
  EXPECT_TRUE(rec.waits.empty());
}

TEST(Http, MalformedBodies) {
  FakeEndpoint ep([](int call, const httplib::Request&, httplib::Response& res) {
    if (call == 1) res.set_content("<html>oops</html>", "text/html");
    else res.set_content(R"({"choices":[]})", "application/json");
  });
  HttpChatClient client(ep.config(), std::string("k"), Recorder{}.sleeper(), fixed_clock());
  EXPECT_THROW(client.complete(request()), MalformedResponseError);
  EXPECT_THROW(client.complete(request()), MalformedResponseError);
  EXPECT_EQ(ep.calls(), 2);
}

TEST(Http, PersistentServerErrorsTimeOut) {
  FakeEndpoint ep([](int, const httplib::Request&, httplib::Response& res) { res.status = 503; });
  Recorder rec;
  HttpChatClient client(ep.config(2), std::string("k"), rec.sleeper(), fixed_clock());
  try {
    client.complete(request());
    FAIL();
  } catch (const TimeoutError& e) {
    EXPECT_STREQ(e.kind(), "timeout");
  }
  EXPECT_EQ(ep.calls(), 3);
  EXPECT_EQ(rec.waits, (std::vector<long>{100, 200}));
}

TEST(Http, OtherClientErrorsFailFast) {
  FakeEndpoint ep([](int, const httplib::Request&, httplib::Response& res) { res.status = 400; });
  HttpChatClient client(ep.config(), std::string("k"), Recorder{}.sleeper(), fixed_clock());
  try {
    client.complete(request());
    FAIL();
  } catch (const MalformedResponseError&) {
    FAIL();
  } catch (const TimeoutError&) {
    FAIL();
  } catch (const NetworkError& e) {
    EXPECT_NE(std::string(e.what()).find("400"), std::string::npos);
  }
  EXPECT_EQ(ep.calls(), 1);
}

TEST(Http, MissingCredentialFailsBeforeAnyRequest) {
  FakeEndpoint ep([](int, const httplib::Request&, httplib::Response& res) { reply(res, "x"); });
  EndpointConfig cfg = ep.config();
  cfg.api_key_env = "RLAB_TEST_KEY_THAT_IS_NOT_SET";
  ::unsetenv(cfg.api_key_env.c_str());
  EXPECT_THROW(HttpChatClient{cfg}, AuthError);
  EXPECT_EQ(ep.calls(), 0);
  ::setenv(cfg.api_key_env.c_str(), "from-env", 1);
  HttpChatClient client(cfg, Recorder{}.sleeper(), fixed_clock());
  client.complete(request());
  EXPECT_EQ(ep.last_auth(), "Bearer from-env");
  ::unsetenv(cfg.api_key_env.c_str());
}

TEST(Http, EndToEndThroughTheSink) {
  const auto xs = llm_instances(TaskId::kParityCheck, 3, 40);
  FakeEndpoint ep([&](int, const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::string user = body["messages"][1]["content"];
    for (const auto& x : xs) {
      if (user == build_prompt(x, PromptMode::kDirect).user()) return reply(res, "ANSWER: " + x.target_tokens[0]);
    }
    res.status = 500;
  });
  HttpChatClient client(ep.config(0), std::string("k"), Recorder{}.sleeper(), fixed_clock());
  const auto path = temp_file("http.jsonl");
  TranscriptSink sink(path);
  const auto ts = run_llm_eval(xs, PromptMode::kDirect, client, sink, 3, 2);
  EXPECT_EQ(ep.calls(), 9);
  EXPECT_EQ(score(TaskId::kParityCheck, ts, xs).accuracy, 100.0);
  EXPECT_EQ(read_transcripts(path).size(), 9u);
  for (const auto& t : ts) EXPECT_EQ(t.parse_status, "ok");
}

}  // namespace
}  // namespace rlab
