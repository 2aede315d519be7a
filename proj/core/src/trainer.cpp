// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "rlab/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <mutex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "rlab/rng.hpp"

namespace rlab {

// ---- config --------------------------------------------------------------------

void TrainConfig::validate() const {
  auto fail = [](const std::string& why) { throw ValidationError("train config: " + why); };
  if (!(optimizer.learning_rate >= 0.0) || !std::isfinite(optimizer.learning_rate)) fail("learning-rate must be >= 0");
  if (optimizer.beta1 < 0 || optimizer.beta1 >= 1 || optimizer.beta2 < 0 || optimizer.beta2 >= 1) {
    fail("beta1 and beta2 must be in [0, 1)");
  }
  if (!(optimizer.epsilon > 0)) fail("epsilon must be positive");
  if (optimizer.grad_clip < 0) fail("grad-clip must be >= 0");
  if (batch_size == 0) fail("batch-size must be positive");
  if (eval_every == 0) fail("eval-every must be positive");
  if (eval_instances == 0) fail("eval-instances must be positive");
  if (n_seeds == 0) fail("n-seeds must be at least 1");
  if (train_lengths.min == 0 || train_lengths.min > train_lengths.max) fail("train-lengths is empty");
  if (test_lengths.min == 0 || test_lengths.min > test_lengths.max) fail("test-lengths is empty");
  ModelConfig m = model;
  m.vocab_size = Vocab::for_task(task).size();
  m.validate();
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(task));
  j["seed"] = seed;
  j["optimizer"] = optimizer.kind == OptimizerKind::kAdam ? "adam" : "sgd";
  j["learning-rate"] = optimizer.learning_rate;
  j["beta1"] = optimizer.beta1;
  j["beta2"] = optimizer.beta2;
  j["epsilon"] = optimizer.epsilon;
  j["grad-clip"] = optimizer.grad_clip;
  j["batch-size"] = batch_size;
  j["max-steps"] = max_steps;
  j["train-lengths"] = to_string(train_lengths);
  j["test-lengths"] = to_string(test_lengths);
  j["n-seeds"] = n_seeds;
  j["eval-every"] = eval_every;
  j["eval-instances"] = eval_instances;
  j["patience"] = patience;
  j["threads"] = threads;
  j["model"] = model.to_json();
  return j;
}

namespace {

// YAML scalars carry no type; pick the narrowest JSON type that reads back.
nlohmann::json yaml_scalar(const YAML::Node& node) {
  const std::string s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  std::uint64_t u = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), u);
  if (ec == std::errc() && p == s.data() + s.size()) return u;
  double d = 0;
  auto [p2, ec2] = std::from_chars(s.data(), s.data() + s.size(), d);
  // from_chars accepts "inf" and "nan"; keep those as words.
  if (ec2 == std::errc() && p2 == s.data() + s.size() && std::isfinite(d)) return d;
  return s;
}

nlohmann::json yaml_map(const YAML::Node& node, const std::string& where) {
  if (!node.IsMap()) throw ValidationError(fmt::format("train config: '{}' must be a mapping", where));
  nlohmann::json j = nlohmann::json::object();
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!kv.second.IsScalar()) throw ValidationError(fmt::format("train config: '{}.{}' must be a scalar", where, key));
    j[key] = yaml_scalar(kv.second);
  }
  return j;
}

template <class T>
T scalar_as(const YAML::Node& v, const std::string& key) {
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError(fmt::format("train config: bad value '{}' for '{}'", v.Scalar(), key));
  }
}

}  // namespace

TrainConfig parse_train_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(fmt::format("train config: {}", e.msg), static_cast<std::size_t>(std::max(0, e.mark.line + 1)));
  }
  if (!root.IsMap()) throw ValidationError("train config: top level must be a mapping");
  TrainConfig c;
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "task") c.task = parse_task(scalar_as<std::string>(v, key));
    else if (key == "seed") c.seed = scalar_as<std::uint64_t>(v, key);
    else if (key == "optimizer") {
      const auto s = scalar_as<std::string>(v, key);
      if (s == "adam") c.optimizer.kind = OptimizerKind::kAdam;
      else if (s == "sgd") c.optimizer.kind = OptimizerKind::kSgd;
      else throw ValidationError(fmt::format("train config: unknown optimizer '{}'", s));
    }
    else if (key == "learning-rate") c.optimizer.learning_rate = scalar_as<double>(v, key);
    else if (key == "beta1") c.optimizer.beta1 = scalar_as<double>(v, key);
    else if (key == "beta2") c.optimizer.beta2 = scalar_as<double>(v, key);
    else if (key == "epsilon") c.optimizer.epsilon = scalar_as<double>(v, key);
    else if (key == "grad-clip") c.optimizer.grad_clip = scalar_as<double>(v, key);
    else if (key == "batch-size") c.batch_size = scalar_as<std::size_t>(v, key);
    else if (key == "max-steps") c.max_steps = scalar_as<std::size_t>(v, key);
    else if (key == "train-lengths") c.train_lengths = parse_length_range(scalar_as<std::string>(v, key));
    else if (key == "test-lengths") c.test_lengths = parse_length_range(scalar_as<std::string>(v, key));
    else if (key == "n-seeds") c.n_seeds = scalar_as<std::size_t>(v, key);
    else if (key == "eval-every") c.eval_every = scalar_as<std::size_t>(v, key);
    else if (key == "eval-instances") c.eval_instances = scalar_as<std::size_t>(v, key);
    else if (key == "patience") c.patience = scalar_as<std::size_t>(v, key);
    else if (key == "threads") c.threads = scalar_as<std::size_t>(v, key);
    else if (key == "model") c.model = ModelConfig::from_json(yaml_map(v, "model"));
    else throw ValidationError(fmt::format("train config: unknown key '{}'", key));
  }
  c.model.vocab_size = Vocab::for_task(c.task).size();
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string config_reference() {
  TrainConfig d;
  d.model.vocab_size = 0;
  std::string out = "Training config keys (YAML, kebab-case):\n";
  const auto top = d.to_json();
  for (const auto& [k, v] : top.items()) {
    if (k == "model") continue;
    out += fmt::format("  {:<16} default {}\n", k, v.dump());
  }
  out += "Model keys (under 'model:'; vocab-size is set from the task):\n";
  const auto model = d.model.to_json();
  for (const auto& [k, v] : model.items()) out += fmt::format("  {:<20} default {}\n", k, v.dump());
  return out;
}

nlohmann::ordered_json Metrics::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["seed"] = seed;
  j["train_loss"] = train_loss;
  j["train_accuracy"] = train_accuracy;
  j["test_accuracy"] = test_accuracy;
  return j;
}

bool InstanceAudit::disjoint() const {
  std::vector<std::size_t> both;
  std::set_intersection(train_lengths.begin(), train_lengths.end(), test_lengths.begin(), test_lengths.end(),
                        std::back_inserter(both));
  return both.empty();
}

// ---- loss and optimizer ----------------------------------------------------------

namespace {

struct EncodedBatch {
  Batch batch;
  std::vector<std::size_t> rows;     // time-major logit rows of every placeholder
  std::vector<std::size_t> targets;  // target id per row
  std::vector<std::size_t> owner;    // instance index per row
};

EncodedBatch encode_batch(std::span<const TaskInstance> instances, const Vocab& vocab) {
  EncodedBatch out;
  std::vector<std::vector<int>> seqs;
  std::vector<EncodedInstance> enc;
  for (const auto& x : instances) {
    enc.push_back(encode(x, vocab));
    seqs.push_back(enc.back().input_ids);
  }
  out.batch = Batch::from_sequences(seqs);
  const std::size_t B = instances.size();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < enc[b].placeholder_positions.size(); ++i) {
      out.rows.push_back(enc[b].placeholder_positions[i] * B + b);
      out.targets.push_back(static_cast<std::size_t>(enc[b].target_ids[i]));
      out.owner.push_back(b);
    }
  }
  return out;
}

std::size_t argmax_row(const Tensor& t, std::size_t r) {
  const std::size_t w = t.cols();
  std::size_t best = 0;
  for (std::size_t j = 1; j < w; ++j) {
    if (t.at(r, j) > t.at(r, best)) best = j;
  }
  return best;
}

double exact_match(const EncodedBatch& eb, const Tensor& gathered, std::size_t instances) {
  std::vector<char> ok(instances, 1);
  for (std::size_t i = 0; i < eb.rows.size(); ++i) {
    if (argmax_row(gathered, i) != eb.targets[i]) ok[eb.owner[i]] = 0;
  }
  return 100.0 * static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(instances);
}

}  // namespace

LossAndGrads batch_loss(const ModelConfig& config, const ModelParams& params, std::span<const TaskInstance> batch) {
  if (batch.empty()) throw ValidationError("batch_loss: empty batch");
  const Vocab vocab = Vocab::for_task(batch[0].task);
  const EncodedBatch eb = encode_batch(batch, vocab);
  Graph g;
  const BoundParams p = bind(g, params);
  const ForwardOutput out = model_forward(g, config, p, eb.batch);
  const Value picked = gather_rows(out.logits, eb.rows);
  const Value loss = cross_entropy(picked, eb.targets);
  g.backward(loss);
  LossAndGrads r;
  r.loss = loss.data()[0];
  r.accuracy = exact_match(eb, picked.data(), batch.size());
  for (const auto& [name, v] : p) r.grads[name] = v.grad();
  return r;
}

void Optimizer::step(ModelParams& params, const ModelParams& grads) {
  ++t_;
  double scale = 1.0;
  if (config_.grad_clip > 0) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
      for (double x : g.data) sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.grad_clip) scale = config_.grad_clip / norm;
  }
  const double lr = config_.learning_rate;
  for (auto& [name, w] : params) {
    const auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * scale * g[i];
      continue;
    }
    Tensor& m = m_.try_emplace(name, Tensor::zeros(w.shape)).first->second;
    Tensor& v = v_.try_emplace(name, Tensor::zeros(w.shape)).first->second;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = scale * g[i];
      m[i] = b1 * m[i] + (1 - b1) * gi;
      v[i] = b2 * v[i] + (1 - b2) * gi * gi;
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

// ---- evaluation ---------------------------------------------------------------------

ModelPredictor::ModelPredictor(ModelConfig config, ModelParams params, TaskId task, std::size_t batch_size)
    : config_(std::move(config)), params_(std::move(params)), vocab_(Vocab::for_task(task)),
      batch_size_(std::max<std::size_t>(1, batch_size)) {
  check_params(config_, params_);
}

std::vector<std::vector<std::string>> ModelPredictor::predict(std::span<const TaskInstance> instances) {
  std::vector<std::vector<std::string>> out(instances.size());
  for (std::size_t lo = 0; lo < instances.size(); lo += batch_size_) {
    const auto chunk = instances.subspan(lo, std::min(batch_size_, instances.size() - lo));
    const EncodedBatch eb = encode_batch(chunk, vocab_);
    Graph g;
    const ForwardOutput f = model_forward(g, config_, rlab::bind(g, params_), eb.batch);
    const Tensor& logits = f.logits.data();
    for (std::size_t i = 0; i < eb.rows.size(); ++i) {
      out[lo + eb.owner[i]].push_back(vocab_.token(static_cast<int>(argmax_row(logits, eb.rows[i]))));
    }
  }
  return out;
}

std::vector<TaskInstance> evaluation_set(TaskId task, LengthRange lengths, std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, seed_stream::kTestData));
  std::vector<TaskInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate(task, rng.next_u64(), lengths));
  return out;
}

double accuracy(Predictor& predictor, std::span<const TaskInstance> instances) {
  if (instances.empty()) throw ValidationError("accuracy: no instances");
  const auto predicted = predictor.predict(instances);
  if (predicted.size() != instances.size()) throw Error("predictor returned the wrong number of answers");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) correct += predicted[i] == instances[i].target_tokens;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(instances.size());
}

double evaluate(Predictor& predictor, TaskId task, LengthRange lengths, std::size_t count, std::uint64_t seed) {
  const auto set = evaluation_set(task, lengths, count, seed);
  return accuracy(predictor, set);
}

double evaluate(const Checkpoint& checkpoint, TaskId task, LengthRange lengths, std::size_t count,
                std::uint64_t seed) {
  const std::size_t expected = Vocab::for_task(task).size();
  if (checkpoint.config.vocab_size != expected) {
    throw ValidationError(fmt::format("vocab mismatch: checkpoint has {} tokens, task {} needs {}",
                                      checkpoint.config.vocab_size, task_name(task), expected));
  }
  if (checkpoint.metadata.contains("task") && checkpoint.metadata["task"] != task_name(task)) {
    throw ValidationError(fmt::format("vocab mismatch: checkpoint was trained on {}, not {}",
                                      checkpoint.metadata["task"].get<std::string>(), task_name(task)));
  }
  ModelPredictor p(checkpoint.config, checkpoint.params, task);
  return evaluate(p, task, lengths, count, seed);
}

// ---- training -------------------------------------------------------------------------

TrainResult train(const TrainConfig& config, std::uint64_t run_seed, const MetricsSink& sink) {
  config.validate();
  ModelConfig mc = config.model;
  mc.vocab_size = Vocab::for_task(config.task).size();
  mc.seed = derive_seed(run_seed, seed_stream::kModelInit);
  ModelParams params = init_params(mc);
  Optimizer opt(config.optimizer);

  const std::vector<TaskInstance> test_set =
      evaluation_set(config.task, config.test_lengths, config.eval_instances, config.seed);
  Rng data(derive_seed(run_seed, seed_stream::kTrainData));

  TrainResult result;
  result.seed = run_seed;
  std::set<std::size_t> train_seen, test_seen;
  for (const auto& x : test_set) test_seen.insert(x.n);

  auto snapshot_best = [&](std::size_t step, double acc) {
    result.best_test_accuracy = acc;
    result.best_step = step;
    nlohmann::ordered_json meta;
    meta["task"] = std::string(task_name(config.task));
    meta["seed"] = run_seed;
    meta["step"] = step;
    meta["test_accuracy"] = acc;
    meta["train_lengths"] = to_string(config.train_lengths);
    meta["test_lengths"] = to_string(config.test_lengths);
    result.best = Checkpoint{mc, params, meta};
  };
  snapshot_best(0, -1.0);

  std::size_t last_finite = 0;
  std::size_t since_best = 0;
  std::vector<TaskInstance> batch;
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    batch.clear();
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      batch.push_back(generate(config.task, data.next_u64(), config.train_lengths));
      train_seen.insert(batch.back().n);
    }
    LossAndGrads lg;
    try {
      lg = batch_loss(mc, params, batch);
    } catch (const OverflowError& e) {
      throw DivergenceError(fmt::format("training diverged at step {} (last finite step {}): {}", step, last_finite,
                                        e.what()),
                            last_finite);
    }
    if (!std::isfinite(lg.loss)) {
      throw DivergenceError(
          fmt::format("training diverged at step {}: loss is not finite (last finite step {})", step, last_finite),
          last_finite);
    }
    opt.step(params, lg.grads);
    last_finite = step;

    if (step % config.eval_every == 0 || step == config.max_steps) {
      ModelPredictor predictor(mc, params, config.task);
      Metrics m;
      m.step = step;
      m.seed = run_seed;
      m.train_loss = lg.loss;
      m.train_accuracy = lg.accuracy;
      try {
        m.test_accuracy = accuracy(predictor, test_set);
      } catch (const OverflowError& e) {
        throw DivergenceError(fmt::format("evaluation overflowed at step {}: {}", step, e.what()), last_finite);
      }
      result.history.push_back(m);
      if (sink) sink(m);
      if (m.test_accuracy > result.best_test_accuracy) {
        snapshot_best(step, m.test_accuracy);
        since_best = 0;
      } else if (config.patience > 0 && ++since_best >= config.patience) {
        break;
      }
    }
  }
  if (result.best_test_accuracy < 0) snapshot_best(0, 0.0);

  result.audit.train_lengths.assign(train_seen.begin(), train_seen.end());
  result.audit.test_lengths.assign(test_seen.begin(), test_seen.end());
  const bool ranges_disjoint =
      config.train_lengths.max < config.test_lengths.min || config.test_lengths.max < config.train_lengths.min;
  if (ranges_disjoint && !result.audit.disjoint()) throw Error("instance audit: evaluation saw a training length");
  return result;
}

std::size_t select_best(std::span<const std::pair<std::uint64_t, double>> runs) {
  if (runs.empty()) throw ValidationError("select_best: no runs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto& [s, a] = runs[i];
    if (a > runs[best].second || (a == runs[best].second && s < runs[best].first)) best = i;
  }
  return best;
}

TrainResult best_of_seeds(const TrainConfig& config, const MetricsSink& sink) {
  config.validate();
  std::mutex sink_mutex;
  const MetricsSink locked = [&](const Metrics& m) {
    if (!sink) return;
    std::lock_guard lock(sink_mutex);
    sink(m);
  };
  const std::size_t n = config.n_seeds;
  const std::size_t workers = config.threads == 0 ? n : std::min(n, config.threads);
  std::vector<std::optional<TrainResult>> results(n);
  std::vector<std::string> errors(n);
  std::vector<std::future<void>> jobs;
  std::mutex next_mutex;
  std::size_t next = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(next_mutex);
          if (next >= n) return;
          i = next++;
        }
        try {
          results[i] = train(config, config.seed + i, locked);
        } catch (const DivergenceError& e) {
          errors[i] = e.what();
        }
      }
    }));
  }
  for (auto& j : jobs) j.get();

  std::vector<std::pair<std::uint64_t, double>> runs;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i]) continue;
    runs.emplace_back(results[i]->seed, results[i]->best_test_accuracy);
    index.push_back(i);
  }
  if (runs.empty()) {
    throw DivergenceError(fmt::format("all {} runs diverged; last error: {}", n, errors.back()), 0);
  }
  return std::move(*results[index[select_best(runs)]]);
}

}  // namespace rlab
