// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic training and evaluation of expert models on task data.
//
// Seeds: a run with seed s initializes the model from derive_seed(s,
// kModelInit) and draws training instances from derive_seed(s, kTrainData).
// The evaluation set depends only on the config's base seed
// (derive_seed(base, kTestData)), so every run of best_of_seeds is scored on
// the same instances.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlab/errors.hpp"
#include "rlab/models.hpp"
#include "rlab/tasks.hpp"

namespace rlab {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double grad_clip = 1.0;  // global L2 norm; 0 disables
};

struct TrainConfig {
  TaskId task = TaskId::kParityCheck;
  /// vocab_size is filled in from the task.
  ModelConfig model;
  OptimizerConfig optimizer;
  std::size_t batch_size = 64;
  std::size_t max_steps = 20000;
  LengthRange train_lengths{1, 20};
  LengthRange test_lengths{21, 40};
  std::size_t n_seeds = 3;
  std::size_t eval_every = 500;
  std::size_t eval_instances = 500;
  /// Evaluations without a new best before stopping; 0 disables.
  std::size_t patience = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // best_of_seeds worker count; 0 = one per seed

  /// Throws ValidationError.
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// Parses the YAML config format. Keys are kebab-case; unknown keys are
/// rejected. See config_reference() for the full list.
TrainConfig parse_train_config(std::string_view yaml_text);
TrainConfig load_train_config(const std::filesystem::path& path);
/// Markdown list of every accepted config key with its default.
std::string config_reference();

struct Metrics {
  std::size_t step = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // exact match on the current batch, percent
  double test_accuracy = 0.0;   // exact match on the evaluation set, percent
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  bool operator==(const Metrics&) const = default;
};

/// Training produced a non-finite loss or activation.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t last_finite_step)
      : Error(what), last_finite_step_(last_finite_step) {}
  std::size_t last_finite_step() const noexcept { return last_finite_step_; }
  const char* kind() const noexcept override { return "divergence"; }

 private:
  std::size_t last_finite_step_;
};

/// Lengths of every instance seen, kept so that disjoint train/test ranges
/// can be asserted after the fact.
struct InstanceAudit {
  std::vector<std::size_t> train_lengths;  // distinct, sorted
  std::vector<std::size_t> test_lengths;   // distinct, sorted
  bool disjoint() const;
};

struct TrainResult {
  Checkpoint best;  // parameters at the best evaluation
  std::vector<Metrics> history;
  double best_test_accuracy = 0.0;
  std::size_t best_step = 0;
  std::uint64_t seed = 0;
  InstanceAudit audit;
};

/// Called after each evaluation; may be used to stream metrics.
using MetricsSink = std::function<void(const Metrics&)>;

TrainResult train(const TrainConfig& config, std::uint64_t run_seed, const MetricsSink& sink = {});
inline TrainResult train(const TrainConfig& config) { return train(config, config.seed); }

/// Trains runs seeded config.seed, config.seed + 1, ... in parallel and
/// returns the run with the highest best test accuracy (lower seed on ties).
/// Diverged runs are skipped; if every run diverges the last error is thrown.
TrainResult best_of_seeds(const TrainConfig& config, const MetricsSink& sink = {});

/// Index of the best entry of (seed, accuracy) pairs: highest accuracy, then
/// lowest seed.
std::size_t select_best(std::span<const std::pair<std::uint64_t, double>> runs);

// ---- evaluation -----------------------------------------------------------------

/// Anything that maps instances to predicted target tokens.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<std::vector<std::string>> predict(std::span<const TaskInstance> instances) = 0;
};

/// Greedy argmax at placeholder positions of a trained model.
class ModelPredictor : public Predictor {
 public:
  ModelPredictor(ModelConfig config, ModelParams params, TaskId task, std::size_t batch_size = 64);
  std::vector<std::vector<std::string>> predict(std::span<const TaskInstance> instances) override;

 private:
  ModelConfig config_;
  ModelParams params_;
  Vocab vocab_;
  std::size_t batch_size_;
};

/// Instances drawn for evaluation: lengths uniform in `lengths`, instance
/// seeds from derive_seed(seed, kTestData).
std::vector<TaskInstance> evaluation_set(TaskId task, LengthRange lengths, std::size_t count, std::uint64_t seed);

/// Exact-match accuracy in percent.
double accuracy(Predictor& predictor, std::span<const TaskInstance> instances);
double evaluate(Predictor& predictor, TaskId task, LengthRange lengths, std::size_t count, std::uint64_t seed);
/// Throws ValidationError when the checkpoint was trained on another vocabulary.
double evaluate(const Checkpoint& checkpoint, TaskId task, LengthRange lengths, std::size_t count,
                std::uint64_t seed);

// ---- pieces exposed for tests --------------------------------------------------

struct LossAndGrads {
  double loss = 0.0;
  ModelParams grads;
  double accuracy = 0.0;  // exact match on the batch, percent
};

/// Mean cross-entropy over every placeholder of the batch, with gradients.
LossAndGrads batch_loss(const ModelConfig& config, const ModelParams& params, std::span<const TaskInstance> batch);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}
  /// Clips (if configured) and applies one update in place.
  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps() const noexcept { return t_; }

 private:
  OptimizerConfig config_;
  ModelParams m_;
  ModelParams v_;
  std::size_t t_ = 0;
};

}  // namespace rlab
