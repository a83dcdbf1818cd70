#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "t2s/blackout.hpp"
#include "t2s/corpus.hpp"
#include "t2s/model.hpp"
#include "t2s/params.hpp"

namespace t2s {

struct TrainConfig {
  std::size_t embed = 256;   // e
  std::size_t hidden = 256;  // d
  std::size_t negatives = 500;  // K
  double beta = 0.4;
  std::size_t batch_size = 128;
  double learning_rate = 1.0;
  double clip = 3.0;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 1;
  LossMode loss = LossMode::kBlackOut;
  EncoderKind encoder = EncoderKind::kTree;
  std::size_t min_count = 2;  // vocabulary threshold N
  double init_range = 0.1;
  bool bucket_by_length = false;
  bool reverse_source = false;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Uniform [-range, range] weights and embeddings; zero biases, output
/// weights and output biases; every forget-gate bias 1.0.
template <typename T>
ModelParams<T> init_params(const ModelDims& dims, double init_range, Rng& rng);

/// Halves the rate whenever the dev loss is worse than the previous epoch's.
class LearningRateSchedule {
 public:
  explicit LearningRateSchedule(double initial) : rate_(initial) {}
  LearningRateSchedule(double rate, std::optional<double> previous)
      : rate_(rate), previous_(previous) {}

  /// Returns true when this observation halved the rate.
  bool observe(double dev_loss);
  double rate() const { return rate_; }
  std::optional<double> previous() const { return previous_; }

 private:
  double rate_;
  std::optional<double> previous_;
};

struct BatchStats {
  double mean_loss = 0.0;
  double grad_norm = 0.0;       // before clipping
  double clipped_norm = 0.0;    // after clipping
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double learning_rate = 0.0;  // rate used during the epoch
  double seconds = 0.0;
  bool halved = false;
};

struct DevStats {
  double mean_loss = 0.0;  // mean per-pair NLL under the exact softmax
  double perplexity = 0.0;
  double token_accuracy = 0.0;
};

template <typename T>
DevStats evaluate_dev(const ModelParams<T>& params,
                      std::span<const SentencePair> dev, EncoderKind encoder);

/// Minibatch SGD. Per-pair gradients are computed in parallel and merged in
/// a fixed order, so results do not depend on the thread count.
template <typename T>
class Trainer {
 public:
  Trainer(TrainConfig config, ModelParams<T> params, UnigramSampler sampler);

  /// Mean loss over the batch, backward, global-norm clip, one SGD step.
  BatchStats train_minibatch(std::span<const SentencePair> batch,
                             std::uint64_t batch_seed);

  /// One pass over `train` in a seeded shuffled order.
  double train_epoch(std::span<const SentencePair> train);

  /// Epoch loop with dev-loss learning-rate halving. `on_epoch` may return
  /// false to stop early.
  std::vector<EpochRecord> run_training(
      std::span<const SentencePair> train, std::span<const SentencePair> dev,
      const std::function<bool(const EpochRecord&, const Trainer&)>& on_epoch = {});

  const ModelParams<T>& params() const { return params_; }
  ModelParams<T>& params() { return params_; }
  const TrainConfig& config() const { return config_; }
  const UnigramSampler& sampler() const { return sampler_; }
  const LearningRateSchedule& schedule() const { return schedule_; }
  void set_schedule(LearningRateSchedule s) { schedule_ = s; }
  std::size_t epoch() const { return epoch_; }
  void set_epoch(std::size_t e) { epoch_ = e; }
  const Rng& shuffle_rng() const { return shuffle_rng_; }
  void set_shuffle_rng(const Rng& rng) { shuffle_rng_ = rng; }
  const BatchStats& last_batch() const { return last_batch_; }

 private:
  LossOptions loss_options() const;

  TrainConfig config_;
  ModelParams<T> params_;
  UnigramSampler sampler_;
  LearningRateSchedule schedule_;
  std::size_t epoch_ = 0;
  std::size_t batches_seen_ = 0;
  Rng shuffle_rng_;
  BatchStats last_batch_;
  std::vector<ModelParams<T>> slots_;
};

}  // namespace t2s
