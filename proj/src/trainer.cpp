#include "t2s/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <string>

namespace t2s {

namespace {

// Gradient partial sums per batch; fixed so the merge order never depends on
// how many threads run.
constexpr std::size_t kGradientChunks = 16;

template <typename T>
void fill_uniform(Tensor<T>& t, double range, Rng& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

template <typename T>
void set_block(Tensor<T>& b, std::size_t block, std::size_t d, T value) {
  for (std::size_t k = 0; k < d; ++k) b[block * d + k] = value;
}

}  // namespace

void TrainConfig::validate() const {
  if (embed == 0 || hidden == 0) {
    throw std::invalid_argument("embed and hidden must be positive");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be positive");
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must be nonnegative");
  }
  if (loss == LossMode::kBlackOut && negatives < 1) {
    throw std::invalid_argument("BlackOut needs negatives >= 1");
  }
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("beta must lie in [0, 1]");
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
}

template <typename T>
ModelParams<T> init_params(const ModelDims& dims, double init_range, Rng& rng) {
  auto p = ModelParams<T>::zeros(dims);
  const std::size_t d = dims.hidden;
  fill_uniform(p.source_embed, init_range, rng);
  fill_uniform(p.target_embed, init_range, rng);
  for (auto* lstm : {&p.encoder, &p.decoder}) {
    fill_uniform(lstm->W, init_range, rng);
    fill_uniform(lstm->U, init_range, rng);
    set_block(lstm->b, kForgetGate, d, T(1));
  }
  for (auto* tree : {&p.tree, &p.init_tree}) {
    fill_uniform(tree->U_left, init_range, rng);
    fill_uniform(tree->U_right, init_range, rng);
    set_block(tree->b, kTreeForgetLeft, d, T(1));
    set_block(tree->b, kTreeForgetRight, d, T(1));
  }
  fill_uniform(p.W_combine, init_range, rng);
  return p;
}

bool LearningRateSchedule::observe(double dev_loss) {
  const bool worse = previous_.has_value() && dev_loss > *previous_;
  if (worse) rate_ *= 0.5;
  previous_ = dev_loss;
  return worse;
}

template <typename T>
DevStats evaluate_dev(const ModelParams<T>& params,
                      std::span<const SentencePair> dev, EncoderKind encoder) {
  DevStats out;
  if (dev.empty()) return out;
  std::vector<TeacherForcedStats> stats(dev.size());
  const auto n = static_cast<std::ptrdiff_t>(dev.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    stats[i] = teacher_forced_eval(params, dev[i], encoder);
  }
  double loss = 0.0;
  std::size_t tokens = 0, correct = 0;
  for (const auto& s : stats) {
    loss += s.loss;
    tokens += s.tokens;
    correct += s.correct;
  }
  out.mean_loss = loss / static_cast<double>(dev.size());
  out.perplexity = std::exp(loss / static_cast<double>(tokens));
  out.token_accuracy = static_cast<double>(correct) / static_cast<double>(tokens);
  return out;
}

template <typename T>
Trainer<T>::Trainer(TrainConfig config, ModelParams<T> params,
                    UnigramSampler sampler)
    : config_(config),
      params_(std::move(params)),
      sampler_(std::move(sampler)),
      schedule_(config.learning_rate),
      shuffle_rng_(config.seed) {
  config_.validate();
  if (config_.loss == LossMode::kBlackOut &&
      sampler_.size() != params_.dims.target_vocab) {
    throw std::invalid_argument("sampler size does not match target vocab");
  }
}

template <typename T>
LossOptions Trainer<T>::loss_options() const {
  LossOptions o;
  o.mode = config_.loss;
  o.encoder = config_.encoder;
  o.negatives = config_.negatives;
  o.sampler = config_.loss == LossMode::kBlackOut ? &sampler_ : nullptr;
  return o;
}

template <typename T>
BatchStats Trainer<T>::train_minibatch(std::span<const SentencePair> batch,
                                       std::uint64_t batch_seed) {
  if (batch.empty()) throw std::invalid_argument("train_minibatch: empty batch");
  const std::size_t B = batch.size();
  const std::size_t chunks = std::min(B, kGradientChunks);
  while (slots_.size() < chunks) {
    slots_.push_back(ModelParams<T>::zeros(params_.dims));
  }
  const LossOptions options = loss_options();
  std::vector<double> losses(B, 0.0);
  std::vector<std::exception_ptr> errors(chunks);

  const auto nchunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
    const std::size_t begin = B * c / chunks, end = B * (c + 1) / chunks;
    auto& slot = slots_[c];
    slot.set_zero();
    for (std::size_t i = begin; i < end; ++i) {
      try {
        std::seed_seq seq{static_cast<std::uint32_t>(batch_seed),
                          static_cast<std::uint32_t>(batch_seed >> 32),
                          static_cast<std::uint32_t>(i)};
        Rng rng(seq);
        losses[i] = pair_loss(params_, batch[i], options, &rng, &slot);
      } catch (...) {
        errors[c] = std::current_exception();
        break;
      }
    }
  }
  for (std::size_t c = 0; c < chunks; ++c) {
    if (!errors[c]) continue;
    try {
      std::rethrow_exception(errors[c]);
    } catch (const std::exception& e) {
      throw std::runtime_error("training aborted at batch " +
                               std::to_string(batches_seen_) + " (epoch " +
                               std::to_string(epoch_ + 1) + "): " + e.what());
    }
  }

  ModelParams<T>& total = slots_[0];
  for (std::size_t c = 1; c < chunks; ++c) total.add_scaled(slots_[c], T(1));
  const T inv = T(1) / static_cast<T>(B);
  for (auto* t : total.tensors()) {
    for (auto& v : t->values()) v *= inv;
  }
  auto grads = total.tensors();
  BatchStats stats;
  stats.grad_norm = clip_global_norm<T>(grads, static_cast<T>(config_.clip));
  stats.clipped_norm = global_norm<T>(grads);
  params_.add_scaled(total, static_cast<T>(-schedule_.rate()));
  stats.mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) /
                    static_cast<double>(B);
  ++batches_seen_;
  last_batch_ = stats;
  return stats;
}

template <typename T>
double Trainer<T>::train_epoch(std::span<const SentencePair> train) {
  if (train.empty()) throw std::invalid_argument("train_epoch: no data");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng_);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += config_.batch_size) {
    const std::size_t end = std::min(order.size(), i + config_.batch_size);
    auto& b = batches.emplace_back(order.begin() + i, order.begin() + end);
    if (config_.bucket_by_length) {
      std::stable_sort(b.begin(), b.end(), [&](std::size_t x, std::size_t y) {
        return train[x].source.size() < train[y].source.size();
      });
    }
  }
  double total = 0.0;
  std::vector<SentencePair> batch;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    batch.clear();
    for (std::size_t i : batches[b]) batch.push_back(train[i]);
    const std::uint64_t seed =
        config_.seed * 0x9E3779B97F4A7C15ULL + (epoch_ << 32) + b;
    total += train_minibatch(batch, seed).mean_loss * static_cast<double>(batch.size());
  }
  ++epoch_;
  return total / static_cast<double>(train.size());
}

template <typename T>
std::vector<EpochRecord> Trainer<T>::run_training(
    std::span<const SentencePair> train, std::span<const SentencePair> dev,
    const std::function<bool(const EpochRecord&, const Trainer&)>& on_epoch) {
  std::vector<EpochRecord> history;
  while (epoch_ < config_.max_epochs) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.learning_rate = schedule_.rate();
    rec.train_loss = train_epoch(train);
    rec.epoch = epoch_;
    rec.dev_loss = dev.empty() ? rec.train_loss
                               : evaluate_dev(params_, dev, config_.encoder).mean_loss;
    rec.halved = schedule_.observe(rec.dev_loss);
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    history.push_back(rec);
    if (on_epoch && !on_epoch(rec, *this)) break;
  }
  return history;
}

template ModelParams<float> init_params(const ModelDims&, double, Rng&);
template ModelParams<double> init_params(const ModelDims&, double, Rng&);
template DevStats evaluate_dev(const ModelParams<float>&,
                               std::span<const SentencePair>, EncoderKind);
template DevStats evaluate_dev(const ModelParams<double>&,
                               std::span<const SentencePair>, EncoderKind);
template class Trainer<float>;
template class Trainer<double>;

}  // namespace t2s
