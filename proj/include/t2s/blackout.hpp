#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "t2s/vocab.hpp"

namespace t2s {

using Rng = std::mt19937_64;

/// Proposal q(w) proportional to max(count(w), 1)^beta, sampled in O(1)
/// with Walker's alias method.
class UnigramSampler {
 public:
  UnigramSampler() = default;
  UnigramSampler(std::span<const double> counts, double beta);

  std::size_t size() const { return q_.size(); }
  double beta() const { return beta_; }
  double q(TokenId id) const { return q_[id]; }
  const std::vector<double>& probabilities() const { return q_; }

  TokenId draw(Rng& rng) const;

 private:
  double beta_ = 0.0;
  std::vector<double> q_;
  std::vector<double> accept_;
  std::vector<TokenId> alias_;
};

/// K draws with replacement, each redrawn while equal to the target.
std::vector<TokenId> sample_negatives(const UnigramSampler& sampler,
                                      TokenId target, std::size_t K, Rng& rng);

template <typename T>
struct LossGradient {
  T loss;
  std::vector<T> grad;  // dLoss / dlogit
};

/// Weighted-softmax loss over the target and its negatives:
/// p_j = (exp(s_j) / q_j) / sum_k exp(s_k) / q_k,
/// loss = -log p_target - sum_{negatives} log(1 - p_j).
template <typename T>
LossGradient<T> blackout_loss(std::span<const T> logits,
                              std::span<const double> q,
                              std::size_t target_pos = 0);

/// Negative log-likelihood under the exact softmax.
template <typename T>
LossGradient<T> full_softmax_loss(std::span<const T> logits, TokenId target);

}  // namespace t2s
