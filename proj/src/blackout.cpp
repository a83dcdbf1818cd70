#include "t2s/blackout.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "t2s/tensor.hpp"

namespace t2s {

UnigramSampler::UnigramSampler(std::span<const double> counts, double beta)
    : beta_(beta) {
  if (counts.empty()) throw std::invalid_argument("sampler: empty vocabulary");
  if (beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("sampler: beta must lie in [0, 1]");
  }
  const std::size_t n = counts.size();
  q_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    q_[i] = std::pow(std::max(counts[i], 1.0), beta);
  }
  const double total = std::accumulate(q_.begin(), q_.end(), 0.0);
  for (double& v : q_) v /= total;

  accept_.assign(n, 1.0);
  alias_.resize(n);
  std::iota(alias_.begin(), alias_.end(), 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = q_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = static_cast<TokenId>(l);
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (std::size_t i : small) accept_[i] = 1.0;
  for (std::size_t i : large) accept_[i] = 1.0;
}

TokenId UnigramSampler::draw(Rng& rng) const {
  const std::size_t n = q_.size();
  const std::size_t bucket =
      std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return u < accept_[bucket] ? static_cast<TokenId>(bucket) : alias_[bucket];
}

std::vector<TokenId> sample_negatives(const UnigramSampler& sampler,
                                      TokenId target, std::size_t K, Rng& rng) {
  if (sampler.size() < 2) {
    throw std::invalid_argument("sample_negatives: vocabulary needs >= 2 ids");
  }
  if (K < 1) throw std::invalid_argument("sample_negatives: K must be >= 1");
  std::vector<TokenId> out;
  out.reserve(K);
  while (out.size() < K) {
    const TokenId id = sampler.draw(rng);
    if (id != target) out.push_back(id);
  }
  return out;
}

template <typename T>
LossGradient<T> blackout_loss(std::span<const T> logits,
                              std::span<const double> q,
                              std::size_t target_pos) {
  const std::size_t n = logits.size();
  if (n < 2 || q.size() != n || target_pos >= n) {
    throw std::invalid_argument("blackout_loss: need target plus >= 1 negative "
                                "with matching proposal values");
  }
  if (!all_finite(logits)) {
    throw std::domain_error("blackout_loss: non-finite logits");
  }
  // z_j = s_j - log q_j; p = softmax(z)
  std::vector<T> z(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(q[j] > 0.0)) throw std::invalid_argument("blackout_loss: q must be > 0");
    z[j] = logits[j] - static_cast<T>(std::log(q[j]));
  }
  const T m = *std::max_element(z.begin(), z.end());
  std::vector<T> ez(n);
  T total = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    ez[j] = std::exp(z[j] - m);
    total += ez[j];
  }
  const T log_total = std::log(total);
  std::vector<T> p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = ez[j] / total;

  // Only the largest position can have 1 - p rounding to zero; its
  // complement is summed separately and its ratio p / (1 - p) never formed.
  const std::size_t a =
      static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  const bool dominant_negative = a != target_pos;
  T log_rest_a = T(0);
  if (dominant_negative) {
    T m2 = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != a) m2 = std::max(m2, z[j]);
    T s = T(0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != a) s += std::exp(z[j] - m2);
    log_rest_a = m2 - m + std::log(s) - log_total;  // log(1 - p_a)
  }

  LossGradient<T> out{T(0), std::vector<T>(n, T(0))};
  out.loss = -(z[target_pos] - m - log_total);
  // ratio_k = p_k / (1 - p_k) for the bounded negatives.
  T ratio_sum = T(0);
  std::vector<T> ratio(n, T(0));
  for (std::size_t k = 0; k < n; ++k) {
    if (k == target_pos) continue;
    if (dominant_negative && k == a) {
      out.loss -= log_rest_a;
      continue;
    }
    const T rest = (total - ez[k]) / total;
    out.loss -= std::log(total - ez[k]) - log_total;
    ratio[k] = p[k] / rest;
    ratio_sum += ratio[k];
  }
  for (std::size_t j = 0; j < n; ++j) {
    out.grad[j] = p[j] + ratio[j] - p[j] * ratio_sum;
  }
  if (dominant_negative) {
    // r_a - p_a r_a = p_a; p_j r_a = p_a * p_j / (1 - p_a)
    const T log_pa = z[a] - m - log_total;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) {
        out.grad[j] += p[a];
      } else {
        out.grad[j] -= std::exp(log_pa + (z[j] - m - log_total) - log_rest_a);
      }
    }
  }
  out.grad[target_pos] -= T(1);
  return out;
}

template <typename T>
LossGradient<T> full_softmax_loss(std::span<const T> logits, TokenId target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw std::out_of_range("full_softmax_loss: target " +
                            std::to_string(target) + " outside " +
                            std::to_string(logits.size()) + " logits");
  }
  const T lse = log_sum_exp(logits);
  LossGradient<T> out{lse - logits[target], std::vector<T>(logits.size())};
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out.grad[j] = std::exp(logits[j] - lse);
  }
  out.grad[target] -= T(1);
  return out;
}

template LossGradient<float> blackout_loss(std::span<const float>,
                                           std::span<const double>,
                                           std::size_t);
template LossGradient<double> blackout_loss(std::span<const double>,
                                            std::span<const double>,
                                            std::size_t);
template LossGradient<long double> blackout_loss(std::span<const long double>,
                                                 std::span<const double>,
                                                 std::size_t);
template LossGradient<float> full_softmax_loss(std::span<const float>, TokenId);
template LossGradient<double> full_softmax_loss(std::span<const double>,
                                                TokenId);
template LossGradient<long double> full_softmax_loss(std::span<const long double>,
                                                     TokenId);

}  // namespace t2s
