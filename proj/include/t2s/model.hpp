#pragma once

#include <cstddef>

#include "t2s/blackout.hpp"
#include "t2s/corpus.hpp"
#include "t2s/decoder.hpp"
#include "t2s/encoder.hpp"

namespace t2s {

enum class LossMode { kSoftmax, kBlackOut };

struct LossOptions {
  LossMode mode = LossMode::kSoftmax;
  EncoderKind encoder = EncoderKind::kTree;
  std::size_t negatives = 0;                 // K, BlackOut only
  const UnigramSampler* sampler = nullptr;   // BlackOut only
};

/// Teacher-forced negative log-likelihood of one pair (target eos included),
/// with y_0 = eos and s~_0 = 0. When `grads` is non-null the gradient of that
/// loss is accumulated into it. `rng` drives BlackOut negatives.
template <typename T>
T pair_loss(const ModelParams<T>& params, const SentencePair& pair,
            const LossOptions& options, Rng* rng = nullptr,
            ModelParams<T>* grads = nullptr);

struct TeacherForcedStats {
  double loss = 0.0;  // exact-softmax NLL summed over target tokens
  std::size_t tokens = 0;
  std::size_t correct = 0;  // argmax equals the gold token
};

template <typename T>
TeacherForcedStats teacher_forced_eval(const ModelParams<T>& params,
                                       const SentencePair& pair,
                                       EncoderKind encoder = EncoderKind::kTree);

}  // namespace t2s
