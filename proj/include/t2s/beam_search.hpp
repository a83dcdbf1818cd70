#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "t2s/corpus.hpp"
#include "t2s/decoder.hpp"
#include "t2s/encoder.hpp"
#include "t2s/length_model.hpp"

namespace t2s {

struct BeamOptions {
  std::size_t width = 20;
  std::size_t max_length = 100;
  /// Adds log p(len(y) | len(x)) to finished hypotheses; null gives the
  /// simple (unpenalized) search.
  const LengthModel* length_model = nullptr;
  bool record_attention = false;
};

struct Translation {
  std::vector<TokenId> tokens;  // without eos
  double log_prob = 0.0;        // sum of log p over emitted tokens incl. eos
  double score = 0.0;           // log_prob plus the length term, if any
  bool terminated = false;      // ended with eos rather than the length cap
  /// Attention distribution for each emitted token (eos included).
  std::vector<std::vector<double>> attention;
};

/// Decodes until beam_width hypotheses finished and no live partial can
/// beat the worst of them, or nothing is left to expand.
template <typename T>
Translation beam_search(const EncoderOutput<T>& enc, const ModelParams<T>& params,
                        std::size_t source_length, const BeamOptions& options);

/// Argmax at each step (ties resolved to the lower id).
template <typename T>
Translation greedy_decode(const EncoderOutput<T>& enc,
                          const ModelParams<T>& params,
                          std::size_t max_length = 100,
                          bool record_attention = false);

/// Translates every source in order; sentences without a tree use the
/// fallback encoding.
template <typename T>
std::vector<Translation> translate_corpus(std::span<const SentencePair> sources,
                                          const ModelParams<T>& params,
                                          EncoderKind encoder,
                                          const BeamOptions& options);

}  // namespace t2s
