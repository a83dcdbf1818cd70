#pragma once

#include <cstddef>

#include "t2s/encoder.hpp"

namespace t2s {

/// Decoder recurrent state plus the input-feeding carry s~.
template <typename T>
struct DecoderState {
  Tensor<T> s;
  Tensor<T> c;
  Tensor<T> s_tilde;
};

template <typename T>
struct AttentionResult {
  Tensor<T> alpha;    // over EncoderOutput candidates
  Tensor<T> context;  // d
};

/// (s, c) from the dedicated init Tree-LSTM over the final sequential state
/// and the tree root (zeros on fallback); s~ = 0.
template <typename T>
DecoderState<T> init_decoder(const EncoderOutput<T>& enc,
                             const ModelParams<T>& params,
                             TreeLstmCache<T>* trace = nullptr);

/// Dot-product scores against every sequential and phrase state, one joint
/// softmax, context = sum alpha_k h_k.
template <typename T>
AttentionResult<T> attention(const Tensor<T>& s, const EncoderOutput<T>& enc);

/// s~ = tanh(W_combine [s; context] + b_combine).
template <typename T>
Tensor<T> combine(const Tensor<T>& s, const Tensor<T>& context,
                  const ModelParams<T>& params);

template <typename T>
Tensor<T> output_logits(const Tensor<T>& s_tilde, const ModelParams<T>& params);
/// Log-probabilities over the target vocabulary (exact softmax).
template <typename T>
Tensor<T> output_distribution(const Tensor<T>& s_tilde,
                              const ModelParams<T>& params);

template <typename T>
struct DecoderStepTrace {
  LstmCache<T> lstm;
  AttentionResult<T> attention;
  Tensor<T> combine_input;  // [s; context]
  Tensor<T> s_tilde;
};

template <typename T>
struct StepResult {
  DecoderState<T> state;
  AttentionResult<T> attention;
  Tensor<T> log_probs;
};

/// One input-feeding step: LSTM over [embed(y_prev); s~_prev] from s_prev,
/// then attention, combine and (optionally) the output distribution.
template <typename T>
StepResult<T> decoder_step(TokenId y_prev, const DecoderState<T>& state,
                           const EncoderOutput<T>& enc,
                           const ModelParams<T>& params,
                           bool with_log_probs = true,
                           DecoderStepTrace<T>* trace = nullptr);

/// Gradient flowing backward between decoder steps.
template <typename T>
struct DecoderCarry {
  Tensor<T> ds;
  Tensor<T> dc;
  Tensor<T> ds_tilde;
  static DecoderCarry zeros(std::size_t d) {
    return {Tensor<T>(d, 1), Tensor<T>(d, 1), Tensor<T>(d, 1)};
  }
};

/// Backward through one step given dLoss/ds~ of this step. `carry` holds the
/// gradient from later steps on entry and the gradient for the previous
/// step's (s, c, s~) on exit.
template <typename T>
void decoder_step_backward(TokenId y_prev, const EncoderOutput<T>& enc,
                           const ModelParams<T>& params,
                           const DecoderStepTrace<T>& trace,
                           const Tensor<T>& ds_tilde_loss,
                           DecoderCarry<T>& carry, ModelParams<T>& grads,
                           EncoderGradients<T>& enc_grads);

template <typename T>
void init_decoder_backward(const EncoderOutput<T>& enc,
                           const ModelParams<T>& params,
                           const TreeLstmCache<T>& trace,
                           const DecoderCarry<T>& carry, ModelParams<T>& grads,
                           EncoderGradients<T>& enc_grads);

}  // namespace t2s
