#include "t2s/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "t2s/kernels.hpp"

namespace t2s {

template <typename T>
T pair_loss(const ModelParams<T>& params, const SentencePair& pair,
            const LossOptions& options, Rng* rng, ModelParams<T>* grads) {
  if (pair.source.empty() || pair.target.empty()) {
    throw std::invalid_argument("pair_loss: empty sentence");
  }
  const bool blackout = options.mode == LossMode::kBlackOut;
  if (blackout && (!options.sampler || !rng || options.negatives < 1)) {
    throw std::invalid_argument("pair_loss: BlackOut needs a sampler, rng and K");
  }
  const std::size_t d = params.dims.hidden;
  const std::size_t m = pair.target.size();

  EncoderTrace<T> enc_trace;
  const auto enc = encode(pair, params, options.encoder,
                          grads ? &enc_trace : nullptr);
  TreeLstmCache<T> init_trace;
  DecoderState<T> state = init_decoder(enc, params, grads ? &init_trace : nullptr);

  std::vector<DecoderStepTrace<T>> steps(grads ? m : 0);
  std::vector<Tensor<T>> ds_tilde(grads ? m : 0);
  T loss = T(0);
  TokenId y_prev = Vocab::kEos;
  for (std::size_t j = 0; j < m; ++j) {
    const TokenId y = pair.target[j];
    auto step = decoder_step(y_prev, state, enc, params, false,
                             grads ? &steps[j] : nullptr);
    const Tensor<T>& st = step.state.s_tilde;
    if (blackout) {
      std::vector<TokenId> ids{y};
      auto neg = sample_negatives(*options.sampler, y, options.negatives, *rng);
      ids.insert(ids.end(), neg.begin(), neg.end());
      std::vector<T> logits(ids.size());
      std::vector<double> q(ids.size());
      for (std::size_t k = 0; k < ids.size(); ++k) {
        logits[k] = dot<T>(params.W_out.row(ids[k]), st.values()) +
                    params.b_out[ids[k]];
        q[k] = options.sampler->q(ids[k]);
      }
      auto lg = blackout_loss<T>(logits, q);
      loss += lg.loss;
      if (grads) {
        Tensor<T> dst(d, 1);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          kernels::serial::axpy<T>(lg.grad[k], st.values(),
                                   grads->W_out.row(ids[k]));
          grads->b_out[ids[k]] += lg.grad[k];
          kernels::serial::axpy<T>(lg.grad[k], params.W_out.row(ids[k]),
                                   dst.values());
        }
        ds_tilde[j] = std::move(dst);
      }
    } else {
      const Tensor<T> logits = output_logits(st, params);
      auto lg = full_softmax_loss<T>(logits.values(), y);
      loss += lg.loss;
      if (grads) {
        kernels::ger<T>(grads->W_out.values(), grads->W_out.rows(),
                        grads->W_out.cols(), T(1), lg.grad, st.values());
        for (std::size_t k = 0; k < lg.grad.size(); ++k) {
          grads->b_out[k] += lg.grad[k];
        }
        Tensor<T> dst(d, 1);
        kernels::gemv_t<T>(params.W_out.values(), params.W_out.rows(),
                           params.W_out.cols(), lg.grad, dst.values(), false);
        ds_tilde[j] = std::move(dst);
      }
    }
    if (!std::isfinite(loss)) {
      throw std::domain_error("non-finite loss at target step " +
                              std::to_string(j));
    }
    state = std::move(step.state);
    y_prev = y;
  }

  if (grads) {
    auto enc_grads = EncoderGradients<T>::zeros_like(enc);
    auto carry = DecoderCarry<T>::zeros(d);
    for (std::size_t j = m; j-- > 0;) {
      const TokenId prev = j == 0 ? Vocab::kEos : pair.target[j - 1];
      decoder_step_backward(prev, enc, params, steps[j], ds_tilde[j], carry,
                            *grads, enc_grads);
    }
    init_decoder_backward(enc, params, init_trace, carry, *grads, enc_grads);
    encode_backward(pair, params, options.encoder, enc, enc_trace,
                    std::move(enc_grads), *grads);
  }
  return loss;
}

template <typename T>
TeacherForcedStats teacher_forced_eval(const ModelParams<T>& params,
                                       const SentencePair& pair,
                                       EncoderKind encoder) {
  TeacherForcedStats stats;
  const auto enc = encode(pair, params, encoder);
  DecoderState<T> state = init_decoder(enc, params);
  TokenId y_prev = Vocab::kEos;
  for (TokenId y : pair.target) {
    auto step = decoder_step(y_prev, state, enc, params, true);
    const auto lp = step.log_probs.values();
    stats.loss -= static_cast<double>(lp[y]);
    const auto best = std::max_element(lp.begin(), lp.end()) - lp.begin();
    stats.correct += best == y ? 1 : 0;
    ++stats.tokens;
    state = std::move(step.state);
    y_prev = y;
  }
  return stats;
}

template float pair_loss(const ModelParams<float>&, const SentencePair&,
                         const LossOptions&, Rng*, ModelParams<float>*);
template double pair_loss(const ModelParams<double>&, const SentencePair&,
                          const LossOptions&, Rng*, ModelParams<double>*);
template long double pair_loss(const ModelParams<long double>&,
                               const SentencePair&, const LossOptions&, Rng*,
                               ModelParams<long double>*);
template TeacherForcedStats teacher_forced_eval(const ModelParams<float>&,
                                                const SentencePair&,
                                                EncoderKind);
template TeacherForcedStats teacher_forced_eval(const ModelParams<double>&,
                                                const SentencePair&,
                                                EncoderKind);

}  // namespace t2s
