#include "t2s/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "t2s/kernels.hpp"

namespace t2s {

namespace {

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
DecoderState<T> init_decoder(const EncoderOutput<T>& enc,
                             const ModelParams<T>& params,
                             TreeLstmCache<T>* trace) {
  const std::size_t d = params.dims.hidden;
  auto cache = treelstm_forward(params.init_tree, enc.sequential.back(), enc.root());
  DecoderState<T> state{cache.out.h, cache.out.c, Tensor<T>(d, 1)};
  if (trace) *trace = std::move(cache);
  return state;
}

template <typename T>
AttentionResult<T> attention(const Tensor<T>& s, const EncoderOutput<T>& enc) {
  const std::size_t n = enc.candidate_count();
  if (n == 0) throw std::invalid_argument("attention: no encoder states");
  Tensor<T> scores(n, 1);
  for (std::size_t k = 0; k < n; ++k) {
    scores[k] = dot<T>(enc.candidate(k).values(), s.values());
  }
  AttentionResult<T> out{softmax(scores), Tensor<T>(s.rows(), 1)};
  for (std::size_t k = 0; k < n; ++k) {
    kernels::serial::axpy<T>(out.alpha[k], enc.candidate(k).values(),
                             out.context.values());
  }
  return out;
}

template <typename T>
Tensor<T> combine(const Tensor<T>& s, const Tensor<T>& context,
                  const ModelParams<T>& params) {
  return tanh(affine(params.W_combine, concat(s, context), params.b_combine));
}

template <typename T>
Tensor<T> output_logits(const Tensor<T>& s_tilde, const ModelParams<T>& params) {
  return affine(params.W_out, s_tilde, params.b_out);
}

template <typename T>
Tensor<T> output_distribution(const Tensor<T>& s_tilde,
                              const ModelParams<T>& params) {
  return log_softmax(output_logits(s_tilde, params));
}

template <typename T>
StepResult<T> decoder_step(TokenId y_prev, const DecoderState<T>& state,
                           const EncoderOutput<T>& enc,
                           const ModelParams<T>& params, bool with_log_probs,
                           DecoderStepTrace<T>* trace) {
  if (y_prev < 0 || static_cast<std::size_t>(y_prev) >= params.dims.target_vocab) {
    throw std::out_of_range("target id " + std::to_string(y_prev) +
                            " outside vocab of size " +
                            std::to_string(params.dims.target_vocab));
  }
  const std::size_t e = params.dims.embed;
  auto row = params.target_embed.row(y_prev);
  Tensor<T> emb(e, 1, std::vector<T>(row.begin(), row.end()));
  auto lstm = lstm_forward(params.decoder, concat(emb, state.s_tilde),
                           CellState<T>{state.s, state.c});
  StepResult<T> out;
  out.attention = attention(lstm.out.h, enc);
  Tensor<T> joined = concat(lstm.out.h, out.attention.context);
  Tensor<T> s_tilde =
      tanh(affine(params.W_combine, joined, params.b_combine));
  if (with_log_probs) out.log_probs = output_distribution(s_tilde, params);
  out.state = DecoderState<T>{lstm.out.h, lstm.out.c, s_tilde};
  if (trace) {
    trace->lstm = std::move(lstm);
    trace->attention = out.attention;
    trace->combine_input = std::move(joined);
    trace->s_tilde = std::move(s_tilde);
  }
  return out;
}

template <typename T>
void decoder_step_backward(TokenId y_prev, const EncoderOutput<T>& enc,
                           const ModelParams<T>& params,
                           const DecoderStepTrace<T>& trace,
                           const Tensor<T>& ds_tilde_loss,
                           DecoderCarry<T>& carry, ModelParams<T>& grads,
                           EncoderGradients<T>& enc_grads) {
  const std::size_t d = params.dims.hidden, e = params.dims.embed;

  // s~ = tanh(W [s; ctx] + b)
  Tensor<T> dpre(d, 1);
  for (std::size_t k = 0; k < d; ++k) {
    const T st = trace.s_tilde[k];
    dpre[k] = (ds_tilde_loss[k] + carry.ds_tilde[k]) * (T(1) - st * st);
  }
  kernels::ger<T>(grads.W_combine.values(), d, 2 * d, T(1), dpre.values(),
                  trace.combine_input.values());
  add_into(grads.b_combine, dpre);
  Tensor<T> djoined(2 * d, 1);
  kernels::gemv_t<T>(params.W_combine.values(), d, 2 * d, dpre.values(),
                     djoined.values(), false);

  Tensor<T> ds = carry.ds;
  for (std::size_t k = 0; k < d; ++k) ds[k] += djoined[k];
  const auto dcontext = djoined.segment(d, d);

  // context = sum_k alpha_k h_k, alpha = softmax(h_k . s)
  const Tensor<T>& alpha = trace.attention.alpha;
  const Tensor<T>& s = trace.lstm.out.h;
  const std::size_t n = enc.candidate_count();
  const std::size_t n_seq = enc.sequential.size();
  Tensor<T> dalpha(n, 1);
  T weighted = T(0);
  for (std::size_t k = 0; k < n; ++k) {
    dalpha[k] = dot<T>(enc.candidate(k).values(), dcontext);
    weighted += alpha[k] * dalpha[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    const T dscore = alpha[k] * (dalpha[k] - weighted);
    Tensor<T>& dh = k < n_seq ? enc_grads.sequential[k].h
                              : enc_grads.phrases[k - n_seq].h;
    kernels::serial::axpy<T>(alpha[k], dcontext, dh.values());
    kernels::serial::axpy<T>(dscore, s.values(), dh.values());
    kernels::serial::axpy<T>(dscore, enc.candidate(k).values(), ds.values());
  }

  Tensor<T> dx, dh_prev, dc_prev;
  lstm_backward(params.decoder, trace.lstm, ds, carry.dc, grads.decoder, &dx,
                &dh_prev, &dc_prev);
  auto row = grads.target_embed.row(y_prev);
  for (std::size_t k = 0; k < e; ++k) row[k] += dx[k];
  carry.ds = std::move(dh_prev);
  carry.dc = std::move(dc_prev);
  for (std::size_t k = 0; k < d; ++k) carry.ds_tilde[k] = dx[e + k];
}

template <typename T>
void init_decoder_backward(const EncoderOutput<T>& enc,
                           const ModelParams<T>& params,
                           const TreeLstmCache<T>& trace,
                           const DecoderCarry<T>& carry, ModelParams<T>& grads,
                           EncoderGradients<T>& enc_grads) {
  CellState<T> dlast, droot;
  treelstm_backward(params.init_tree, trace, carry.ds, carry.dc,
                    grads.init_tree, &dlast, &droot);
  add_into(enc_grads.sequential.back().h, dlast.h);
  add_into(enc_grads.sequential.back().c, dlast.c);
  enc_grads.add_root(enc, droot);
}

#define T2S_INSTANTIATE_DECODER(T)                                            \
  template DecoderState<T> init_decoder(const EncoderOutput<T>&,              \
                                        const ModelParams<T>&,                \
                                        TreeLstmCache<T>*);                   \
  template AttentionResult<T> attention(const Tensor<T>&,                     \
                                        const EncoderOutput<T>&);             \
  template Tensor<T> combine(const Tensor<T>&, const Tensor<T>&,              \
                             const ModelParams<T>&);                          \
  template Tensor<T> output_logits(const Tensor<T>&, const ModelParams<T>&);  \
  template Tensor<T> output_distribution(const Tensor<T>&,                    \
                                         const ModelParams<T>&);              \
  template StepResult<T> decoder_step(TokenId, const DecoderState<T>&,        \
                                      const EncoderOutput<T>&,                \
                                      const ModelParams<T>&, bool,            \
                                      DecoderStepTrace<T>*);                  \
  template void decoder_step_backward(                                        \
      TokenId, const EncoderOutput<T>&, const ModelParams<T>&,                \
      const DecoderStepTrace<T>&, const Tensor<T>&, DecoderCarry<T>&,         \
      ModelParams<T>&, EncoderGradients<T>&);                                 \
  template void init_decoder_backward(                                        \
      const EncoderOutput<T>&, const ModelParams<T>&,                         \
      const TreeLstmCache<T>&, const DecoderCarry<T>&, ModelParams<T>&,       \
      EncoderGradients<T>&);

T2S_INSTANTIATE_DECODER(float)
T2S_INSTANTIATE_DECODER(double)
T2S_INSTANTIATE_DECODER(long double)

}  // namespace t2s
