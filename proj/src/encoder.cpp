#include "t2s/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "t2s/kernels.hpp"

namespace t2s {

namespace {

template <typename T>
T logistic(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
void require_rows(const Tensor<T>& v, std::size_t rows, const char* what) {
  if (v.rows() != rows || v.cols() != 1) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) +
                     "x1, got " + v.shape_string());
  }
}

}  // namespace

template <typename T>
LstmCache<T> lstm_forward(const LstmWeights<T>& w, const Tensor<T>& x,
                          const CellState<T>& prev) {
  const std::size_t d = w.hidden();
  require_rows(x, w.input(), "lstm input");
  require_rows(prev.h, d, "lstm h_prev");
  require_rows(prev.c, d, "lstm c_prev");

  LstmCache<T> cache{x, prev, w.b, Tensor<T>(d, 1),
                     CellState<T>::zeros(d)};
  auto pre = cache.gates.values();
  kernels::gemv<T>(w.W.values(), w.W.rows(), w.W.cols(), x.values(), pre, true);
  kernels::gemv<T>(w.U.values(), w.U.rows(), w.U.cols(), prev.h.values(), pre,
                   true);
  for (std::size_t r = 0; r < kCellCandidate * d; ++r) pre[r] = logistic(pre[r]);
  for (std::size_t r = kCellCandidate * d; r < kLstmGates * d; ++r) {
    pre[r] = std::tanh(pre[r]);
  }
  const T* i = pre.data() + kInputGate * d;
  const T* f = pre.data() + kForgetGate * d;
  const T* o = pre.data() + kOutputGate * d;
  const T* g = pre.data() + kCellCandidate * d;
  for (std::size_t k = 0; k < d; ++k) {
    const T c = i[k] * g[k] + f[k] * prev.c[k];
    cache.out.c[k] = c;
    cache.tanh_c[k] = std::tanh(c);
    cache.out.h[k] = o[k] * cache.tanh_c[k];
  }
  return cache;
}

template <typename T>
CellState<T> lstm_step(const LstmWeights<T>& w, const Tensor<T>& x,
                       const CellState<T>& prev) {
  return lstm_forward(w, x, prev).out;
}

template <typename T>
void lstm_backward(const LstmWeights<T>& w, const LstmCache<T>& cache,
                   const Tensor<T>& dh, const Tensor<T>& dc,
                   LstmWeights<T>& grad, Tensor<T>* dx, Tensor<T>* dh_prev,
                   Tensor<T>* dc_prev) {
  const std::size_t d = w.hidden();
  const T* gates = cache.gates.values().data();
  const T* i = gates + kInputGate * d;
  const T* f = gates + kForgetGate * d;
  const T* o = gates + kOutputGate * d;
  const T* g = gates + kCellCandidate * d;
  Tensor<T> dpre(kLstmGates * d, 1);
  if (dc_prev) *dc_prev = Tensor<T>(d, 1);
  for (std::size_t k = 0; k < d; ++k) {
    const T tc = cache.tanh_c[k];
    const T dct = dc[k] + dh[k] * o[k] * (T(1) - tc * tc);
    dpre[kInputGate * d + k] = dct * g[k] * i[k] * (T(1) - i[k]);
    dpre[kForgetGate * d + k] = dct * cache.prev.c[k] * f[k] * (T(1) - f[k]);
    dpre[kOutputGate * d + k] = dh[k] * tc * o[k] * (T(1) - o[k]);
    dpre[kCellCandidate * d + k] = dct * i[k] * (T(1) - g[k] * g[k]);
    if (dc_prev) (*dc_prev)[k] = dct * f[k];
  }
  kernels::ger<T>(grad.W.values(), grad.W.rows(), grad.W.cols(), T(1),
                  dpre.values(), cache.x.values());
  kernels::ger<T>(grad.U.values(), grad.U.rows(), grad.U.cols(), T(1),
                  dpre.values(), cache.prev.h.values());
  add_into(grad.b, dpre);
  if (dx) {
    *dx = Tensor<T>(w.input(), 1);
    kernels::gemv_t<T>(w.W.values(), w.W.rows(), w.W.cols(), dpre.values(),
                       dx->values(), false);
  }
  if (dh_prev) {
    *dh_prev = Tensor<T>(d, 1);
    kernels::gemv_t<T>(w.U.values(), w.U.rows(), w.U.cols(), dpre.values(),
                       dh_prev->values(), false);
  }
}

template <typename T>
TreeLstmCache<T> treelstm_forward(const TreeLstmWeights<T>& w,
                                  const CellState<T>& left,
                                  const CellState<T>& right) {
  const std::size_t d = w.hidden();
  require_rows(left.h, d, "tree-lstm left h");
  require_rows(left.c, d, "tree-lstm left c");
  require_rows(right.h, d, "tree-lstm right h");
  require_rows(right.c, d, "tree-lstm right c");

  TreeLstmCache<T> cache{left, right, w.b, Tensor<T>(d, 1),
                         CellState<T>::zeros(d)};
  auto pre = cache.gates.values();
  kernels::gemv<T>(w.U_left.values(), w.U_left.rows(), w.U_left.cols(),
                   left.h.values(), pre, true);
  kernels::gemv<T>(w.U_right.values(), w.U_right.rows(), w.U_right.cols(),
                   right.h.values(), pre, true);
  for (std::size_t r = 0; r < kTreeCandidate * d; ++r) pre[r] = logistic(pre[r]);
  for (std::size_t r = kTreeCandidate * d; r < kTreeGates * d; ++r) {
    pre[r] = std::tanh(pre[r]);
  }
  const T* i = pre.data() + kTreeInput * d;
  const T* fl = pre.data() + kTreeForgetLeft * d;
  const T* fr = pre.data() + kTreeForgetRight * d;
  const T* o = pre.data() + kTreeOutput * d;
  const T* g = pre.data() + kTreeCandidate * d;
  for (std::size_t k = 0; k < d; ++k) {
    const T c = i[k] * g[k] + fl[k] * left.c[k] + fr[k] * right.c[k];
    cache.out.c[k] = c;
    cache.tanh_c[k] = std::tanh(c);
    cache.out.h[k] = o[k] * cache.tanh_c[k];
  }
  return cache;
}

template <typename T>
CellState<T> treelstm_combine(const TreeLstmWeights<T>& w,
                              const CellState<T>& left,
                              const CellState<T>& right) {
  return treelstm_forward(w, left, right).out;
}

template <typename T>
void treelstm_backward(const TreeLstmWeights<T>& w,
                       const TreeLstmCache<T>& cache, const Tensor<T>& dh,
                       const Tensor<T>& dc, TreeLstmWeights<T>& grad,
                       CellState<T>* dleft, CellState<T>* dright) {
  const std::size_t d = w.hidden();
  const T* gates = cache.gates.values().data();
  const T* i = gates + kTreeInput * d;
  const T* fl = gates + kTreeForgetLeft * d;
  const T* fr = gates + kTreeForgetRight * d;
  const T* o = gates + kTreeOutput * d;
  const T* g = gates + kTreeCandidate * d;
  Tensor<T> dpre(kTreeGates * d, 1);
  Tensor<T> dcl(d, 1), dcr(d, 1);
  for (std::size_t k = 0; k < d; ++k) {
    const T tc = cache.tanh_c[k];
    const T dct = dc[k] + dh[k] * o[k] * (T(1) - tc * tc);
    dpre[kTreeInput * d + k] = dct * g[k] * i[k] * (T(1) - i[k]);
    dpre[kTreeForgetLeft * d + k] =
        dct * cache.left.c[k] * fl[k] * (T(1) - fl[k]);
    dpre[kTreeForgetRight * d + k] =
        dct * cache.right.c[k] * fr[k] * (T(1) - fr[k]);
    dpre[kTreeOutput * d + k] = dh[k] * tc * o[k] * (T(1) - o[k]);
    dpre[kTreeCandidate * d + k] = dct * i[k] * (T(1) - g[k] * g[k]);
    dcl[k] = dct * fl[k];
    dcr[k] = dct * fr[k];
  }
  kernels::ger<T>(grad.U_left.values(), grad.U_left.rows(),
                  grad.U_left.cols(), T(1), dpre.values(),
                  cache.left.h.values());
  kernels::ger<T>(grad.U_right.values(), grad.U_right.rows(),
                  grad.U_right.cols(), T(1), dpre.values(),
                  cache.right.h.values());
  add_into(grad.b, dpre);
  if (dleft) {
    dleft->h = Tensor<T>(d, 1);
    kernels::gemv_t<T>(w.U_left.values(), w.U_left.rows(), w.U_left.cols(),
                       dpre.values(), dleft->h.values(), false);
    dleft->c = std::move(dcl);
  }
  if (dright) {
    dright->h = Tensor<T>(d, 1);
    kernels::gemv_t<T>(w.U_right.values(), w.U_right.rows(),
                       w.U_right.cols(), dpre.values(), dright->h.values(),
                       false);
    dright->c = std::move(dcr);
  }
}

template <typename T>
CellState<T> EncoderOutput<T>::root() const {
  if (fallback) return CellState<T>::zeros(hidden());
  if (phrases.empty()) return sequential.front();
  return phrases.back();
}

template <typename T>
EncoderGradients<T> EncoderGradients<T>::zeros_like(const EncoderOutput<T>& enc) {
  const std::size_t d = enc.hidden();
  EncoderGradients g;
  g.sequential.assign(enc.sequential.size(), CellState<T>::zeros(d));
  g.phrases.assign(enc.phrases.size(), CellState<T>::zeros(d));
  return g;
}

template <typename T>
void EncoderGradients<T>::add_root(const EncoderOutput<T>& enc,
                                   const CellState<T>& d) {
  if (enc.fallback) return;
  CellState<T>& dst = enc.phrases.empty() ? sequential.front() : phrases.back();
  add_into(dst.h, d.h);
  add_into(dst.c, d.c);
}

template <typename T>
std::vector<CellState<T>> encode_sequence(std::span<const TokenId> ids,
                                          const ModelParams<T>& params,
                                          bool context_free,
                                          std::vector<LstmCache<T>>* trace) {
  if (ids.empty()) throw std::invalid_argument("encode_sequence: empty input");
  const std::size_t d = params.dims.hidden, e = params.dims.embed;
  std::vector<CellState<T>> states;
  states.reserve(ids.size());
  if (trace) {
    trace->clear();
    trace->reserve(ids.size());
  }
  CellState<T> prev = CellState<T>::zeros(d);
  const CellState<T> zero = prev;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.dims.source_vocab) {
      throw std::out_of_range("source id " + std::to_string(id) +
                              " outside vocab of size " +
                              std::to_string(params.dims.source_vocab));
    }
    auto row = params.source_embed.row(id);
    Tensor<T> x(e, 1, std::vector<T>(row.begin(), row.end()));
    auto cache = lstm_forward(params.encoder, x, context_free ? zero : prev);
    prev = cache.out;
    states.push_back(cache.out);
    if (trace) trace->push_back(std::move(cache));
  }
  return states;
}

template <typename T>
std::vector<CellState<T>> encode_tree(const BinaryTree& tree,
                                      std::span<const CellState<T>> sequential,
                                      const TreeLstmWeights<T>& weights,
                                      std::vector<TreeLstmCache<T>>* trace) {
  if (tree.leaf_count() != sequential.size()) {
    throw std::invalid_argument(
        "encode_tree: tree has " + std::to_string(tree.leaf_count()) +
        " leaves but the sentence has " + std::to_string(sequential.size()) +
        " tokens");
  }
  std::vector<CellState<T>> phrases;
  phrases.reserve(tree.phrase_count());
  if (trace) {
    trace->clear();
    trace->reserve(tree.phrase_count());
  }
  auto child = [&](TreeChild c) -> const CellState<T>& {
    return c.is_leaf ? sequential[c.index] : phrases[c.index];
  };
  for (const PhraseNode& node : tree.phrases()) {
    auto cache = treelstm_forward(weights, child(node.left), child(node.right));
    phrases.push_back(cache.out);
    if (trace) trace->push_back(std::move(cache));
  }
  return phrases;
}

template <typename T>
EncoderOutput<T> encode(const SentencePair& pair, const ModelParams<T>& params,
                        EncoderKind kind, EncoderTrace<T>* trace) {
  EncoderOutput<T> out;
  out.sequential =
      encode_sequence<T>(pair.source, params, kind == EncoderKind::kTreeNoLeafLstm,
                         trace ? &trace->sequential : nullptr);
  const bool use_tree = kind != EncoderKind::kSequential && pair.tree.has_value();
  if (!use_tree) {
    out.fallback = true;
    if (trace) trace->phrases.clear();
    return out;
  }
  const std::size_t n = pair.source_length();
  out.phrases = encode_tree<T>(
      *pair.tree, std::span<const CellState<T>>(out.sequential).first(n),
      params.tree, trace ? &trace->phrases : nullptr);
  for (const PhraseNode& node : pair.tree->phrases()) {
    out.phrase_spans.emplace_back(node.begin, node.end);
  }
  return out;
}

template <typename T>
void encode_backward(const SentencePair& pair, const ModelParams<T>& params,
                     EncoderKind kind, const EncoderOutput<T>& enc,
                     const EncoderTrace<T>& trace, EncoderGradients<T> dout,
                     ModelParams<T>& grads) {
  const std::size_t d = params.dims.hidden;
  if (!enc.fallback) {
    const auto& nodes = pair.tree->phrases();
    CellState<T> dl, dr;
    for (std::size_t k = nodes.size(); k-- > 0;) {
      treelstm_backward(params.tree, trace.phrases[k], dout.phrases[k].h,
                        dout.phrases[k].c, grads.tree, &dl, &dr);
      auto route = [&](TreeChild c, const CellState<T>& g) {
        CellState<T>& dst =
            c.is_leaf ? dout.sequential[c.index] : dout.phrases[c.index];
        add_into(dst.h, g.h);
        add_into(dst.c, g.c);
      };
      route(nodes[k].left, dl);
      route(nodes[k].right, dr);
    }
  }

  const bool context_free = kind == EncoderKind::kTreeNoLeafLstm;
  Tensor<T> carry_h(d, 1), carry_c(d, 1), dx, dh_prev, dc_prev;
  for (std::size_t t = trace.sequential.size(); t-- > 0;) {
    Tensor<T>& dh = dout.sequential[t].h;
    Tensor<T>& dc = dout.sequential[t].c;
    if (!context_free) {
      add_into(dh, carry_h);
      add_into(dc, carry_c);
    }
    const bool need_prev = !context_free && t > 0;
    lstm_backward(params.encoder, trace.sequential[t], dh, dc, grads.encoder,
                  &dx, need_prev ? &dh_prev : nullptr,
                  need_prev ? &dc_prev : nullptr);
    auto row = grads.source_embed.row(pair.source[t]);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += dx[k];
    if (need_prev) {
      carry_h = std::move(dh_prev);
      carry_c = std::move(dc_prev);
    }
  }
}

#define T2S_INSTANTIATE_ENCODER(T)                                            \
  template LstmCache<T> lstm_forward(const LstmWeights<T>&, const Tensor<T>&, \
                                     const CellState<T>&);                    \
  template CellState<T> lstm_step(const LstmWeights<T>&, const Tensor<T>&,    \
                                  const CellState<T>&);                       \
  template void lstm_backward(const LstmWeights<T>&, const LstmCache<T>&,     \
                              const Tensor<T>&, const Tensor<T>&,             \
                              LstmWeights<T>&, Tensor<T>*, Tensor<T>*,        \
                              Tensor<T>*);                                    \
  template TreeLstmCache<T> treelstm_forward(                                 \
      const TreeLstmWeights<T>&, const CellState<T>&, const CellState<T>&);   \
  template CellState<T> treelstm_combine(                                     \
      const TreeLstmWeights<T>&, const CellState<T>&, const CellState<T>&);   \
  template void treelstm_backward(const TreeLstmWeights<T>&,                  \
                                  const TreeLstmCache<T>&, const Tensor<T>&,  \
                                  const Tensor<T>&, TreeLstmWeights<T>&,      \
                                  CellState<T>*, CellState<T>*);              \
  template struct EncoderOutput<T>;                                           \
  template struct EncoderGradients<T>;                                        \
  template std::vector<CellState<T>> encode_sequence(                         \
      std::span<const TokenId>, const ModelParams<T>&, bool,                  \
      std::vector<LstmCache<T>>*);                                            \
  template std::vector<CellState<T>> encode_tree(                             \
      const BinaryTree&, std::span<const CellState<T>>,                       \
      const TreeLstmWeights<T>&, std::vector<TreeLstmCache<T>>*);             \
  template EncoderOutput<T> encode(const SentencePair&, const ModelParams<T>&, \
                                   EncoderKind, EncoderTrace<T>*);            \
  template void encode_backward(const SentencePair&, const ModelParams<T>&,   \
                                EncoderKind, const EncoderOutput<T>&,         \
                                const EncoderTrace<T>&, EncoderGradients<T>,  \
                                ModelParams<T>&);

T2S_INSTANTIATE_ENCODER(float)
T2S_INSTANTIATE_ENCODER(double)
T2S_INSTANTIATE_ENCODER(long double)

}  // namespace t2s
