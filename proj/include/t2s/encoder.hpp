#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "t2s/corpus.hpp"
#include "t2s/params.hpp"
#include "t2s/tree.hpp"

namespace t2s {

template <typename T>
struct CellState {
  Tensor<T> h;
  Tensor<T> c;
  static CellState zeros(std::size_t d) { return {Tensor<T>(d, 1), Tensor<T>(d, 1)}; }
};

/// Activations kept from an LSTM step for its backward pass.
template <typename T>
struct LstmCache {
  Tensor<T> x;
  CellState<T> prev;
  Tensor<T> gates;  // post-activation i, f, o, c~ stacked
  Tensor<T> tanh_c;
  CellState<T> out;
};

template <typename T>
struct TreeLstmCache {
  CellState<T> left;
  CellState<T> right;
  Tensor<T> gates;  // post-activation i, f_l, f_r, o, c~ stacked
  Tensor<T> tanh_c;
  CellState<T> out;
};

template <typename T>
LstmCache<T> lstm_forward(const LstmWeights<T>& w, const Tensor<T>& x,
                          const CellState<T>& prev);
template <typename T>
CellState<T> lstm_step(const LstmWeights<T>& w, const Tensor<T>& x,
                       const CellState<T>& prev);
/// Accumulates parameter gradients into `grad`; writes (not accumulates)
/// dx, dh_prev, dc_prev when non-null.
template <typename T>
void lstm_backward(const LstmWeights<T>& w, const LstmCache<T>& cache,
                   const Tensor<T>& dh, const Tensor<T>& dc,
                   LstmWeights<T>& grad, Tensor<T>* dx, Tensor<T>* dh_prev,
                   Tensor<T>* dc_prev);

template <typename T>
TreeLstmCache<T> treelstm_forward(const TreeLstmWeights<T>& w,
                                  const CellState<T>& left,
                                  const CellState<T>& right);
template <typename T>
CellState<T> treelstm_combine(const TreeLstmWeights<T>& w,
                              const CellState<T>& left,
                              const CellState<T>& right);
template <typename T>
void treelstm_backward(const TreeLstmWeights<T>& w,
                       const TreeLstmCache<T>& cache, const Tensor<T>& dh,
                       const Tensor<T>& dc, TreeLstmWeights<T>& grad,
                       CellState<T>* dleft, CellState<T>* dright);

enum class EncoderKind {
  kTree,            // sequential LSTM leaves + Tree-LSTM phrases
  kSequential,      // sequential only; always the no-tree path
  kTreeNoLeafLstm,  // leaves are LSTM steps from the zero state (no context)
};

template <typename T>
struct EncoderOutput {
  /// One state per source id including the final eos.
  std::vector<CellState<T>> sequential;
  /// Internal nodes bottom-up, root last.
  std::vector<CellState<T>> phrases;
  /// Leaf span [begin, end) of each phrase.
  std::vector<std::pair<std::size_t, std::size_t>> phrase_spans;
  bool fallback = false;

  std::size_t hidden() const { return sequential.front().h.rows(); }
  /// Tree root; zeros on fallback; the leaf itself for one-token trees.
  CellState<T> root() const;
  /// Attention candidates: sequential states then phrase states.
  std::size_t candidate_count() const { return sequential.size() + phrases.size(); }
  const Tensor<T>& candidate(std::size_t k) const {
    return k < sequential.size() ? sequential[k].h
                                 : phrases[k - sequential.size()].h;
  }
};

template <typename T>
struct EncoderTrace {
  std::vector<LstmCache<T>> sequential;
  std::vector<TreeLstmCache<T>> phrases;
};

/// Gradients with respect to encoder outputs, shaped like EncoderOutput.
template <typename T>
struct EncoderGradients {
  std::vector<CellState<T>> sequential;
  std::vector<CellState<T>> phrases;

  static EncoderGradients zeros_like(const EncoderOutput<T>& enc);
  void add_root(const EncoderOutput<T>& enc, const CellState<T>& d);
};

/// h_0 = c_0 = 0. With context_free every step starts from the zero state.
template <typename T>
std::vector<CellState<T>> encode_sequence(std::span<const TokenId> ids,
                                          const ModelParams<T>& params,
                                          bool context_free = false,
                                          std::vector<LstmCache<T>>* trace = nullptr);

/// Post-order composition; leaf k takes sequential state k as is.
template <typename T>
std::vector<CellState<T>> encode_tree(const BinaryTree& tree,
                                      std::span<const CellState<T>> sequential,
                                      const TreeLstmWeights<T>& weights,
                                      std::vector<TreeLstmCache<T>>* trace = nullptr);

template <typename T>
EncoderOutput<T> encode(const SentencePair& pair, const ModelParams<T>& params,
                        EncoderKind kind = EncoderKind::kTree,
                        EncoderTrace<T>* trace = nullptr);

/// Backpropagates output gradients through tree and sequence into `grads`.
template <typename T>
void encode_backward(const SentencePair& pair, const ModelParams<T>& params,
                     EncoderKind kind, const EncoderOutput<T>& enc,
                     const EncoderTrace<T>& trace, EncoderGradients<T> dout,
                     ModelParams<T>& grads);

}  // namespace t2s
