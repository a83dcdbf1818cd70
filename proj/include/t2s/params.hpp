#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "t2s/tensor.hpp"

namespace t2s {

struct ModelDims {
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::size_t embed = 0;   // e
  std::size_t hidden = 0;  // d
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Row blocks of the stacked LSTM pre-activation (each d rows).
enum LstmGate : std::size_t { kInputGate = 0, kForgetGate, kOutputGate, kCellCandidate, kLstmGates };
/// Row blocks of the stacked Tree-LSTM pre-activation.
enum TreeGate : std::size_t {
  kTreeInput = 0,
  kTreeForgetLeft,
  kTreeForgetRight,
  kTreeOutput,
  kTreeCandidate,
  kTreeGates
};

/// Gates stacked along rows: W is 4d x input, U is 4d x d, b is 4d.
template <typename T>
struct LstmWeights {
  Tensor<T> W;
  Tensor<T> U;
  Tensor<T> b;
  std::size_t hidden() const { return U.cols(); }
  std::size_t input() const { return W.cols(); }
  friend bool operator==(const LstmWeights&, const LstmWeights&) = default;
};

/// Gates stacked along rows: U_left and U_right are 5d x d, b is 5d.
template <typename T>
struct TreeLstmWeights {
  Tensor<T> U_left;
  Tensor<T> U_right;
  Tensor<T> b;
  std::size_t hidden() const { return U_left.cols(); }
  friend bool operator==(const TreeLstmWeights&, const TreeLstmWeights&) = default;
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
struct ConstNamedTensor {
  std::string name;
  const Tensor<T>* tensor;
};

/// Every trainable parameter. Also used, zero-initialized, as the gradient
/// store: each gradient has the shape of its parameter.
template <typename T>
struct ModelParams {
  ModelDims dims;
  Tensor<T> source_embed;  // |V_src| x e, one row per token
  Tensor<T> target_embed;  // |V_tgt| x e
  LstmWeights<T> encoder;  // input e
  TreeLstmWeights<T> tree;
  TreeLstmWeights<T> init_tree;  // decoder initialization
  LstmWeights<T> decoder;        // input e + d (input feeding)
  Tensor<T> W_combine;           // d x 2d
  Tensor<T> b_combine;           // d
  Tensor<T> W_out;               // |V_tgt| x d
  Tensor<T> b_out;               // |V_tgt|

  static ModelParams zeros(const ModelDims& dims);

  /// Fixed-order view over every tensor.
  std::vector<NamedTensor<T>> named();
  std::vector<ConstNamedTensor<T>> named() const;
  std::vector<Tensor<T>*> tensors();

  void set_zero();
  std::size_t scalar_count() const;
  /// this += scale * other (same dims).
  void add_scaled(const ModelParams& other, T scale);

  template <typename U>
  ModelParams<U> cast() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

template <typename T>
using GradientStore = ModelParams<T>;

}  // namespace t2s
