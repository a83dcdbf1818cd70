#include "t2s/params.hpp"

#include <stdexcept>

namespace t2s {

namespace {

template <typename T>
LstmWeights<T> lstm_zeros(std::size_t input, std::size_t d) {
  return {Tensor<T>(kLstmGates * d, input), Tensor<T>(kLstmGates * d, d),
          Tensor<T>(kLstmGates * d, 1)};
}

template <typename T>
TreeLstmWeights<T> tree_zeros(std::size_t d) {
  return {Tensor<T>(kTreeGates * d, d), Tensor<T>(kTreeGates * d, d),
          Tensor<T>(kTreeGates * d, 1)};
}

template <typename U, typename T>
Tensor<U> cast_tensor(const Tensor<T>& t) {
  std::vector<U> data(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) data[i] = static_cast<U>(t[i]);
  return Tensor<U>(t.rows(), t.cols(), std::move(data));
}

}  // namespace

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelDims& dims) {
  if (dims.embed == 0 || dims.hidden == 0 || dims.source_vocab == 0 ||
      dims.target_vocab == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  const std::size_t e = dims.embed, d = dims.hidden;
  ModelParams p;
  p.dims = dims;
  p.source_embed = Tensor<T>(dims.source_vocab, e);
  p.target_embed = Tensor<T>(dims.target_vocab, e);
  p.encoder = lstm_zeros<T>(e, d);
  p.tree = tree_zeros<T>(d);
  p.init_tree = tree_zeros<T>(d);
  p.decoder = lstm_zeros<T>(e + d, d);
  p.W_combine = Tensor<T>(d, 2 * d);
  p.b_combine = Tensor<T>(d, 1);
  p.W_out = Tensor<T>(dims.target_vocab, d);
  p.b_out = Tensor<T>(dims.target_vocab, 1);
  return p;
}

template <typename T>
std::vector<NamedTensor<T>> ModelParams<T>::named() {
  return {
      {"source_embed", &source_embed},  {"target_embed", &target_embed},
      {"encoder.W", &encoder.W},        {"encoder.U", &encoder.U},
      {"encoder.b", &encoder.b},        {"tree.U_left", &tree.U_left},
      {"tree.U_right", &tree.U_right},  {"tree.b", &tree.b},
      {"init_tree.U_left", &init_tree.U_left},
      {"init_tree.U_right", &init_tree.U_right},
      {"init_tree.b", &init_tree.b},    {"decoder.W", &decoder.W},
      {"decoder.U", &decoder.U},        {"decoder.b", &decoder.b},
      {"combine.W", &W_combine},        {"combine.b", &b_combine},
      {"output.W", &W_out},             {"output.b", &b_out},
  };
}

template <typename T>
std::vector<ConstNamedTensor<T>> ModelParams<T>::named() const {
  auto mutable_view = const_cast<ModelParams*>(this)->named();
  std::vector<ConstNamedTensor<T>> out;
  out.reserve(mutable_view.size());
  for (auto& n : mutable_view) out.push_back({n.name, n.tensor});
  return out;
}

template <typename T>
std::vector<Tensor<T>*> ModelParams<T>::tensors() {
  std::vector<Tensor<T>*> out;
  for (auto& n : named()) out.push_back(n.tensor);
  return out;
}

template <typename T>
void ModelParams<T>::set_zero() {
  for (auto* t : tensors()) t->set_zero();
}

template <typename T>
std::size_t ModelParams<T>::scalar_count() const {
  std::size_t n = 0;
  for (auto* t : const_cast<ModelParams*>(this)->tensors()) n += t->size();
  return n;
}

template <typename T>
void ModelParams<T>::add_scaled(const ModelParams& other, T scale) {
  if (!(dims == other.dims)) {
    throw ShapeError("add_scaled: parameter dimensions differ");
  }
  auto mine = tensors();
  auto theirs = const_cast<ModelParams&>(other).tensors();
  for (std::size_t k = 0; k < mine.size(); ++k) {
    auto dst = mine[k]->values();
    auto src = theirs[k]->values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out = ModelParams<U>::zeros(dims);
  auto src = const_cast<ModelParams*>(this)->tensors();
  auto dst = out.tensors();
  for (std::size_t k = 0; k < src.size(); ++k) {
    *dst[k] = cast_tensor<U>(*src[k]);
  }
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template struct ModelParams<long double>;
template ModelParams<long double> ModelParams<double>::cast<long double>() const;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace t2s
