#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "t2s/model.hpp"
#include "t2s/params.hpp"

namespace t2s {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_entry;  // tensor name and flat index
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// relative error |a - n| / max(|a|, |n|, 1e-8).
double relative_error(double analytic, double numeric);

/// Central differences over every scalar of `params`. `loss` is evaluated
/// with the parameters perturbed in place and restored afterwards.
GradCheckResult gradient_check(std::span<Tensor<double>* const> params,
                               std::span<Tensor<double>* const> analytic,
                               std::span<const std::string> names,
                               const std::function<double()>& loss,
                               double eps);

/// `loss(params, grads)` returns the loss and, when grads is non-null,
/// accumulates its analytic gradient.
using ModelLossFn = std::function<double(const ModelParams<double>&,
                                         ModelParams<double>*)>;

GradCheckResult gradient_check(const ModelLossFn& loss,
                               const ModelParams<double>& params, double eps);

/// A random small instance checked end to end through pair_loss.
struct PipelineCheck {
  bool with_tree = true;
  LossMode loss = LossMode::kBlackOut;
  EncoderKind encoder = EncoderKind::kTree;
  std::size_t dim = 8;         // d = e
  std::size_t vocab = 12;      // both sides
  std::size_t max_source = 6;  // n
  std::size_t max_target = 5;  // m
  std::size_t negatives = 3;   // K
  double eps = 1e-5;
  std::uint64_t seed = 7;
};

GradCheckResult pipeline_gradient_check(const PipelineCheck& check);

}  // namespace t2s
