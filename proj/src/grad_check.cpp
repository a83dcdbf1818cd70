#include "t2s/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "t2s/toy.hpp"
#include "t2s/trainer.hpp"

namespace t2s {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradient_check(std::span<Tensor<double>* const> params,
                               std::span<Tensor<double>* const> analytic,
                               std::span<const std::string> names,
                               const std::function<double()>& loss,
                               double eps) {
  if (eps < 1e-6 || eps > 1e-4) {
    throw std::invalid_argument("gradient_check: eps must lie in [1e-6, 1e-4]");
  }
  if (params.size() != analytic.size() || params.size() != names.size()) {
    throw std::invalid_argument("gradient_check: parameter/gradient mismatch");
  }
  GradCheckResult result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor<double>& p = *params[t];
    require_same_shape(p, *analytic[t], "gradient_check");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = loss();
      p[i] = saved - eps;
      const double down = loss();
      p[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::domain_error("gradient_check: non-finite loss at " +
                                names[t] + "[" + std::to_string(i) + "]");
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double a = (*analytic[t])[i];
      const double err = relative_error(a, numeric);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_entry = names[t] + "[" + std::to_string(i) + "]";
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult gradient_check(const ModelLossFn& loss,
                               const ModelParams<double>& params, double eps) {
  ModelParams<double> work = params;
  ModelParams<double> grads = ModelParams<double>::zeros(params.dims);
  const double base = loss(work, &grads);
  if (!std::isfinite(base)) {
    throw std::domain_error("gradient_check: non-finite loss");
  }
  std::vector<Tensor<double>*> p, g;
  std::vector<std::string> names;
  for (auto& n : work.named()) {
    p.push_back(n.tensor);
    names.push_back(n.name);
  }
  g = grads.tensors();
  return gradient_check(p, g, names, [&] { return loss(work, nullptr); }, eps);
}

GradCheckResult pipeline_gradient_check(const PipelineCheck& check) {
  Rng rng(check.seed);
  const ModelDims dims{check.vocab, check.vocab, check.dim, check.dim};
  auto params = init_params<double>(dims, 1.0, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Random biases and output layer so no gradient is structurally tiny.
  for (auto* t : {&params.encoder.b, &params.decoder.b, &params.tree.b,
                  &params.init_tree.b, &params.b_combine, &params.b_out}) {
    for (auto& v : t->values()) v += u(rng);
  }
  for (auto& v : params.W_out.values()) v = u(rng);

  std::uniform_int_distribution<std::size_t> src_len(2, check.max_source);
  std::uniform_int_distribution<std::size_t> tgt_len(1, check.max_target);
  std::uniform_int_distribution<TokenId> word(2, static_cast<TokenId>(check.vocab) - 1);
  SentencePair pair;
  pair.source.resize(src_len(rng));
  for (auto& w : pair.source) w = word(rng);
  pair.target.resize(tgt_len(rng));
  for (auto& w : pair.target) w = word(rng);
  if (check.with_tree) pair.tree = random_binary_tree(pair.source.size(), rng);
  pair.source.push_back(Vocab::kEos);
  pair.target.push_back(Vocab::kEos);

  std::vector<double> counts(check.vocab);
  for (auto& c : counts) c = 1.0 + std::floor(5.0 * (u(rng) + 1.0));
  const UnigramSampler sampler(counts, 0.4);
  LossOptions options;
  options.mode = check.loss;
  options.encoder = check.encoder;
  options.negatives = check.negatives;
  options.sampler = &sampler;
  const std::uint64_t sample_seed = rng();

  auto analytic = ModelParams<double>::zeros(dims);
  {
    Rng samples(sample_seed);
    pair_loss(params, pair, options, &samples, &analytic);
  }
  // Differences are taken in extended precision so that roundoff in the
  // loss does not swamp entries near the 1e-8 floor.
  auto wide = params.cast<long double>();
  const auto loss = [&] {
    Rng samples(sample_seed);  // same negatives at every evaluation
    return pair_loss(wide, pair, options, &samples);
  };
  const long double eps = check.eps;
  GradCheckResult result;
  auto wide_named = wide.named();
  const auto analytic_named = std::as_const(analytic).named();
  for (std::size_t t = 0; t < wide_named.size(); ++t) {
    auto& p = *wide_named[t].tensor;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const long double saved = p[i];
      p[i] = saved + eps;
      const long double up = loss();
      p[i] = saved - eps;
      const long double down = loss();
      p[i] = saved;
      const double numeric = static_cast<double>((up - down) / (2 * eps));
      const double a = (*analytic_named[t].tensor)[i];
      const double err = relative_error(a, numeric);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_entry = wide_named[t].name + "[" + std::to_string(i) + "]";
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace t2s
