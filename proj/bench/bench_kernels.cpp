#include <benchmark/benchmark.h>

#include <omp.h>
#include <random>
#include <vector>

#include "t2s/kernels.hpp"
#include "t2s/toy.hpp"
#include "t2s/trainer.hpp"

namespace k = t2s::kernels;

namespace {

std::vector<float> random_floats(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// rows x cols with rows = 4 * cols, as in an LSTM gate block.
struct Operands {
  std::size_t rows, cols;
  std::vector<float> W, x, xt, y;
  explicit Operands(std::size_t d)
      : rows(4 * d), cols(d), W(random_floats(rows * cols, 1)), x(random_floats(cols, 2)),
        xt(random_floats(rows, 3)), y(rows) {}
};

template <auto Kernel>
void BM_gemv(benchmark::State& state) {
  Operands o(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Kernel(std::span<const float>(o.W), o.rows, o.cols, std::span<const float>(o.x),
           std::span<float>(o.y), false);
    benchmark::DoNotOptimize(o.y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(o.W.size()));
}

template <auto Kernel>
void BM_gemv_t(benchmark::State& state) {
  Operands o(static_cast<std::size_t>(state.range(0)));
  std::vector<float> out(o.cols);
  for (auto _ : state) {
    Kernel(std::span<const float>(o.W), o.rows, o.cols, std::span<const float>(o.xt),
           std::span<float>(out), false);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(o.W.size()));
}

template <auto Kernel>
void BM_ger(benchmark::State& state) {
  Operands o(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Kernel(std::span<float>(o.W), o.rows, o.cols, 1e-6f, std::span<const float>(o.xt),
           std::span<const float>(o.x));
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(o.W.size()));
}

#define KERNEL_BENCH(name, fn)                                              \
  BENCHMARK(name<&k::serial::fn<float>>)->Name(#fn "/serial")->RangeMultiplier(2)->Range(64, 512); \
  BENCHMARK(name<&k::omp::fn<float>>)->Name(#fn "/omp")->RangeMultiplier(2)->Range(64, 512);

KERNEL_BENCH(BM_gemv, gemv)
KERNEL_BENCH(BM_gemv_t, gemv_t)
KERNEL_BENCH(BM_ger, ger)

// One minibatch gradient + update, pairs processed on 1 thread vs all.
void BM_minibatch(benchmark::State& state) {
  const int threads = state.range(0) == 0 ? 1 : omp_get_num_procs();
  const auto toy = t2s::generate_toy_corpus(32, 50, t2s::ToyTask::kCopy, 1);
  const auto vocab = t2s::build_vocab(toy.source, 1);
  const auto pairs = t2s::encode_pairs(toy.pairs(), vocab, vocab);
  t2s::TrainConfig c;
  c.embed = c.hidden = 128;
  c.negatives = 10;
  c.batch_size = pairs.size();
  c.learning_rate = 0.0;
  t2s::Rng rng(1);
  t2s::Trainer<float> trainer(
      c, t2s::init_params<float>({vocab.size(), vocab.size(), 128, 128}, 0.1, rng),
      t2s::UnigramSampler(t2s::unigram_counts(pairs, vocab.size()), c.beta));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_minibatch(pairs, seed++));
  omp_set_num_threads(saved);
  state.SetLabel(std::to_string(threads) + " thread(s)");
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pairs.size()));
}
BENCHMARK(BM_minibatch)->Arg(0)->Name("minibatch/serial");
BENCHMARK(BM_minibatch)->Arg(1)->Name("minibatch/parallel");

}  // namespace

BENCHMARK_MAIN();
