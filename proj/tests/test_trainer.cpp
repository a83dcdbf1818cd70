#include <doctest.h>

#include <cmath>
#include <omp.h>

#include "t2s/config.hpp"
#include "t2s/toy.hpp"
#include "t2s/trainer.hpp"

using namespace t2s;

namespace {

struct ToyData {
  Vocab vocab;
  std::vector<SentencePair> train, dev;
};

ToyData toy_data(std::size_t n_train, std::size_t n_dev, ToyTask task = ToyTask::kCopy,
                 std::size_t words = 12) {
  const auto tr = generate_toy_corpus(n_train, words, task, 1);
  const auto dv = generate_toy_corpus(n_dev, words, task, 2);
  ToyData d;
  d.vocab = build_vocab(tr.source, 1);
  d.train = encode_pairs(tr.pairs(), d.vocab, d.vocab);
  d.dev = encode_pairs(dv.pairs(), d.vocab, d.vocab);
  return d;
}

TrainConfig small_config() {
  TrainConfig c;
  c.embed = c.hidden = 16;
  c.negatives = 5;
  c.batch_size = 8;
  c.max_epochs = 3;
  return c;
}

template <typename T>
Trainer<T> make_trainer(const TrainConfig& c, const ToyData& d) {
  Rng rng(c.seed);
  auto p = init_params<T>(ModelDims{d.vocab.size(), d.vocab.size(), c.embed, c.hidden},
                          c.init_range, rng);
  return Trainer<T>(c, std::move(p),
                    UnigramSampler(unigram_counts(d.train, d.vocab.size()), c.beta));
}

}  // namespace

TEST_CASE("init_params") {
  Rng a(3), b(3);
  const ModelDims dims{20, 30, 6, 5};
  const auto p = init_params<double>(dims, 0.1, a);
  const auto q = init_params<double>(dims, 0.1, b);
  CHECK(p == q);
  const std::size_t d = 5;
  for (std::size_t k = 0; k < d; ++k) {
    CHECK(p.encoder.b[kForgetGate * d + k] == 1.0);
    CHECK(p.decoder.b[kForgetGate * d + k] == 1.0);
    for (const auto* t : {&p.tree, &p.init_tree}) {
      CHECK(t->b[kTreeForgetLeft * d + k] == 1.0);
      CHECK(t->b[kTreeForgetRight * d + k] == 1.0);
      CHECK(t->b[kTreeInput * d + k] == 0.0);
      CHECK(t->b[kTreeCandidate * d + k] == 0.0);
    }
    CHECK(p.encoder.b[kInputGate * d + k] == 0.0);
    CHECK(p.decoder.b[kOutputGate * d + k] == 0.0);
    CHECK(p.b_combine[k] == 0.0);
  }
  for (double v : p.W_out.values()) CHECK(v == 0.0);
  for (double v : p.b_out.values()) CHECK(v == 0.0);
  double max_w = 0;
  for (const auto& n : p.named()) {
    if (n.name.ends_with(".b") || n.name == "output.W") continue;
    for (double v : n.tensor->values()) max_w = std::max(max_w, std::abs(v));
  }
  CHECK(max_w <= 0.1);
  CHECK(max_w > 0.05);
}

TEST_CASE("learning-rate schedule") {
  LearningRateSchedule s(1.0);
  CHECK_FALSE(s.observe(5.0));
  CHECK_FALSE(s.observe(4.0));
  CHECK(s.observe(4.5));
  CHECK(s.rate() == 0.5);
  LearningRateSchedule m(1.0);
  for (double v : {5.0, 4.0, 3.0, 2.5, 2.5}) CHECK_FALSE(m.observe(v));
  CHECK(m.rate() == 1.0);
}

TEST_CASE("config validation and key=value round trip") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.clip = 0;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.hidden = 0;
  CHECK_THROWS(c.validate());

  TrainConfig d;
  d.loss = LossMode::kSoftmax;
  d.encoder = EncoderKind::kTreeNoLeafLstm;
  d.beta = 0.123456789;
  d.reverse_source = true;
  TrainConfig back;
  for (const auto& [k, v] : config_items(d)) CHECK(apply_config_value(back, k, v));
  CHECK(back == d);
  CHECK_FALSE(apply_config_value(back, "nonsense", "1"));
  CHECK_THROWS(apply_config_value(back, "hidden", "abc"));
  CHECK_THROWS(apply_config_value(back, "loss", "nce"));
}

TEST_CASE("train_minibatch basics") {
  const auto data = toy_data(40, 10);
  SUBCASE("lr = 0 leaves params unchanged") {
    auto c = small_config();
    c.learning_rate = 0.0;
    auto t = make_trainer<double>(c, data);
    const auto before = t.params();
    const auto stats = t.train_minibatch(std::span(data.train).first(1), 5);
    CHECK(std::isfinite(stats.mean_loss));
    CHECK(t.params().W_out == before.W_out);
    CHECK(t.params().encoder.W == before.encoder.W);
  }
  SUBCASE("small step decreases the pair's loss") {
    for (LossMode mode : {LossMode::kSoftmax, LossMode::kBlackOut}) {
      auto c = small_config();
      c.learning_rate = 1e-3;
      c.loss = mode;
      c.init_range = 0.5;
      auto t = make_trainer<double>(c, data);
      const auto one = std::span(data.train).first(1);
      LossOptions o;
      const double before = pair_loss(t.params(), one[0], o);
      t.train_minibatch(one, 5);
      const double after = pair_loss(t.params(), one[0], o);
      CHECK(after < before);
    }
  }
  SUBCASE("clipping bounds every step") {
    auto c = small_config();
    c.learning_rate = 1.0;
    c.clip = 0.5;
    auto t = make_trainer<double>(c, data);
    for (std::size_t b = 0; b < 5; ++b) {
      const auto s = t.train_minibatch(std::span(data.train).subspan(b * 8, 8), b);
      CHECK(s.clipped_norm <= 0.5 + 1e-6);
      CHECK(s.clipped_norm <= s.grad_norm + 1e-12);
    }
  }
  SUBCASE("non-finite loss aborts with the batch index") {
    auto c = small_config();
    auto t = make_trainer<double>(c, data);
    t.params().W_out[0] = std::nan("");
    t.params().b_out[Vocab::kEos] = std::nan("");
    try {
      t.train_minibatch(std::span(data.train).first(4), 1);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("batch 0") != std::string::npos);
      CHECK(msg.find("epoch 1") != std::string::npos);
    }
  }
  SUBCASE("empty batch") {
    auto t = make_trainer<double>(small_config(), data);
    CHECK_THROWS(t.train_minibatch(std::span<const SentencePair>{}, 1));
  }
}

TEST_CASE("training is reproducible and independent of the thread count") {
  const auto data = toy_data(48, 8);
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    auto t = make_trainer<double>(small_config(), data);
    auto h = t.run_training(data.train, data.dev);
    return std::pair{h, t.params()};
  };
  const int saved = omp_get_max_threads();
  const auto [h1, p1] = run(1);
  const auto [h2, p2] = run(1);
  const auto [h4, p4] = run(4);
  omp_set_num_threads(saved);
  REQUIRE(h1.size() == 3);
  for (std::size_t e = 0; e < h1.size(); ++e) {
    CHECK(h1[e].train_loss == h2[e].train_loss);
    CHECK(h1[e].dev_loss == h2[e].dev_loss);
    CHECK(h1[e].train_loss == h4[e].train_loss);
    CHECK(h1[e].dev_loss == h4[e].dev_loss);
  }
  CHECK(p1.W_out == p4.W_out);
  CHECK(p1.encoder.U == p4.encoder.U);
  CHECK(p1.tree.U_left == p4.tree.U_left);
}

TEST_CASE("dev loss at least halves within 10 epochs on a toy task") {
  const auto data = toy_data(600, 40, ToyTask::kCopy, 10);
  auto c = small_config();
  c.max_epochs = 10;
  c.batch_size = 8;
  c.embed = c.hidden = 32;
  auto t = make_trainer<float>(c, data);
  const double initial = evaluate_dev(t.params(), data.dev, c.encoder).mean_loss;
  const auto history = t.run_training(data.train, data.dev);
  double best = initial;
  for (const auto& r : history) best = std::min(best, r.dev_loss);
  INFO("initial " << initial << " best " << best);
  CHECK(best <= 0.5 * initial);
  CHECK(history.back().epoch == 10);
}
