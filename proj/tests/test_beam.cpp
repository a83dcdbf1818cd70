#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "t2s/beam_search.hpp"
#include "t2s/toy.hpp"
#include "t2s/trainer.hpp"

using namespace t2s;

namespace {

struct Model {
  Vocab vocab;
  std::vector<SentencePair> pairs;
  ModelParams<double> params;
};

// Briefly trained on the reverse task so the distributions are neither
// uniform nor degenerate.
const Model& trained_model() {
  static const Model m = [] {
    Model out;
    const auto toy = generate_toy_corpus(200, 10, ToyTask::kReverse, 11);
    out.vocab = build_vocab(toy.source, 1);
    out.pairs = encode_pairs(toy.pairs(), out.vocab, out.vocab);
    TrainConfig c;
    c.embed = c.hidden = 16;
    c.batch_size = 8;
    c.max_epochs = 2;
    c.loss = LossMode::kSoftmax;
    Rng rng(c.seed);
    Trainer<double> t(c,
                      init_params<double>({out.vocab.size(), out.vocab.size(), 16, 16},
                                          c.init_range, rng),
                      UnigramSampler(unigram_counts(out.pairs, out.vocab.size()), c.beta));
    t.run_training(out.pairs, {});
    out.params = t.params();
    return out;
  }();
  return m;
}

// Sum of per-token log-probs of `tokens` + eos, re-scored step by step.
std::vector<double> rescore(const EncoderOutput<double>& enc,
                            const ModelParams<double>& params,
                            std::vector<TokenId> tokens, bool add_eos) {
  if (add_eos) tokens.push_back(Vocab::kEos);
  std::vector<double> cumulative;
  auto state = init_decoder(enc, params);
  TokenId prev = Vocab::kEos;
  double sum = 0.0;
  for (TokenId y : tokens) {
    auto step = decoder_step(prev, state, enc, params);
    sum += step.log_probs[y];
    cumulative.push_back(sum);
    state = step.state;
    prev = y;
  }
  return cumulative;
}

}  // namespace

TEST_CASE("beam width 1 equals greedy decoding") {
  const auto& m = trained_model();
  BeamOptions o;
  o.width = 1;
  o.max_length = 30;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto enc = encode(m.pairs[i], m.params);
    const auto b = beam_search(enc, m.params, m.pairs[i].source_length(), o);
    const auto g = greedy_decode(enc, m.params, 30);
    CHECK(b.tokens == g.tokens);
    CHECK(b.log_prob == doctest::Approx(g.log_prob).epsilon(1e-12));
  }
}

TEST_CASE("uniform length model keeps the simple-beam argmax") {
  const auto& m = trained_model();
  const auto uniform = LengthModel::uniform();
  BeamOptions simple;
  simple.width = 5;
  simple.max_length = 30;
  BeamOptions proposed = simple;
  proposed.length_model = &uniform;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto enc = encode(m.pairs[i], m.params);
    const auto a = beam_search(enc, m.params, m.pairs[i].source_length(), simple);
    const auto b = beam_search(enc, m.params, m.pairs[i].source_length(), proposed);
    CHECK(a.tokens == b.tokens);
    CHECK(b.score == doctest::Approx(a.score + std::log(0.01)).epsilon(1e-12));
  }
}

TEST_CASE("hypothesis invariants") {
  const auto& m = trained_model();
  LengthModel lengths = LengthModel::estimate(m.pairs, 1000);
  for (std::size_t width : {1u, 3u, 8u}) {
    for (const LengthModel* lm : {static_cast<const LengthModel*>(nullptr),
                                  static_cast<const LengthModel*>(&lengths)}) {
      BeamOptions o;
      o.width = width;
      o.max_length = 15;
      o.length_model = lm;
      o.record_attention = true;
      for (std::size_t i = 0; i < 20; ++i) {
        const auto& pair = m.pairs[i];
        const auto enc = encode(pair, m.params);
        const auto t = beam_search(enc, m.params, pair.source_length(), o);
        CHECK(t.tokens.size() <= 15);
        if (t.tokens.size() < 15) CHECK(t.terminated);
        for (TokenId y : t.tokens) CHECK(y != Vocab::kEos);

        const auto cum = rescore(enc, m.params, t.tokens, t.terminated);
        REQUIRE(!cum.empty());
        CHECK(cum.back() == doctest::Approx(t.log_prob).epsilon(1e-9));
        for (std::size_t k = 0; k < cum.size(); ++k) {
          CHECK(cum[k] <= 0.0);
          if (k > 0) CHECK(cum[k] <= cum[k - 1]);
        }
        const double L = lm ? lm->log_prob(pair.source_length(), t.tokens.size()) : 0.0;
        CHECK(t.score == doctest::Approx(t.log_prob + L).epsilon(1e-12));

        CHECK(t.attention.size() == cum.size());
        for (const auto& row : t.attention) {
          CHECK(row.size() == 2 * pair.source_length());
          double s = 0;
          for (double a : row) s += a;
          CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
        const auto again = beam_search(enc, m.params, pair.source_length(), o);
        CHECK(again.tokens == t.tokens);
        CHECK(again.score == t.score);
      }
    }
  }
}

TEST_CASE("unterminated output stops at the cap") {
  // Zero output weights with a huge bias on one word: eos is never chosen.
  const auto& m = trained_model();
  auto p = m.params;
  std::ranges::fill(p.W_out.values(), 0.0);
  std::ranges::fill(p.b_out.values(), 0.0);
  p.b_out[3] = 50.0;
  BeamOptions o;
  o.width = 3;
  o.max_length = 7;
  const auto enc = encode(m.pairs[0], p);
  const auto t = beam_search(enc, p, m.pairs[0].source_length(), o);
  CHECK(t.tokens == std::vector<TokenId>(7, 3));
  CHECK_FALSE(t.terminated);
  CHECK_THROWS(beam_search(enc, p, 3, BeamOptions{0, 7}));
  CHECK_THROWS(beam_search(enc, p, 3, BeamOptions{2, 0}));
}

TEST_CASE("overfit single pair is reproduced by beam search") {
  const auto toy = generate_toy_corpus(1, 10, ToyTask::kReverse, 3);
  const Vocab vocab = build_vocab(toy.source, 1);
  const auto pairs = encode_pairs(toy.pairs(), vocab, vocab);
  TrainConfig c;
  c.embed = c.hidden = 16;
  c.batch_size = 1;
  c.loss = LossMode::kSoftmax;
  Rng rng(4);
  Trainer<double> t(c,
                    init_params<double>({vocab.size(), vocab.size(), 16, 16},
                                        c.init_range, rng),
                    UnigramSampler(unigram_counts(pairs, vocab.size()), c.beta));
  for (std::uint64_t s = 0; s < 150; ++s) t.train_minibatch(pairs, s);
  const auto enc = encode(pairs[0], t.params());
  BeamOptions o;
  o.width = 5;
  const auto out = beam_search(enc, t.params(), pairs[0].source_length(), o);
  const std::vector<TokenId> expected(pairs[0].target.begin(), pairs[0].target.end() - 1);
  CHECK(out.tokens == expected);
  CHECK(out.terminated);
}

TEST_CASE("translate_corpus keeps order and handles fallback") {
  const auto& m = trained_model();
  std::vector<SentencePair> src(m.pairs.begin(), m.pairs.begin() + 3);
  src[1].tree.reset();
  BeamOptions o;
  o.width = 4;
  o.max_length = 20;
  const auto out = translate_corpus<double>(src, m.params, EncoderKind::kTree, o);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto enc = encode(src[i], m.params);
    CHECK(out[i].tokens ==
          beam_search(enc, m.params, src[i].source_length(), o).tokens);
  }
}

TEST_CASE("wider beams never score below greedy") {
  const auto& m = trained_model();
  LengthModel lengths = LengthModel::estimate(m.pairs, 1000);
  std::size_t violations = 0, checked = 0;
  for (const LengthModel* lm : {static_cast<const LengthModel*>(nullptr),
                                static_cast<const LengthModel*>(&lengths)}) {
    BeamOptions one;
    one.width = 1;
    one.max_length = 30;
    one.length_model = lm;
    for (std::size_t i = 0; i < 100; ++i) {
      const auto enc = encode(m.pairs[i], m.params);
      const double base =
          beam_search(enc, m.params, m.pairs[i].source_length(), one).score;
      for (std::size_t width : {2u, 5u, 20u}) {
        BeamOptions o = one;
        o.width = width;
        const double s =
            beam_search(enc, m.params, m.pairs[i].source_length(), o).score;
        ++checked;
        if (s < base - 1e-12) ++violations;
      }
    }
  }
  INFO(violations << " of " << checked);
  CHECK(violations == 0);
}
