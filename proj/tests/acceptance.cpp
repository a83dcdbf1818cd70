// Acceptance run: one PASS/FAIL line per criterion, details indented below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "oracle.hpp"
#include "t2s/beam_search.hpp"
#include "t2s/bleu.hpp"
#include "t2s/checkpoint.hpp"
#include "t2s/grad_check.hpp"
#include "t2s/toy.hpp"
#include "t2s/trainer.hpp"

using namespace t2s;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct ToySplit {
  Vocab vocab;
  std::vector<SentencePair> train, dev;
};

ToySplit toy_split(ToyTask task, std::uint64_t seed) {
  const auto tr = generate_toy_corpus(2000, 50, task, seed);
  const auto dv = generate_toy_corpus(200, 50, task, seed + 1);
  ToySplit s;
  s.vocab = build_vocab(tr.source, 1);
  s.train = encode_pairs(tr.pairs(), s.vocab, s.vocab);
  s.dev = encode_pairs(dv.pairs(), s.vocab, s.vocab);
  return s;
}

TrainConfig toy_config(LossMode loss, EncoderKind encoder) {
  TrainConfig c;
  c.embed = c.hidden = 64;
  c.negatives = 10;
  c.batch_size = 16;
  c.max_epochs = 30;
  c.loss = loss;
  c.encoder = encoder;
  return c;
}

std::vector<TokenId> gold(const SentencePair& p) {
  return {p.target.begin(), p.target.end() - 1};
}

double exact_match(const ModelParams<float>& params, std::span<const SentencePair> dev,
                   EncoderKind kind) {
  std::size_t hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dev.size()); ++i) {
    const auto enc = encode(dev[i], params, kind);
    const auto g = greedy_decode(enc, params);
    hits += g.terminated && g.tokens == gold(dev[i]);
  }
  return static_cast<double>(hits) / static_cast<double>(dev.size());
}

struct TrainedModel {
  ToySplit data;
  ModelParams<float> params;
  TrainConfig config;
  std::vector<EpochRecord> history;
  double initial_dev_loss = 0;
  double token_accuracy = 0;
  double exact = 0;
  double seconds = 0;
  std::size_t stop_epoch = 0;
  Rng shuffle_rng;
  double lr = 0;
  std::optional<double> previous_dev;
};

// Trains until the canary thresholds are met (checked after each epoch) or
// max_epochs is reached.
TrainedModel train_toy(ToyTask task, LossMode loss, EncoderKind encoder,
                       std::size_t max_epochs, bool stop_at_threshold) {
  TrainedModel m;
  m.data = toy_split(task, 11);
  m.config = toy_config(loss, encoder);
  m.config.max_epochs = max_epochs;
  Rng rng(m.config.seed);
  const std::size_t V = m.data.vocab.size();
  Trainer<float> trainer(
      m.config, init_params<float>({V, V, 64, 64}, m.config.init_range, rng),
      UnigramSampler(unigram_counts(m.data.train, V), m.config.beta));
  m.initial_dev_loss = evaluate_dev(trainer.params(), m.data.dev, encoder).mean_loss;
  const auto t0 = std::chrono::steady_clock::now();
  m.history = trainer.run_training(
      m.data.train, m.data.dev, [&](const EpochRecord& r, const Trainer<float>& t) {
        m.token_accuracy = evaluate_dev(t.params(), m.data.dev, encoder).token_accuracy;
        m.exact = exact_match(t.params(), m.data.dev, encoder);
        m.stop_epoch = r.epoch;
        std::printf("    epoch %2zu  train %.3f  dev %.3f  lr %.3g  acc %.4f  exact %.3f\n",
                    r.epoch, r.train_loss, r.dev_loss, r.learning_rate, m.token_accuracy,
                    m.exact);
        std::fflush(stdout);
        return !(stop_at_threshold && m.token_accuracy >= 0.95 && m.exact >= 0.90);
      });
  m.seconds = seconds_since(t0);
  m.params = trainer.params();
  m.shuffle_rng = trainer.shuffle_rng();
  m.lr = trainer.schedule().rate();
  m.previous_dev = trainer.schedule().previous();
  return m;
}

// ---------------------------------------------------------------------------

void gradient_integrity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::string detail;
  for (bool tree : {true, false}) {
    for (LossMode loss : {LossMode::kBlackOut, LossMode::kSoftmax}) {
      PipelineCheck c;
      c.with_tree = tree;
      c.loss = loss;
      const auto r = pipeline_gradient_check(c);
      worst = std::max(worst, r.max_relative_error);
      detail += fmt("%s/%s %.2e (%zu params); ", tree ? "tree" : "fallback",
                    loss == LossMode::kBlackOut ? "blackout" : "softmax",
                    r.max_relative_error, r.checked);
    }
  }
  const double secs = seconds_since(t0);
  report(worst < 1e-4 && secs < 60, "gradient integrity",
         detail + fmt("max %.2e, %.1fs", worst, secs));
}

void structural_counts(const TrainedModel& m) {
  std::size_t sentences = 0, bad_count = 0, bad_rows = 0, steps = 0;
  double worst_sum = 0;
  BeamOptions o;
  o.width = 5;
  o.record_attention = true;
  for (const auto& p : m.data.dev) {
    if (!p.tree) continue;
    ++sentences;
    const auto enc = encode(p, m.params);
    const std::size_t n = p.source_length();
    if (enc.candidate_count() != 2 * n || enc.phrases.size() != n - 1 ||
        enc.sequential.size() != n + 1) {
      ++bad_count;
    }
    const auto t = beam_search(enc, m.params, n, o);
    for (const auto& row : t.attention) {
      ++steps;
      if (row.size() != 2 * n) ++bad_rows;
      double s = 0;
      for (double a : row) s += a;
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
  }
  // Random double-precision models, including one-token sources.
  std::mt19937_64 rng(3);
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 12;
    Rng prng(trial);
    const auto params = init_params<double>({20, 20, 8, 8}, 0.8, prng);
    SentencePair p;
    std::uniform_int_distribution<TokenId> w(2, 19);
    for (std::size_t k = 0; k < n; ++k) p.source.push_back(w(rng));
    p.source.push_back(Vocab::kEos);
    p.target = {Vocab::kEos};
    p.tree = random_binary_tree(n, rng);
    ++sentences;
    const auto enc = encode(p, params);
    if (enc.candidate_count() != 2 * n) ++bad_count;
    auto state = init_decoder(enc, params);
    for (int step = 0; step < 5; ++step) {
      const auto r = decoder_step(Vocab::kEos, state, enc, params);
      ++steps;
      if (r.attention.alpha.rows() != 2 * n) ++bad_rows;
      double s = 0;
      for (double a : r.attention.alpha.values()) s += a;
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      state = r.state;
    }
  }
  report(bad_count == 0 && bad_rows == 0 && worst_sum <= 1e-6, "structural counts",
         fmt("%zu parsed sentences, %zu decode steps, %zu count mismatches, "
             "max |sum(alpha) - 1| = %.1e",
             sentences, steps, bad_count + bad_rows, worst_sum));
}

void oracle_equivalence() {
  std::mt19937_64 rng(17);
  double worst = 0;
  std::size_t instances = 0;
  for (; instances < 100; ++instances) {
    const std::size_t n = 1 + instances % 10;
    const std::size_t e = 3 + instances % 5, d = 4 + instances % 4;
    Rng prng(1000 + instances);
    auto params = init_params<double>({16, 16, e, d}, 0.7, prng);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto* t : params.tensors())
      for (auto& v : t->values()) v += u(prng);

    SentencePair p;
    std::uniform_int_distribution<TokenId> w(0, 15);
    for (std::size_t k = 0; k < n; ++k) p.source.push_back(w(rng));
    p.source.push_back(Vocab::kEos);
    p.target = {Vocab::kEos};
    p.tree = random_binary_tree(n, rng);
    const auto enc = encode(p, params);

    // Scalar recomputation of the whole encoder.
    std::vector<oracle::State> seq;
    oracle::State prev{oracle::Vec(d, 0.0), oracle::Vec(d, 0.0)};
    for (TokenId id : p.source) {
      const auto row = params.source_embed.row(static_cast<std::size_t>(id));
      prev = oracle::lstm(params.encoder, oracle::Vec(row.begin(), row.end()), prev);
      seq.push_back(prev);
    }
    std::vector<oracle::State> phrase;
    for (const auto& node : p.tree->phrases()) {
      auto child = [&](const TreeChild& c) {
        return c.is_leaf ? seq[c.index] : phrase[c.index];
      };
      phrase.push_back(oracle::tree_lstm(params.tree, child(node.left), child(node.right)));
    }
    auto diff = [&](const Tensor<double>& a, const oracle::Vec& b) {
      for (std::size_t k = 0; k < b.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    };
    for (std::size_t k = 0; k < seq.size(); ++k) {
      diff(enc.sequential[k].h, seq[k].h);
      diff(enc.sequential[k].c, seq[k].c);
    }
    for (std::size_t k = 0; k < phrase.size(); ++k) {
      diff(enc.phrases[k].h, phrase[k].h);
      diff(enc.phrases[k].c, phrase[k].c);
    }
    const oracle::Vec s = oracle::to_vec(enc.sequential.back().h);
    const oracle::Vec ctx = oracle::to_vec(enc.sequential.front().h);
    diff(combine(enc.sequential.back().h, enc.sequential.front().h, params),
         oracle::combine(params.W_combine, params.b_combine, s, ctx));
  }
  report(worst <= 1e-12, "oracle equivalence",
         fmt("%zu instances (LSTM chain, Tree-LSTM phrases, combine), max abs diff %.2e",
             instances, worst));
}

void beam_correctness(const TrainedModel& m) {
  std::size_t greedy_mismatch = 0, uniform_mismatch = 0;
  const auto uniform = LengthModel::uniform();
  BeamOptions one;
  one.width = 1;
  BeamOptions simple;
  simple.width = 20;
  BeamOptions proposed = simple;
  proposed.length_model = &uniform;
  const std::size_t N = 50;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& p = m.data.dev[i];
    const auto enc = encode(p, m.params);
    const auto g = greedy_decode(enc, m.params);
    if (beam_search(enc, m.params, p.source_length(), one).tokens != g.tokens) {
      ++greedy_mismatch;
    }
    if (beam_search(enc, m.params, p.source_length(), simple).tokens !=
        beam_search(enc, m.params, p.source_length(), proposed).tokens) {
      ++uniform_mismatch;
    }
  }
  report(greedy_mismatch == 0 && uniform_mismatch == 0, "beam correctness",
         fmt("%zu toy sentences; beam1 vs greedy mismatches %zu; uniform-length vs "
             "simple beam20 mismatches %zu",
             N, greedy_mismatch, uniform_mismatch));
}

void learning_canary(const TrainedModel& blackout, const TrainedModel& softmax) {
  bool ok = true;
  std::string detail;
  for (const auto* m : {&blackout, &softmax}) {
    const bool pass = m->token_accuracy >= 0.95 && m->exact >= 0.90;
    ok = ok && pass;
    detail += fmt("%s: token acc %.4f, exact %.3f at epoch %zu (%.0fs); ",
                  m->config.loss == LossMode::kBlackOut ? "blackout" : "softmax",
                  m->token_accuracy, m->exact, m->stop_epoch, m->seconds);
  }
  report(ok, "learning canary", detail + "thresholds 0.95 / 0.90 within 30 epochs");

  // Supplementary: dev loss halves within 10 epochs.
  for (const auto* m : {&blackout, &softmax}) {
    double best = m->initial_dev_loss;
    for (const auto& r : m->history)
      if (r.epoch <= 10) best = std::min(best, r.dev_loss);
    std::printf("    %s dev loss %.3f -> %.3f within 10 epochs (%s)\n",
                m->config.loss == LossMode::kBlackOut ? "blackout" : "softmax",
                m->initial_dev_loss, best, best <= 0.5 * m->initial_dev_loss ? "halved" : "NOT halved");
  }
}

Sentence to_words(std::span<const TokenId> ids, const Vocab& v) { return decode_sentence(ids, v); }

void ablation() {
  struct Row {
    const char* name;
    EncoderKind kind;
  };
  const Row rows[] = {{"tree", EncoderKind::kTree},
                      {"sequential-only", EncoderKind::kSequential},
                      {"tree-no-leaf-lstm", EncoderKind::kTreeNoLeafLstm}};
  bool all_ok = true;
  std::string detail;
  double tree_bleu = 0, best_other = 0;
  for (const auto& row : rows) {
    std::printf("    [%s]\n", row.name);
    TrainedModel m;
    try {
      m = train_toy(ToyTask::kBracketSensitive, LossMode::kBlackOut, row.kind, 20, false);
    } catch (const std::exception& e) {
      all_ok = false;
      detail += fmt("%s failed: %s; ", row.name, e.what());
      continue;
    }
    BeamOptions o;
    o.width = 20;
    const auto out = translate_corpus<float>(m.data.dev, m.params, row.kind, o);
    std::vector<Sentence> hyp, ref;
    for (std::size_t i = 0; i < out.size(); ++i) {
      hyp.push_back(to_words(out[i].tokens, m.data.vocab));
      ref.push_back(to_words(gold(m.data.dev[i]), m.data.vocab));
    }
    const auto b = bleu(hyp, ref);
    const bool trained = std::isfinite(m.history.back().dev_loss) &&
                         m.history.back().dev_loss < m.initial_dev_loss;
    all_ok = all_ok && trained && out.size() == m.data.dev.size();
    if (row.kind == EncoderKind::kTree) tree_bleu = b.bleu;
    else best_other = std::max(best_other, b.bleu);
    detail += fmt("%s dev loss %.2f acc %.4f exact %.3f BLEU %.2f; ", row.name,
                  m.history.back().dev_loss, m.token_accuracy, m.exact, b.bleu);

    if (row.kind == EncoderKind::kTree) {
      // Beam size vs brevity under the simple search.
      for (std::size_t width : {6u, 20u}) {
        BeamOptions w;
        w.width = width;
        const auto t = translate_corpus<float>(m.data.dev, m.params, row.kind, w);
        std::vector<Sentence> h;
        for (const auto& x : t) h.push_back(to_words(x.tokens, m.data.vocab));
        const auto r = bleu(h, ref);
        std::printf("    simple beam %2zu: BLEU %.2f BP %.4f hyp_len %zu ref_len %zu\n",
                    width, r.bleu, r.brevity_penalty, r.hypothesis_length,
                    r.reference_length);
      }
    }
  }
  report(all_ok, "ablation harness",
         detail + fmt("tree %s best alternative (reported only)",
                      tree_bleu > best_other ? ">" : "<="));
}

void sampler_chi_square() {
  const std::vector<double> counts{500, 220, 130, 90, 60, 40, 25, 15, 8, 3};
  const UnigramSampler sampler(counts, 0.4);
  std::vector<double> q(counts.size());
  double z = 0;
  for (std::size_t k = 0; k < q.size(); ++k) z += q[k] = std::pow(counts[k], 0.4);
  for (auto& v : q) v /= z;

  const std::size_t draws = 1'000'000;
  std::vector<std::size_t> hits(q.size(), 0);
  Rng rng(2024);
  for (std::size_t i = 0; i < draws; ++i) ++hits[static_cast<std::size_t>(sampler.draw(rng))];
  double chi2 = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double expected = q[k] * static_cast<double>(draws);
    chi2 += (static_cast<double>(hits[k]) - expected) * (static_cast<double>(hits[k]) - expected) /
            expected;
  }
  const double critical = 27.877;  // chi-square, 9 dof, upper 0.001 quantile
  report(chi2 < critical, "blackout sampler distribution",
         fmt("chi2 = %.3f over %zu draws, 10 words, critical %.3f (alpha 0.001)", chi2,
             draws, critical));
}

void checkpoint_round_trip(const TrainedModel& m) {
  Checkpoint ckpt;
  ckpt.params = m.params;
  ckpt.config = m.config;
  ckpt.source_vocab = ckpt.target_vocab = m.data.vocab;
  ckpt.unigram_counts = unigram_counts(m.data.train, m.data.vocab.size());
  ckpt.epoch = m.stop_epoch;
  ckpt.learning_rate = m.lr;
  ckpt.previous_dev_loss = m.previous_dev;
  std::ostringstream os;
  os << m.shuffle_rng;
  ckpt.rng_state = os.str();

  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "t2s_acceptance_a.ckpt", b = dir / "t2s_acceptance_b.ckpt";
  save_checkpoint(ckpt, a);
  const auto loaded = load_checkpoint(a);
  save_checkpoint(loaded, b);
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool same_bytes = bytes(a) == bytes(b);

  const double before = evaluate_dev(m.params, m.data.dev, EncoderKind::kTree).mean_loss;
  const double after = evaluate_dev(loaded.params, m.data.dev, EncoderKind::kTree).mean_loss;
  BeamOptions o;
  const std::span<const SentencePair> first50(m.data.dev.data(), 50);
  const auto t1 = translate_corpus<float>(first50, m.params, EncoderKind::kTree, o);
  const auto t2 = translate_corpus<float>(first50, loaded.params, EncoderKind::kTree, o);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < t1.size(); ++i) differ += t1[i].tokens != t2[i].tokens;
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  report(same_bytes && before == after && differ == 0, "checkpoint round trip",
         fmt("dev loss %.9g vs %.9g, %zu/50 translations differ, re-save %s", before, after,
             differ, same_bytes ? "byte-identical" : "DIFFERS"));
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  const auto t0 = std::chrono::steady_clock::now();

  try {
    gradient_integrity();
    oracle_equivalence();
    sampler_chi_square();

    std::printf("    [copy task, blackout]\n");
    const auto blackout =
        train_toy(ToyTask::kCopy, LossMode::kBlackOut, EncoderKind::kTree, 30, true);
    std::printf("    [copy task, softmax]\n");
    const auto softmax =
        train_toy(ToyTask::kCopy, LossMode::kSoftmax, EncoderKind::kTree, 30, true);
    learning_canary(blackout, softmax);
    structural_counts(blackout);
    beam_correctness(blackout);
    checkpoint_round_trip(blackout);
    ablation();
  } catch (const std::exception& e) {
    report(false, "acceptance run", e.what());
  }

  std::printf("%d failing, %.0fs total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
