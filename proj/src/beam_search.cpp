#include "t2s/beam_search.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace t2s {

namespace {

template <typename T>
struct Hypothesis {
  std::vector<TokenId> tokens;
  TokenId last = Vocab::kEos;
  double log_prob = 0.0;
  DecoderState<T> state;
  std::vector<std::vector<double>> attention;
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double log_prob;
};

std::vector<double> to_doubles(std::span<const float> v) {
  return {v.begin(), v.end()};
}
std::vector<double> to_doubles(std::span<const double> v) {
  return {v.begin(), v.end()};
}

}  // namespace

template <typename T>
Translation beam_search(const EncoderOutput<T>& enc, const ModelParams<T>& params,
                        std::size_t source_length, const BeamOptions& options) {
  if (options.width < 1) throw std::invalid_argument("beam width must be >= 1");
  if (options.max_length < 1) throw std::invalid_argument("max_length must be >= 1");
  const std::size_t width = options.width;

  std::vector<Hypothesis<T>> live(1);
  live[0].state = init_decoder(enc, params);
  std::vector<Translation> finished;

  auto length_term = [&](std::size_t len) {
    return options.length_model ? options.length_model->log_prob(source_length, len)
                                : 0.0;
  };
  auto worst_finished = [&]() {
    return std::min_element(finished.begin(), finished.end(),
                            [](const Translation& a, const Translation& b) {
                              return a.score < b.score;
                            });
  };
  auto add_finished = [&](Translation t) {
    if (finished.size() < width) {
      finished.push_back(std::move(t));
      return;
    }
    auto worst = worst_finished();
    if (t.score > worst->score) *worst = std::move(t);
  };

  while (!live.empty()) {
    std::vector<StepResult<T>> steps;
    steps.reserve(live.size());
    std::vector<Candidate> cands;
    for (std::size_t p = 0; p < live.size(); ++p) {
      steps.push_back(decoder_step(live[p].last, live[p].state, enc, params, true));
      const auto lp = steps.back().log_probs.values();
      // Only a parent's best width + 1 tokens can rank above the cutoff.
      std::vector<TokenId> ids(lp.size());
      for (std::size_t w = 0; w < ids.size(); ++w) ids[w] = static_cast<TokenId>(w);
      const std::size_t keep = std::min(ids.size(), width + 1);
      std::partial_sort(ids.begin(), ids.begin() + keep, ids.end(),
                        [&](TokenId a, TokenId b) {
                          return lp[a] != lp[b] ? lp[a] > lp[b] : a < b;
                        });
      for (std::size_t k = 0; k < keep; ++k) {
        cands.push_back({p, ids[k], live[p].log_prob + static_cast<double>(lp[ids[k]])});
      }
    }
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.token != b.token) return a.token < b.token;
      return a.parent < b.parent;
    });

    std::vector<Hypothesis<T>> next;
    for (const Candidate& c : cands) {
      if (next.size() == width) break;
      const Hypothesis<T>& parent = live[c.parent];
      const bool eos = c.token == Vocab::kEos;
      const std::size_t length = parent.tokens.size() + (eos ? 0 : 1);
      if (eos || length == options.max_length) {
        Translation t;
        t.tokens = parent.tokens;
        if (!eos) t.tokens.push_back(c.token);
        t.log_prob = c.log_prob;
        t.score = c.log_prob + length_term(length);
        t.terminated = eos;
        if (options.record_attention) {
          t.attention = parent.attention;
          t.attention.push_back(to_doubles(steps[c.parent].attention.alpha.values()));
        }
        add_finished(std::move(t));
        continue;
      }
      Hypothesis<T> h;
      h.tokens = parent.tokens;
      h.tokens.push_back(c.token);
      h.last = c.token;
      h.log_prob = c.log_prob;
      h.state = steps[c.parent].state;
      if (options.record_attention) {
        h.attention = parent.attention;
        h.attention.push_back(to_doubles(steps[c.parent].attention.alpha.values()));
      }
      next.push_back(std::move(h));
    }
    live = std::move(next);

    if (finished.size() >= width && !live.empty()) {
      // Log-probs only decrease and the length term is <= 0.
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, h.log_prob);
      if (best_live <= worst_finished()->score) break;
    }
  }

  if (finished.empty()) throw std::logic_error("beam search produced no hypothesis");
  auto best = std::max_element(finished.begin(), finished.end(),
                               [](const Translation& a, const Translation& b) {
                                 return a.score < b.score;
                               });
  return *best;
}

template <typename T>
Translation greedy_decode(const EncoderOutput<T>& enc,
                          const ModelParams<T>& params, std::size_t max_length,
                          bool record_attention) {
  Translation out;
  DecoderState<T> state = init_decoder(enc, params);
  TokenId prev = Vocab::kEos;
  while (true) {
    auto step = decoder_step(prev, state, enc, params, true);
    const auto lp = step.log_probs.values();
    const auto best =
        static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    out.log_prob += static_cast<double>(lp[best]);
    if (record_attention) out.attention.push_back(to_doubles(step.attention.alpha.values()));
    if (best == Vocab::kEos) {
      out.terminated = true;
      break;
    }
    out.tokens.push_back(best);
    if (out.tokens.size() == max_length) break;
    prev = best;
    state = std::move(step.state);
  }
  out.score = out.log_prob;
  return out;
}

template <typename T>
std::vector<Translation> translate_corpus(std::span<const SentencePair> sources,
                                          const ModelParams<T>& params,
                                          EncoderKind encoder,
                                          const BeamOptions& options) {
  std::vector<Translation> out(sources.size());
  const auto n = static_cast<std::ptrdiff_t>(sources.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto enc = encode(sources[i], params, encoder);
    out[i] = beam_search(enc, params, sources[i].source_length(), options);
  }
  return out;
}

#define T2S_INSTANTIATE_BEAM(T)                                               \
  template Translation beam_search(const EncoderOutput<T>&,                   \
                                   const ModelParams<T>&, std::size_t,        \
                                   const BeamOptions&);                       \
  template Translation greedy_decode(const EncoderOutput<T>&,                 \
                                     const ModelParams<T>&, std::size_t, bool); \
  template std::vector<Translation> translate_corpus(                         \
      std::span<const SentencePair>, const ModelParams<T>&, EncoderKind,      \
      const BeamOptions&);

T2S_INSTANTIATE_BEAM(float)
T2S_INSTANTIATE_BEAM(double)

}  // namespace t2s
