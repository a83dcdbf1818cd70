#include "t2s/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace t2s {

namespace {

using NGramCounts = std::map<std::vector<std::string>, std::size_t>;

NGramCounts ngrams(const Sentence& s, std::size_t n) {
  NGramCounts out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++out[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
  }
  return out;
}

}  // namespace

BleuReport bleu(std::span<const Sentence> hypotheses,
                std::span<const Sentence> references) {
  if (hypotheses.size() != references.size()) {
    throw std::invalid_argument("bleu: " + std::to_string(hypotheses.size()) +
                                " hypotheses vs " +
                                std::to_string(references.size()) + " references");
  }
  if (hypotheses.empty()) throw std::invalid_argument("bleu: empty corpus");

  BleuReport r;
  std::array<std::size_t, 4> matched{}, total{};
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    r.hypothesis_length += hypotheses[i].size();
    r.reference_length += references[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngrams(hypotheses[i], n);
      const auto ref = ngrams(references[i], n);
      for (const auto& [gram, count] : h) {
        total[n - 1] += count;
        auto it = ref.find(gram);
        if (it != ref.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }

  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    r.precisions[n] = total[n] == 0 ? 0.0
                                    : static_cast<double>(matched[n]) /
                                          static_cast<double>(total[n]);
    if (r.precisions[n] == 0.0) {
      if (!r.zero_precision_order) r.zero_precision_order = static_cast<int>(n + 1);
    } else {
      log_sum += std::log(r.precisions[n]);
    }
  }
  if (r.hypothesis_length == 0) {
    r.brevity_penalty = 0.0;
  } else if (r.hypothesis_length >= r.reference_length) {
    r.brevity_penalty = 1.0;
  } else {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.reference_length) /
                                           static_cast<double>(r.hypothesis_length));
  }
  r.bleu = r.zero_precision_order ? 0.0
                                  : 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

}  // namespace t2s
