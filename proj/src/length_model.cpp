#include "t2s/length_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace t2s {

LengthModel LengthModel::estimate(std::span<const SentencePair> pairs,
                                  std::size_t cap) {
  if (pairs.empty()) throw std::invalid_argument("length model: no pairs");
  std::vector<std::pair<std::size_t, std::size_t>> lengths;
  for (const auto& p : pairs) {
    lengths.emplace_back(p.source_length(), p.target_length());
  }
  return estimate_from_lengths(lengths, cap);
}

LengthModel LengthModel::estimate_from_lengths(
    std::span<const std::pair<std::size_t, std::size_t>> lengths,
    std::size_t cap) {
  if (lengths.empty()) throw std::invalid_argument("length model: no pairs");
  std::map<std::size_t, std::vector<double>> counts;
  const std::size_t n = std::min(cap, lengths.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto [src, tgt] = lengths[i];
    auto& row = counts[src];
    if (row.empty()) row.assign(kMaxTargetLength, 0.0);
    if (tgt >= 1 && tgt <= kMaxTargetLength) row[tgt - 1] += 1.0;
  }
  LengthModel model;
  for (auto& [src, row] : counts) {
    double total = 0.0;
    for (double& c : row) {
      c += 1.0;
      total += c;
    }
    for (double& c : row) c /= total;
    model.rows_[src] = std::move(row);
  }
  return model;
}

LengthModel LengthModel::uniform() { return LengthModel(); }

const std::vector<double>* LengthModel::row(std::size_t source_length) const {
  auto it = rows_.find(source_length);
  return it == rows_.end() ? nullptr : &it->second;
}

double LengthModel::floor(std::size_t source_length) const {
  const auto* r = row(source_length);
  if (!r) return 1.0 / kMaxTargetLength;
  return *std::min_element(r->begin(), r->end());
}

double LengthModel::prob(std::size_t source_length,
                         std::size_t target_length) const {
  if (target_length < 1 || target_length > kMaxTargetLength) return 0.0;
  const auto* r = row(source_length);
  return r ? (*r)[target_length - 1] : 1.0 / kMaxTargetLength;
}

double LengthModel::log_prob(std::size_t source_length,
                             std::size_t target_length) const {
  if (target_length < 1 || target_length > kMaxTargetLength) {
    return std::log(floor(source_length));
  }
  return std::log(prob(source_length, target_length));
}

std::size_t LengthModel::argmax(std::size_t source_length) const {
  const auto* r = row(source_length);
  if (!r) return 1;
  return static_cast<std::size_t>(std::max_element(r->begin(), r->end()) -
                                  r->begin()) +
         1;
}

void LengthModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& [src, r] : rows_) {
    for (std::size_t t = 0; t < r.size(); ++t) {
      out << src << ' ' << (t + 1) << ' ' << r[t] << '\n';
    }
  }
}

LengthModel LengthModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  LengthModel model;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t src = 0, tgt = 0;
    double p = 0.0;
    if (!(fields >> src >> tgt >> p) || tgt < 1 || tgt > kMaxTargetLength ||
        !(p > 0.0)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed length-model row");
    }
    auto& r = model.rows_[src];
    if (r.empty()) r.assign(kMaxTargetLength, 0.0);
    r[tgt - 1] = p;
  }
  for (const auto& [src, r] : model.rows_) {
    if (std::any_of(r.begin(), r.end(), [](double p) { return p <= 0.0; })) {
      throw std::runtime_error(path.string() + ": incomplete row for source "
                               "length " + std::to_string(src));
    }
  }
  return model;
}

}  // namespace t2s
