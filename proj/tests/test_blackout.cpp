#include <doctest.h>

#include <cmath>
#include <numeric>

#include "t2s/blackout.hpp"
#include "t2s/grad_check.hpp"

using namespace t2s;

namespace {

// Direct reading of the weighted-softmax definition.
double reference_loss(const std::vector<double>& s, const std::vector<double>& q,
                      std::size_t target) {
  double z = 0;
  for (std::size_t j = 0; j < s.size(); ++j) z += std::exp(s[j]) / q[j];
  double loss = -std::log(std::exp(s[target]) / q[target] / z);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k != target) loss -= std::log(1.0 - std::exp(s[k]) / q[k] / z);
  }
  return loss;
}

}  // namespace

TEST_CASE("sampler construction") {
  const std::vector<double> counts{3, 1, 0, 6};
  const UnigramSampler s(counts, 1.0);
  double sum = 0;
  for (double v : s.probabilities()) {
    CHECK(v > 0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
  CHECK(s.q(2) == doctest::Approx(1.0 / 11.0));  // zero count floored at 1

  const UnigramSampler flat(counts, 0.0);
  for (double v : flat.probabilities()) CHECK(v == doctest::Approx(0.25));

  const UnigramSampler powered(counts, 0.4);
  const double denom = std::pow(3, 0.4) + 1 + 1 + std::pow(6, 0.4);
  CHECK(powered.q(0) == doctest::Approx(std::pow(3, 0.4) / denom));

  CHECK_THROWS(UnigramSampler(counts, 1.5));
  CHECK_THROWS(UnigramSampler(counts, -0.1));
  CHECK_THROWS(UnigramSampler(std::vector<double>{}, 0.4));
}

TEST_CASE("sample_negatives") {
  Rng rng(1);
  const UnigramSampler two(std::vector<double>{5, 5}, 0.4);
  for (TokenId id : sample_negatives(two, 0, 50, rng)) CHECK(id == 1);

  const UnigramSampler s(std::vector<double>{3, 1}, 1.0);
  const UnigramSampler many(std::vector<double>{3, 1, 1}, 1.0);
  std::size_t zeros = 0;
  const std::size_t draws = 100000;
  for (std::size_t i = 0; i < draws; ++i) zeros += s.draw(rng) == 0;
  const double sigma = std::sqrt(draws * 0.75 * 0.25);
  CHECK(std::abs(static_cast<double>(zeros) - 0.75 * draws) < 3 * sigma);

  const auto neg = sample_negatives(many, 0, 200, rng);
  CHECK(neg.size() == 200);
  for (TokenId id : neg) CHECK(id != 0);

  const UnigramSampler one(std::vector<double>{1}, 0.4);
  CHECK_THROWS(sample_negatives(one, 0, 1, rng));
  CHECK_THROWS(sample_negatives(many, 0, 0, rng));
}

TEST_CASE("blackout_loss values") {
  SUBCASE("symmetric K=1") {
    const std::vector<double> s{0.7, 0.7}, q{0.5, 0.5};
    const auto r = blackout_loss<double>(s, q);
    CHECK(r.loss == doctest::Approx(2 * std::log(2.0)));
  }
  SUBCASE("dominant target drives the loss to zero") {
    const std::vector<double> s{60, 0, 0, 0}, q{0.25, 0.25, 0.25, 0.25};
    CHECK(blackout_loss<double>(s, q).loss < 1e-20);
  }
  SUBCASE("matches the direct formula") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(-3, 3), uq(0.01, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + trial % 7;
      std::vector<double> s(n), q(n);
      for (auto& v : s) v = u(rng);
      for (auto& v : q) v = uq(rng);
      const std::size_t target = trial % n;
      CHECK(blackout_loss<double>(s, q, target).loss ==
            doctest::Approx(reference_loss(s, q, target)).epsilon(1e-12));
    }
  }
  SUBCASE("errors") {
    const std::vector<double> one{1.0}, bad{1.0, INFINITY}, q{0.5, 0.5}, q0{0.5, 0.0};
    CHECK_THROWS(blackout_loss<double>(one, std::vector<double>{1.0}));
    CHECK_THROWS_AS(blackout_loss<double>(bad, q), std::domain_error);
    CHECK_THROWS(blackout_loss<double>(std::vector<double>{1, 2}, q0));
  }
}

TEST_CASE("blackout_loss gradient matches finite differences") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-2, 2), uq(0.02, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t K = 1 + trial % 6;
    Tensor<double> s(K + 1, 1);
    for (auto& v : s.values()) v = u(rng);
    std::vector<double> q(K + 1);
    for (auto& v : q) v = uq(rng);
    const auto r = blackout_loss<double>(s.values(), q);
    Tensor<double> g(K + 1, 1, r.grad);
    std::vector<Tensor<double>*> ps{&s}, gs{&g};
    std::vector<std::string> names{"logits"};
    const auto check = gradient_check(
        ps, gs, names, [&] { return blackout_loss<double>(s.values(), q).loss; }, 1e-5);
    CHECK(check.max_relative_error < 1e-5);
  }
}

TEST_CASE("full_softmax_loss") {
  const std::vector<double> flat(7, 0.3);
  const auto r = full_softmax_loss<double>(flat, 2);
  CHECK(r.loss == doctest::Approx(std::log(7.0)));
  CHECK(std::accumulate(r.grad.begin(), r.grad.end(), 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<double> s{1, -2, 0.5};
  const auto lp = log_softmax(Tensor<double>(3, 1, s));
  CHECK(std::abs(full_softmax_loss<double>(s, 0).loss + lp[0]) < 1e-7);
  CHECK_THROWS(full_softmax_loss<double>(s, 3));
}

TEST_CASE("blackout_loss with a dominant negative stays finite") {
  const std::vector<double> q{0.2, 0.1, 0.3, 0.4};
  for (double gap : {20.0, 80.0, 200.0}) {
    const std::vector<float> lf{0.f, static_cast<float>(gap), -1.f, 2.f};
    const std::vector<double> ld{0.0, gap, -1.0, 2.0};
    const std::vector<long double> ll{0.0L, static_cast<long double>(gap), -1.0L, 2.0L};
    const auto f = blackout_loss<float>(lf, q, 0);
    const auto d = blackout_loss<double>(ld, q, 0);
    const auto l = blackout_loss<long double>(ll, q, 0);
    INFO("gap " << gap);
    CHECK(std::isfinite(f.loss));
    CHECK(std::isfinite(d.loss));
    CHECK(d.loss == doctest::Approx(static_cast<double>(l.loss)).epsilon(1e-12));
    CHECK(f.loss == doctest::Approx(d.loss).epsilon(1e-5));
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::isfinite(f.grad[j]));
      CHECK(d.grad[j] == doctest::Approx(static_cast<double>(l.grad[j])).epsilon(1e-9));
      CHECK(f.grad[j] == doctest::Approx(d.grad[j]).epsilon(1e-4).scale(1.0));
    }
  }
}
