#include <doctest.h>

#include <cmath>
#include <random>

#include "graft/eval.hpp"
#include "oracles.hpp"

using namespace graft;

TEST_CASE("counts reproduce the published overall row") {
  // key=748, claimed=581, correct=448 -> R 59.9, P 77.1, F 67.4
  ScoreCounts c{748, 581, 448};
  CHECK(recall_pct(c) == doctest::Approx(59.9).epsilon(0.001));
  CHECK(precision_pct(c) == doctest::Approx(77.1).epsilon(0.001));
  CHECK(f_pct(c) == doctest::Approx(67.4).epsilon(0.001));
}

TEST_CASE("harmonic mean reproduces published F values") {
  CHECK(f_score(63.9, 77.2) == doctest::Approx(69.9).epsilon(0.001));
  CHECK(f_score(79.5, 79.5) == doctest::Approx(79.5));  // r = p fixed point
}

TEST_CASE("perfect hypothesis scores 100 everywhere") {
  AnnotationLayer key = {{{0, 1, "subj"}, {2, 1, "obj"}}, {{0, 3, "subj"}}};
  EvalReport rep = score(key, key);
  CHECK(rep.r == doctest::Approx(100.0));
  CHECK(rep.p == doctest::Approx(100.0));
  CHECK(rep.f == doctest::Approx(100.0));
}

TEST_CASE("per-label counts partition the overall counts") {
  AnnotationLayer key = {{{0, 1, "subj"}, {2, 1, "obj"}, {3, 1, "obj"}}, {{0, 3, "subj"}}};
  AnnotationLayer hyp = {{{0, 1, "subj"}, {2, 1, "subj"}, {3, 1, "obj"}}, {{1, 3, "obj"}}};
  EvalReport rep = score(hyp, key);
  CHECK(rep.overall.key_total == 4);
  CHECK(rep.overall.claimed == 4);
  CHECK(rep.overall.correct == 2);
  std::int64_t key_sum = 0, claimed_sum = 0, correct_sum = 0;
  for (const auto& [label, counts] : rep.per_label) {
    key_sum += counts.key_total;
    claimed_sum += counts.claimed;
    correct_sum += counts.correct;
  }
  CHECK(key_sum == rep.overall.key_total);
  CHECK(claimed_sum == rep.overall.claimed);
  CHECK(correct_sum == rep.overall.correct);
}

TEST_CASE("error reduction reproduces published values") {
  CHECK(error_reduction(69.9, 67.4) == doctest::Approx(7.7).epsilon(0.01));
  CHECK(error_reduction(71.6, 40.0) == doctest::Approx(52.7).epsilon(0.001));
  CHECK(error_reduction(55.0, 55.0) == doctest::Approx(0.0));
  CHECK(error_reduction(30.0, 40.0) < 0.0);  // worse than baseline is negative
  CHECK_THROWS_AS(error_reduction(50.0, 100.0), Error);
}

TEST_CASE("error reduction is increasing in the improved F") {
  for (double f_ni : {10.0, 40.0, 67.4, 90.0}) {
    double prev = error_reduction(f_ni, f_ni);
    for (double f_ia = f_ni + 1; f_ia <= 99.0; f_ia += 7) {
      double er = error_reduction(f_ia, f_ni);
      CHECK(er > prev);
      prev = er;
    }
  }
}

TEST_CASE("harmonic-mean bounds hold for random counts") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 200; ++round) {
    std::int64_t key_total = 1 + static_cast<std::int64_t>(rng() % 100);
    std::int64_t claimed = 1 + static_cast<std::int64_t>(rng() % 100);
    std::int64_t correct = static_cast<std::int64_t>(rng() % (std::min(key_total, claimed) + 1));
    ScoreCounts c{key_total, claimed, correct};
    double r = recall_pct(c), p = precision_pct(c), f = f_score(r, p);
    if (r > 0 && p > 0) {
      CHECK(f >= std::min(r, p) - 1e-9);
      CHECK(f <= (r + p) / 2.0 + 1e-9);
    }
  }
}

TEST_CASE("sign test matches the worked examples") {
  // 9 of 10 discordant favor A -> p = 11/1024
  std::vector<std::uint8_t> a(10, 1), b(10, 0);
  a[0] = 0;
  b[0] = 1;
  SignificanceResult r = sign_test_recall(a, b);
  CHECK(r.p_value == doctest::Approx(11.0 / 1024.0));
  CHECK(r.significant_5());

  // identical vectors: no discordant pairs
  std::vector<std::uint8_t> same = {1, 0, 1, 1};
  r = sign_test_recall(same, same);
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.no_discordant);

  // one discordant pair favoring A -> single coin flip
  r = sign_test_recall({1, 1, 0}, {0, 1, 0});
  CHECK(r.p_value == doctest::Approx(0.5));
}

TEST_CASE("binomial tail equals the Pascal-triangle oracle exactly") {
  for (int n = 0; n <= 30; ++n)
    for (int k = 0; k <= n; ++k)
      CHECK(binomial_tail_one_sided(n, k) == oracle::pascal_binomial_tail(n, k));
}

TEST_CASE("one-sided tails obey the total-mass identity") {
  // P[X >= k] + P[X >= n-k+1] = 1 + P[X = k..(n-k)] overlap handling reduces
  // to: P[X >= k] + P[X <= k-1] = 1, with P[X <= k-1] = tail(n, n-k+1) by
  // symmetry of the fair binomial.
  for (int n = 1; n <= 30; ++n) {
    for (int k = 1; k <= n; ++k) {
      double upper = binomial_tail_one_sided(n, k);
      double lower_via_symmetry = binomial_tail_one_sided(n, n - k + 1);
      CHECK(upper + lower_via_symmetry == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("randomization test: identical counts give p = 1") {
  std::vector<UnitCounts> units = {{3, 3, 2}, {4, 4, 3}, {2, 3, 1}};
  SignificanceResult r =
      randomization_test(units, units, PairedStat::FScore, 1000, 42, RandMode::Auto);
  CHECK(r.exhaustive);
  CHECK(r.p_value == doctest::Approx(1.0));
  r = randomization_test(units, units, PairedStat::Precision, 1000, 42, RandMode::Sampled);
  CHECK(r.p_value == doctest::Approx(1.0));
}

TEST_CASE("sampled randomization approximates the exhaustive value") {
  // 4-unit toy instance, three seeds, within +-0.02 of the 2^4 enumeration
  std::vector<UnitCounts> a = {{5, 5, 4}, {3, 4, 2}, {6, 5, 4}, {4, 4, 2}};
  std::vector<UnitCounts> b = {{5, 5, 3}, {3, 4, 3}, {6, 5, 3}, {4, 4, 2}};
  for (PairedStat stat : {PairedStat::Precision, PairedStat::FScore}) {
    double exact = oracle::exhaustive_randomization_p(a, b, stat);
    SignificanceResult lib =
        randomization_test(a, b, stat, 10000, 1, RandMode::Exhaustive);
    CHECK(lib.p_value == doctest::Approx(exact).epsilon(1e-12));
    for (std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
      SignificanceResult sampled =
          randomization_test(a, b, stat, 10000, seed, RandMode::Sampled);
      CHECK(std::abs(sampled.p_value - exact) <= 0.02);
    }
  }
}

TEST_CASE("strict dominance over 12 units is deep in the tail") {
  std::vector<UnitCounts> a(12, UnitCounts{10, 10, 9});
  std::vector<UnitCounts> b(12, UnitCounts{10, 10, 5});
  SignificanceResult r =
      randomization_test(a, b, PairedStat::FScore, 10000, 3, RandMode::Auto);
  CHECK(r.exhaustive);
  CHECK(r.p_value == doctest::Approx(1.0 / 4096.0));
  CHECK(r.p_value < 0.001);
}

TEST_CASE("randomization test is deterministic for a fixed seed") {
  std::vector<UnitCounts> a = {{5, 5, 4}, {3, 4, 2}, {6, 5, 4}};
  std::vector<UnitCounts> b = {{5, 5, 3}, {3, 4, 3}, {6, 5, 3}};
  auto r1 = randomization_test(a, b, PairedStat::FScore, 5000, 123, RandMode::Sampled);
  auto r2 = randomization_test(a, b, PairedStat::FScore, 5000, 123, RandMode::Sampled);
  CHECK(r1.p_value == r2.p_value);
  auto r3 = randomization_test(a, b, PairedStat::FScore, 5000, 124, RandMode::Sampled);
  CHECK(r1.p_value != r3.p_value);  // different seed, different sample
  CHECK_THROWS_AS(randomization_test({}, {}, PairedStat::FScore, 100, 1), Error);
}

TEST_CASE("recall flags align to the key in canonical order") {
  AnnotationLayer key = {{{0, 1, "subj"}, {2, 1, "obj"}}, {{0, 3, "subj"}}};
  AnnotationLayer hyp = {{{0, 1, "subj"}}, {{1, 3, "subj"}}};
  auto flags = recall_flags(hyp, key);
  REQUIRE(flags.size() == 3);
  CHECK(flags[0] == 1);
  CHECK(flags[1] == 0);
  CHECK(flags[2] == 0);
  auto units = per_unit_counts(hyp, key);
  REQUIRE(units.size() == 2);
  CHECK(units[0].key_total == 2);
  CHECK(units[0].claimed == 1);
  CHECK(units[0].correct == 1);
  CHECK(units[1].correct == 0);
}
