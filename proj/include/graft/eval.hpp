// graft -- scoring against a key: R/P/F, error reduction, and the two
// one-sided significance tests (matched-pairs sign test, matched-pairs
// randomization test).
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graft/corpus.hpp"

namespace graft {

struct ScoreCounts {
  std::int64_t key_total = 0;
  std::int64_t claimed = 0;
  std::int64_t correct = 0;
};

// Percentages from raw counts. Vacuous sides score 100 so that a hypothesis
// equal to its key is always a perfect match, even when both are empty.
double recall_pct(const ScoreCounts& c);
double precision_pct(const ScoreCounts& c);
double f_score(double recall, double precision);
double f_pct(const ScoreCounts& c);

struct EvalReport {
  ScoreCounts overall;
  double r = 0.0;
  double p = 0.0;
  double f = 0.0;
  std::map<std::string, ScoreCounts> per_label;
  std::optional<double> er_vs_baseline;
};

// Exact-triple scoring. Recall-side label partition follows the key label,
// precision-side follows the hypothesis label.
EvalReport score(const AnnotationLayer& hypothesis, const AnnotationLayer& key);

// 100 * (f_ia - f_ni) / (100 - f_ni); negative when the initial-annotation
// run scores worse. f_ni == 100 has no missing F-score to reduce.
double error_reduction(double f_ia, double f_ni);

enum class TestKind { SignTest, Randomization };

struct SignificanceResult {
  TestKind kind = TestKind::SignTest;
  double p_value = 1.0;
  std::int64_t n_units = 0;      // discordant pairs (sign) or paired units (randomization)
  double observed_delta = 0.0;   // randomization only
  bool no_discordant = false;    // sign test with zero discordant pairs
  bool exhaustive = false;       // randomization enumerated all swap patterns
  bool significant_5() const { return p_value <= 0.05; }
  bool significant_10() const { return p_value <= 0.10; }
};

// One-sided exact sign test on matched recall flags: p = P[Bin(n, 1/2) >= k]
// where n counts discordant pairs and k counts pairs favoring A.
SignificanceResult sign_test_recall(const std::vector<std::uint8_t>& recalled_a,
                                    const std::vector<std::uint8_t>& recalled_b);

// Exact one-sided binomial tail used by the sign test; integer-exact for
// n <= 62, log-space for larger n (supported up to n = 1000).
double binomial_tail_one_sided(int n, int k);

struct UnitCounts {
  std::int64_t key_total = 0;
  std::int64_t claimed = 0;
  std::int64_t correct = 0;
};

enum class PairedStat { Precision, FScore };
enum class RandMode { Auto, Exhaustive, Sampled };

// Matched-pairs randomization test over per-unit (sentence) counts: swap the
// two systems' counts per unit, recompute the pooled statistic delta, and
// count resampled deltas >= the observed one. Exhaustive for <= 20 units in
// Auto mode, otherwise sampled with +1/+1 smoothing.
SignificanceResult randomization_test(const std::vector<UnitCounts>& units_a,
                                      const std::vector<UnitCounts>& units_b, PairedStat stat,
                                      int iterations, std::uint64_t seed,
                                      RandMode mode = RandMode::Auto);

// Key-arc recall flags in canonical order (sentence index, then sorted arcs);
// aligned across systems scored against the same key.
std::vector<std::uint8_t> recall_flags(const AnnotationLayer& hypothesis,
                                       const AnnotationLayer& key);

std::vector<UnitCounts> per_unit_counts(const AnnotationLayer& hypothesis,
                                        const AnnotationLayer& key);

// Report rendering (tab-separated, mirrors the result-table shape).
struct SignificanceRow {
  std::string a;
  std::string b;
  std::string metric;  // recall | precision | f
  SignificanceResult result;
};

std::string format_score_table(const std::vector<std::pair<std::string, EvalReport>>& rows);
std::string format_per_label(const std::string& name, const EvalReport& report);
std::string format_significance(const std::vector<SignificanceRow>& rows);

}  // namespace graft
