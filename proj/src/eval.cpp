#include "graft/eval.hpp"

#include <algorithm>
#include <cmath>

#include "graft/util.hpp"

namespace graft {

double recall_pct(const ScoreCounts& c) {
  if (c.key_total == 0) return 100.0;
  return 100.0 * static_cast<double>(c.correct) / static_cast<double>(c.key_total);
}

double precision_pct(const ScoreCounts& c) {
  if (c.claimed == 0) return 100.0;
  return 100.0 * static_cast<double>(c.correct) / static_cast<double>(c.claimed);
}

double f_score(double recall, double precision) {
  if (recall + precision <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double f_pct(const ScoreCounts& c) { return f_score(recall_pct(c), precision_pct(c)); }

EvalReport score(const AnnotationLayer& hypothesis, const AnnotationLayer& key) {
  if (hypothesis.size() != key.size())
    throw Error("hypothesis and key cover different sentence counts (" +
                std::to_string(hypothesis.size()) + " vs " + std::to_string(key.size()) + ")");
  EvalReport report;
  for (std::size_t si = 0; si < key.size(); ++si) {
    const auto& hyp = hypothesis[si];
    const auto& gold = key[si];
    report.overall.key_total += static_cast<std::int64_t>(gold.size());
    report.overall.claimed += static_cast<std::int64_t>(hyp.size());
    for (const GRInstance& arc : gold) report.per_label[arc.label].key_total += 1;
    for (const GRInstance& arc : hyp) report.per_label[arc.label].claimed += 1;
    // sorted-vector intersection
    std::size_t i = 0, j = 0;
    while (i < hyp.size() && j < gold.size()) {
      if (hyp[i] < gold[j]) {
        ++i;
      } else if (gold[j] < hyp[i]) {
        ++j;
      } else {
        report.overall.correct += 1;
        report.per_label[hyp[i].label].correct += 1;
        ++i;
        ++j;
      }
    }
  }
  report.r = recall_pct(report.overall);
  report.p = precision_pct(report.overall);
  report.f = f_score(report.r, report.p);
  return report;
}

double error_reduction(double f_ia, double f_ni) {
  if (f_ni >= 100.0) throw Error("error_reduction undefined for baseline F = 100");
  return 100.0 * (f_ia - f_ni) / (100.0 - f_ni);
}

double binomial_tail_one_sided(int n, int k) {
  if (n < 0 || k < 0 || k > n) throw Error("binomial_tail_one_sided: bad arguments");
  if (n == 0) return 1.0;
  if (n <= 62) {
    // Integer-exact: sum_{i>=k} C(n,i), then one division.
    unsigned __int128 coeff = 1;  // C(n,0)
    unsigned __int128 sum = 0;
    for (int i = 0; i <= n; ++i) {
      if (i >= k) sum += coeff;
      coeff = coeff * static_cast<unsigned>(n - i) / static_cast<unsigned>(i + 1);
    }
    return static_cast<double>(static_cast<long double>(sum) /
                               std::exp2l(static_cast<long double>(n)));
  }
  if (n > 1000) throw Error("binomial_tail_one_sided: n > 1000 not supported");
  long double total = 0.0L;
  for (int i = k; i <= n; ++i) {
    long double log_term = std::lgamma(n + 1.0L) - std::lgamma(i + 1.0L) -
                           std::lgamma(n - i + 1.0L) - n * std::log(2.0L);
    total += std::exp(log_term);
  }
  return static_cast<double>(std::min(total, 1.0L));
}

SignificanceResult sign_test_recall(const std::vector<std::uint8_t>& recalled_a,
                                    const std::vector<std::uint8_t>& recalled_b) {
  if (recalled_a.size() != recalled_b.size())
    throw Error("sign test: flag vectors differ in length");
  int n = 0, k = 0;
  for (std::size_t i = 0; i < recalled_a.size(); ++i) {
    bool a = recalled_a[i] != 0;
    bool b = recalled_b[i] != 0;
    if (a == b) continue;  // ties are discarded
    ++n;
    if (a) ++k;
  }
  SignificanceResult result;
  result.kind = TestKind::SignTest;
  result.n_units = n;
  if (n == 0) {
    result.p_value = 1.0;
    result.no_discordant = true;
    return result;
  }
  result.p_value = binomial_tail_one_sided(n, k);
  return result;
}

namespace {

double pooled_stat(const std::vector<UnitCounts>& units, PairedStat stat) {
  ScoreCounts total;
  for (const UnitCounts& u : units) {
    total.key_total += u.key_total;
    total.claimed += u.claimed;
    total.correct += u.correct;
  }
  if (stat == PairedStat::Precision) return precision_pct(total);
  return f_pct(total);
}

}  // namespace

SignificanceResult randomization_test(const std::vector<UnitCounts>& units_a,
                                      const std::vector<UnitCounts>& units_b, PairedStat stat,
                                      int iterations, std::uint64_t seed, RandMode mode) {
  if (units_a.size() != units_b.size())
    throw Error("randomization test: unit vectors differ in length");
  if (units_a.empty()) throw Error("randomization test: zero units");
  const std::size_t n = units_a.size();
  const double observed = pooled_stat(units_a, stat) - pooled_stat(units_b, stat);

  SignificanceResult result;
  result.kind = TestKind::Randomization;
  result.n_units = static_cast<std::int64_t>(n);
  result.observed_delta = observed;

  auto delta_for = [&](auto&& swapped) {
    ScoreCounts ta, tb;
    for (std::size_t i = 0; i < n; ++i) {
      const UnitCounts& a = swapped(i) ? units_b[i] : units_a[i];
      const UnitCounts& b = swapped(i) ? units_a[i] : units_b[i];
      ta.key_total += a.key_total;
      ta.claimed += a.claimed;
      ta.correct += a.correct;
      tb.key_total += b.key_total;
      tb.claimed += b.claimed;
      tb.correct += b.correct;
    }
    double sa = stat == PairedStat::Precision ? precision_pct(ta) : f_pct(ta);
    double sb = stat == PairedStat::Precision ? precision_pct(tb) : f_pct(tb);
    return sa - sb;
  };

  bool exhaustive = mode == RandMode::Exhaustive || (mode == RandMode::Auto && n <= 20);
  if (exhaustive) {
    if (n > 30) throw Error("randomization test: too many units for exhaustive enumeration");
    const std::uint64_t patterns = 1ULL << n;
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      double d = delta_for([&](std::size_t i) { return (mask >> i) & 1ULL; });
      if (d >= observed) ++hits;
    }
    result.p_value = static_cast<double>(hits) / static_cast<double>(patterns);
    result.exhaustive = true;
    return result;
  }

  if (iterations <= 0) throw Error("randomization test: iterations must be positive");
  std::int64_t hits = 0;
  std::vector<std::uint8_t> bits(n);
  for (int it = 0; it < iterations; ++it) {
    // Counter-based bit stream: each iteration draws from its own seed, so
    // the result does not depend on any evaluation schedule.
    std::uint64_t state = mix64(seed, static_cast<std::uint64_t>(it) + 1);
    std::uint64_t word = 0;
    int avail = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (avail == 0) {
        word = splitmix64(state);
        avail = 64;
      }
      bits[i] = static_cast<std::uint8_t>(word & 1ULL);
      word >>= 1;
      --avail;
    }
    double d = delta_for([&](std::size_t i) { return bits[i] != 0; });
    if (d >= observed) ++hits;
  }
  result.p_value = static_cast<double>(1 + hits) / static_cast<double>(1 + iterations);
  return result;
}

std::vector<std::uint8_t> recall_flags(const AnnotationLayer& hypothesis,
                                       const AnnotationLayer& key) {
  if (hypothesis.size() != key.size())
    throw Error("recall_flags: hypothesis and key cover different sentence counts");
  std::vector<std::uint8_t> flags;
  for (std::size_t si = 0; si < key.size(); ++si) {
    const auto& hyp = hypothesis[si];
    for (const GRInstance& arc : key[si])
      flags.push_back(std::binary_search(hyp.begin(), hyp.end(), arc) ? 1 : 0);
  }
  return flags;
}

std::vector<UnitCounts> per_unit_counts(const AnnotationLayer& hypothesis,
                                        const AnnotationLayer& key) {
  if (hypothesis.size() != key.size())
    throw Error("per_unit_counts: hypothesis and key cover different sentence counts");
  std::vector<UnitCounts> units(key.size());
  for (std::size_t si = 0; si < key.size(); ++si) {
    units[si].key_total = static_cast<std::int64_t>(key[si].size());
    units[si].claimed = static_cast<std::int64_t>(hypothesis[si].size());
    const auto& hyp = hypothesis[si];
    for (const GRInstance& arc : key[si])
      if (std::binary_search(hyp.begin(), hyp.end(), arc)) units[si].correct += 1;
  }
  return units;
}

std::string format_score_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::string out = "condition\tR\tR%\tP%\tF%\tER%\n";
  for (const auto& [name, rep] : rows) {
    out += name;
    out += '\t';
    out += std::to_string(rep.overall.correct);
    out += '\t';
    out += fmt1(rep.r);
    out += '\t';
    out += fmt1(rep.p);
    out += '\t';
    out += fmt1(rep.f);
    out += '\t';
    out += rep.er_vs_baseline ? fmt1(*rep.er_vs_baseline) : std::string();
    out += '\n';
  }
  return out;
}

std::string format_per_label(const std::string& name, const EvalReport& report) {
  std::string out = "per-label\t" + name + "\tkey\tR%\tP%\tF%\n";
  for (const auto& [label, counts] : report.per_label) {
    out += label;
    out += '\t';
    out += '\t';
    out += std::to_string(counts.key_total);
    out += '\t';
    out += fmt1(recall_pct(counts));
    out += '\t';
    out += fmt1(precision_pct(counts));
    out += '\t';
    out += fmt1(f_pct(counts));
    out += '\n';
  }
  return out;
}

std::string format_significance(const std::vector<SignificanceRow>& rows) {
  std::string out = "A\tB\tmetric\ttest\tp\tverdict\n";
  for (const SignificanceRow& row : rows) {
    out += row.a;
    out += '\t';
    out += row.b;
    out += '\t';
    out += row.metric;
    out += '\t';
    out += row.result.kind == TestKind::SignTest ? "sign" : "randomization";
    out += '\t';
    out += fmt_p(row.result.p_value);
    out += '\t';
    if (row.result.significant_5())
      out += "significant-5%";
    else if (row.result.significant_10())
      out += "significant-10%";
    else
      out += "not-significant";
    out += '\n';
  }
  return out;
}

}  // namespace graft
