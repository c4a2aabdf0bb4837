#include <doctest.h>

#include <random>

#include "graft/tbl.hpp"
#include "graft/util.hpp"
#include "oracles.hpp"

using namespace graft;

namespace {

Corpus small_corpus(const std::string& scheme_labels_csv = "a b") {
  // "n1 v1 n2 p1 n3" with one NP chunk and one hint
  Corpus c;
  c.header.pos_tags = {"N", "V", "P", "D"};
  c.header.chunk_kinds = {"NP"};
  std::vector<std::string> labels;
  for (auto part : split(std::string_view(scheme_labels_csv), ' '))
    labels.emplace_back(part);
  c.header.schemes["key"] = labels;
  Sentence s;
  s.tokens = {{0, "n1", "N"}, {1, "v1", "V"}, {2, "d1", "D"},
              {3, "n2", "N"}, {4, "p1", "P"}, {5, "n3", "N"}};
  s.chunks = {{2, 3, "NP", 3}};
  s.hints = {{4, 3}};
  c.sentences.push_back(s);
  normalize(c);
  validate(c);
  return c;
}

}  // namespace

TEST_CASE("candidate sites: one-token sentence has none") {
  Corpus c;
  c.header.pos_tags = {"N"};
  Sentence s;
  s.tokens = {{0, "x", "N"}};
  c.sentences.push_back(s);
  CHECK(candidate_sites(c.sentences[0], 10).empty());
}

TEST_CASE("candidate sites: both ordered pairs of two chunk heads") {
  Sentence s;
  s.tokens = {{0, "a", "D"}, {1, "b", "N"}, {2, "c", "D"}, {3, "d", "N"}};
  s.chunks = {{0, 1, "NP", 1}, {2, 3, "NP", 3}};
  auto sites = candidate_sites(s, 10);
  bool fwd = false, back = false;
  for (Site site : sites) {
    if (site.source == 1 && site.target == 3) fwd = true;
    if (site.source == 3 && site.target == 1) back = true;
  }
  CHECK(fwd);
  CHECK(back);
  // chunk-internal non-head tokens are not anchors
  for (Site site : sites) {
    CHECK(site.source != 0);
    CHECK(site.source != 2);
  }
}

TEST_CASE("candidate sites: hint joins heads beyond the window") {
  Sentence s;
  for (int i = 0; i < 6; ++i) s.tokens.push_back({i, "w" + std::to_string(i), "N"});
  s.chunks = {{0, 0, "NP", 0}, {5, 5, "NP", 5}};
  s.hints = {{0, 5}};
  auto sites = candidate_sites(s, 2);
  bool via_hint = false;
  for (Site site : sites)
    if (site.source == 0 && site.target == 5) via_hint = true;
  CHECK(via_hint);
  // without the hint the pair is outside the window
  s.hints.clear();
  bool still_there = false;
  for (Site site : candidate_sites(s, 2))
    if (site.source == 0 && site.target == 5) still_there = true;
  CHECK_FALSE(still_there);
}

TEST_CASE("score_rule: a rule matching nowhere scores 0") {
  Corpus c = small_corpus();
  AnnotationState state = AnnotationState::blank(1);
  AnnotationLayer key = {{{0, 1, "a"}}};
  TransformationRule rule = parse_rule_line("pos-src\tsp=X\tADD:a\t0");
  CHECK(score_rule(rule, c, state, key, TblConfig{}) == 0);
}

TEST_CASE("score_rule: adding exactly one missing key arc scores +1") {
  Corpus c = small_corpus();
  AnnotationState state = AnnotationState::blank(1);
  AnnotationLayer key = {{{3, 1, "a"}}};
  // word-pair pins the single (n2 -> v1) site
  TransformationRule rule = parse_rule_line("word-pair\tsw=n2;tw=v1\tADD:a\t0");
  CHECK(score_rule(rule, c, state, key, TblConfig{}) == 1);
}

TEST_CASE("score_rule agrees with brute-force recount on random rules") {
  std::mt19937_64 rng(41);
  TblConfig config;
  config.window = 5;
  int rounds = 0;
  while (rounds < 100) {
    oracle::TinyProblem problem = oracle::random_tiny_problem(rng);
    // draw a handful of random rules from the exhaustive space via the
    // error-grounded learner universe: simplest is to reuse generated
    // conditions from feature values at random sites
    for (int r = 0; r < 5 && rounds < 100; ++r, ++rounds) {
      const Sentence& sent =
          problem.corpus.sentences[rng() % problem.corpus.sentences.size()];
      auto sites = candidate_sites(sent, config.window);
      if (sites.empty()) continue;
      Site site = sites[rng() % sites.size()];
      const std::string& sp = sent.tokens[site.source].pos;
      const std::string& tp = sent.tokens[site.target].pos;
      std::vector<TransformationRule> rules;
      rules.push_back(parse_rule_line("pos-pair\tsp=" + sp + ";tp=" + tp + "\tADD:a\t0"));
      rules.push_back(parse_rule_line("pos-src\tsp=" + sp + "\tREMOVE\t0"));
      rules.push_back(parse_rule_line("pos-tgt\ttp=" + tp + "\tRELABEL:a:b\t0"));
      rules.push_back(
          parse_rule_line("word-src\tsw=" + sent.tokens[site.source].word + "\tADD:b\t0"));
      for (const TransformationRule& rule : rules) {
        std::int64_t fast = score_rule(rule, problem.corpus, problem.initial, problem.key, config);
        std::int64_t slow =
            oracle::recount_score(rule, problem.corpus, problem.initial, problem.key,
                                  config.window);
        CHECK(fast == slow);
      }
    }
  }
}

TEST_CASE("learn_rules: initial == key learns nothing") {
  Corpus c = small_corpus();
  AnnotationLayer key = {{{3, 1, "a"}, {0, 1, "b"}}};
  AnnotationState initial{key};
  TblConfig config;
  auto rules = learn_rules(c, initial, key, config);
  CHECK(rules.empty());
}

TEST_CASE("learn_rules: one ADD rule can fix all errors at once") {
  // three sentences, each missing the same (N -> V, a) arc pattern
  Corpus c;
  c.header.pos_tags = {"N", "V"};
  c.header.schemes["key"] = {"a"};
  AnnotationLayer key;
  for (int i = 0; i < 3; ++i) {
    Sentence s;
    s.tokens = {{0, "n", "N"}, {1, "v", "V"}};
    s.sets["key"].insert({0, 1, "a"});
    c.sentences.push_back(s);
    key.push_back({{0, 1, "a"}});
  }
  normalize(c);
  validate(c);
  TblConfig config;
  AnnotationState final_state;
  auto rules = learn_rules(c, AnnotationState::blank(3), key, config, &final_state);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].gain == 3);
  CHECK(rules[0].action.kind == RuleAction::Kind::Add);
  CHECK(rules[0].action.label == "a");
  CHECK(total_errors(final_state, key) == 0);
  // exhaustive enumeration cannot beat the greedy first rule
  CHECK(oracle::exhaustive_best_score(c, AnnotationState::blank(3), key, {"a"}, config.window) ==
        3);
}

TEST_CASE("greedy first rule matches exhaustive search on tiny corpora") {
  std::mt19937_64 rng(77);
  TblConfig config;
  config.window = 5;
  config.min_gain = 1;
  for (int round = 0; round < 12; ++round) {
    oracle::TinyProblem problem = oracle::random_tiny_problem(rng);
    AnnotationState final_state;
    auto rules = learn_rules(problem.corpus, problem.initial, problem.key, config, &final_state);
    std::int64_t best = oracle::exhaustive_best_score(problem.corpus, problem.initial,
                                                      problem.key, problem.labels, config.window);
    if (rules.empty()) {
      CHECK(best < config.min_gain);
    } else {
      CHECK(rules.front().gain == best);
    }
    // replay equality
    AnnotationState replayed = apply_rules(rules, problem.corpus, problem.initial, config);
    CHECK(replayed == final_state);
  }
}

TEST_CASE("apply_rules: empty list is the identity") {
  Corpus c = small_corpus();
  AnnotationState state{AnnotationLayer{{{3, 1, "a"}}}};
  CHECK(apply_rules({}, c, state, TblConfig{}) == state);
}

TEST_CASE("apply_rules: RELABEL without the from-label is a no-op") {
  Corpus c = small_corpus();
  AnnotationState state{AnnotationLayer{{{3, 1, "a"}}}};
  TransformationRule rule = parse_rule_line("pos-pair\tsp=N;tp=V\tRELABEL:b:a\t0");
  CHECK(apply_rules({rule}, c, state, TblConfig{}) == state);
}

TEST_CASE("accepted rules strictly reduce training errors by their gain") {
  std::mt19937_64 rng(101);
  TblConfig config;
  config.window = 5;
  config.min_gain = 1;
  for (int round = 0; round < 8; ++round) {
    oracle::TinyProblem problem = oracle::random_tiny_problem(rng);
    AnnotationState final_state;
    auto rules = learn_rules(problem.corpus, problem.initial, problem.key, config, &final_state);
    // learn_rules itself asserts per-step consistency; check the totals here
    std::int64_t before = total_errors(problem.initial, problem.key);
    std::int64_t after = total_errors(final_state, problem.key);
    std::int64_t promised = 0;
    for (const auto& rule : rules) {
      CHECK(rule.gain >= config.min_gain);
      promised += rule.gain;
    }
    CHECK(before - after == promised);
  }
}

TEST_CASE("learning is deterministic") {
  std::mt19937_64 rng(55);
  oracle::TinyProblem problem = oracle::random_tiny_problem(rng);
  TblConfig config;
  config.window = 5;
  config.min_gain = 1;
  auto r1 = learn_rules(problem.corpus, problem.initial, problem.key, config);
  auto r2 = learn_rules(problem.corpus, problem.initial, problem.key, config);
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].serialize() == r2[i].serialize());
}

TEST_CASE("rule files round-trip") {
  RuleList list;
  list.window = 7;
  list.rules.push_back(parse_rule_line("pos-pair-dist\tsp=N;tp=V;d=+2\tADD:subj\t14"));
  list.rules.push_back(parse_rule_line("arc-site\tsp=N;tp=V;a=subj,obj\tREMOVE\t3"));
  list.rules.push_back(parse_rule_line("ctx-pos-src\tsp=N;off=-1;p=D\tRELABEL:obj:subj\t2"));
  std::string text = rules_to_text(list);
  RuleList back = rules_from_text(text);
  CHECK(back.window == 7);
  REQUIRE(back.rules.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.rules[i] == list.rules[i]);
  CHECK(rules_to_text(back) == text);

  CHECK_THROWS_AS(rules_from_text("pos-src\tsp=N\tADD:a\t1\n"), Error);  // missing header
  CHECK_THROWS_AS(parse_rule_line("nope\tsp=N\tADD:a\t1"), ParseError);
  CHECK_THROWS_AS(parse_rule_line("pos-src\ttp=N\tADD:a\t1"), ParseError);  // wrong slot
  CHECK_THROWS_AS(parse_rule_line("pos-src\tsp=N\tEXPLODE\t1"), ParseError);
}

TEST_CASE("template inventory is exposed for configuration") {
  const auto& inventory = template_inventory();
  CHECK(inventory.size() >= 12);
  TblConfig config;
  config.templates = {"pos-pair", "word-src"};
  Corpus c = small_corpus();
  AnnotationLayer key = {{{3, 1, "a"}}};
  auto rules = learn_rules(c, AnnotationState::blank(1), key, config);
  for (const auto& rule : rules)
    CHECK((rule.template_id == "pos-pair" || rule.template_id == "word-src"));
  TblConfig bad;
  bad.templates = {"made-up"};
  CHECK_THROWS_AS(learn_rules(c, AnnotationState::blank(1), key, bad), Error);
}
