#include <doctest.h>

#include <algorithm>
#include <random>

#include "graft/mapping.hpp"
#include "oracles.hpp"

using namespace graft;

namespace {

AnnotationLayer layer(std::vector<std::vector<GRInstance>> arcs) {
  for (auto& sentence : arcs) sentence = sorted_unique(std::move(sentence));
  return arcs;
}

}  // namespace

TEST_CASE("decompose_nary unrolls 3- and 4-element relations") {
  std::vector<NaryRelation> rels = {{"L", {1, 2, 3}}};
  auto subs = decompose_nary(rels);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0] == GRInstance{1, 2, "L/arg2"});
  CHECK(subs[1] == GRInstance{1, 3, "L/arg3"});

  rels = {{"pred", {4, 0, 2, 3}}};
  subs = decompose_nary(rels);
  REQUIRE(subs.size() == 3);
  CHECK(subs[0] == GRInstance{4, 0, "pred/arg2"});
  CHECK(subs[1] == GRInstance{4, 2, "pred/arg3"});
  CHECK(subs[2] == GRInstance{4, 3, "pred/arg4"});

  CHECK(decompose_nary({}).empty());
  CHECK_THROWS_AS(decompose_nary({{"L", {1, 2}}}), Error);
  CHECK_THROWS_AS(decompose_nary({{"L", {1, 2, 3, 4, 5}}}), Error);
}

TEST_CASE("np-sbj style renaming is learned") {
  // np-sbj co-occurs overwhelmingly with subj
  AnnotationLayer key = layer({{{0, 1, "subj"}}, {{2, 3, "subj"}}, {{1, 4, "subj"}}});
  AnnotationLayer sys = layer({{{0, 1, "np-sbj"}}, {{2, 3, "np-sbj"}}, {{1, 4, "np-sbj"}}});
  LabelMapping m = learn_mapping(sys, key);
  REQUIRE(m.entries.count("np-sbj"));
  REQUIRE(m.entries.at("np-sbj").target.has_value());
  CHECK(*m.entries.at("np-sbj").target == "subj");
  CHECK(m.entries.at("np-sbj").correct == 3);
  CHECK(m.entries.at("np-sbj").false_alarms == 0);
  CHECK(m.null_fraction == doctest::Approx(0.0));
}

TEST_CASE("a co-occurrence tie translates to null") {
  // e1 co-occurs 3x with t1 and 3x with t2
  AnnotationLayer key = layer({
      {{0, 1, "t1"}, {0, 1, "t2"}},
      {{2, 3, "t1"}, {2, 3, "t2"}},
      {{4, 5, "t1"}, {4, 5, "t2"}},
  });
  AnnotationLayer sys = layer({{{0, 1, "e1"}}, {{2, 3, "e1"}}, {{4, 5, "e1"}}});
  LabelMapping m = learn_mapping(sys, key);
  CHECK_FALSE(m.entries.at("e1").target.has_value());
  CHECK(m.entries.at("e1").win_count == 3);
  CHECK(m.entries.at("e1").runner_up == 3);
  CHECK(m.null_fraction == doctest::Approx(100.0));
}

TEST_CASE("unique winner with more false alarms than correct goes null") {
  // e1 appears 5x; co-occurs 2x with t1 (unique max), 3 instances mismatch.
  AnnotationLayer key = layer({
      {{0, 1, "t1"}},
      {{2, 3, "t1"}},
      {{4, 5, "t2"}},
      {},
      {},
  });
  AnnotationLayer sys = layer({
      {{0, 1, "e1"}},
      {{2, 3, "e1"}},
      {{4, 5, "e1"}},
      {{0, 2, "e1"}},
      {{1, 3, "e1"}},
  });
  LabelMapping m = learn_mapping(sys, key);
  const MappingEntry& e = m.entries.at("e1");
  CHECK_FALSE(e.target.has_value());
  CHECK(e.win_count == 2);
  CHECK(e.correct == 2);
  CHECK(e.false_alarms == 3);
  // the independent oracle agrees on the whole mapping
  CHECK(oracle::brute_force_mapping(sys, key) == m);
}

TEST_CASE("apply_mapping translates, drops nulls, collapses duplicates") {
  LabelMapping m;
  m.entries["e1"] = MappingEntry{std::string("t1"), 0, 0, 0, 0};
  m.entries["e2"] = MappingEntry{std::nullopt, 0, 0, 0, 0};
  AnnotationLayer in = layer({{{0, 1, "e1"}, {2, 3, "e2"}}});
  TranslationResult out = apply_mapping(m, in);
  CHECK(out.annotations == layer({{{0, 1, "t1"}}}));
  CHECK(out.dropped_null == 1);
  CHECK(out.dropped_unknown == 0);

  // unknown labels are dropped and counted
  AnnotationLayer strange = layer({{{0, 1, "mystery"}}});
  TranslationResult res = apply_mapping(m, strange);
  CHECK(res.annotations == layer({{}}));
  CHECK(res.dropped_unknown == 1);

  // duplicates arising from relabeling collapse to one arc
  m.entries["e3"] = MappingEntry{std::string("t1"), 0, 0, 0, 0};
  AnnotationLayer dup = layer({{{0, 1, "e1"}, {0, 1, "e3"}}});
  CHECK(apply_mapping(m, dup).annotations == layer({{{0, 1, "t1"}}}));
}

TEST_CASE("empty mapping degenerates to blank initial annotations") {
  LabelMapping m;
  AnnotationLayer in = layer({{{0, 1, "e1"}}, {{2, 3, "e2"}}});
  TranslationResult out = apply_mapping(m, in);
  CHECK(layer_arc_count(out.annotations) == 0);
  CHECK(out.dropped_unknown == 2);
}

TEST_CASE("translated endpoints are a subset of input endpoints") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    auto [sys, key] = oracle::random_training_pair(rng);
    LabelMapping m = learn_mapping(sys, key);
    TranslationResult out = apply_mapping(m, sys);
    for (std::size_t si = 0; si < sys.size(); ++si) {
      for (const GRInstance& arc : out.annotations[si]) {
        bool found = false;
        for (const GRInstance& src : sys[si])
          if (src.source == arc.source && src.target == arc.target) found = true;
        CHECK(found);
      }
    }
    // non-null entries honor correct >= false alarms by construction
    for (const auto& [e, entry] : m.entries)
      if (entry.target) CHECK(entry.correct >= entry.false_alarms);
  }
}

TEST_CASE("learn_mapping is deterministic and order-insensitive") {
  std::mt19937_64 rng(5);
  auto [sys, key] = oracle::random_training_pair(rng);
  LabelMapping a = learn_mapping(sys, key);
  LabelMapping b = learn_mapping(sys, key);
  CHECK(a == b);
  // shuffling arc order within sentences does not change the result
  AnnotationLayer shuffled = sys;
  for (auto& arcs : shuffled) std::reverse(arcs.begin(), arcs.end());
  for (auto& arcs : shuffled) arcs = sorted_unique(std::move(arcs));
  CHECK(learn_mapping(shuffled, key) == a);
}

TEST_CASE("mismatched sentence counts are an error") {
  CHECK_THROWS_AS(learn_mapping(AnnotationLayer(2), AnnotationLayer(3)), Error);
}

TEST_CASE("mapping serialization round-trips") {
  AnnotationLayer key = layer({{{0, 1, "subj"}, {2, 1, "obj"}}, {{0, 1, "subj"}}});
  AnnotationLayer sys = layer({{{0, 1, "np-sbj"}, {2, 1, "np-obj"}}, {{0, 1, "np-sbj"}, {3, 1, "x"}}});
  LabelMapping m = learn_mapping(sys, key);
  std::string text = mapping_to_text(m);
  LabelMapping back = mapping_from_text(text);
  CHECK(back == m);
  CHECK(mapping_to_text(back) == text);
  CHECK_THROWS_AS(mapping_from_text("np-sbj\tsubj\t1\t0\t1\t0\n"), Error);  // no footer
}

TEST_CASE("translated training output matches the oracle's predicted counts") {
  // Hand-built 10-sentence training set, collision-free so no duplicates
  // collapse: measured correct/false alarms equal the entry provenance.
  AnnotationLayer key(10), sys(10);
  for (int si = 0; si < 6; ++si) {
    key[si] = {{0, 1, "t1"}};
    sys[si] = {{0, 1, "e1"}};
  }
  for (int si = 6; si < 8; ++si) {
    key[si] = {{0, 1, "t2"}};
    sys[si] = {{0, 1, "e1"}};
  }
  for (int si = 8; si < 10; ++si) sys[si] = {{0, 1, "e2"}};
  for (int si = 0; si < 2; ++si) {
    key[si].push_back({2, 3, "t2"});
    sys[si].push_back({2, 3, "e2"});
  }
  for (auto& arcs : key) arcs = sorted_unique(std::move(arcs));
  for (auto& arcs : sys) arcs = sorted_unique(std::move(arcs));

  LabelMapping m = learn_mapping(sys, key);
  CHECK(m == oracle::brute_force_mapping(sys, key));
  REQUIRE(m.entries.at("e1").target.has_value());
  CHECK(*m.entries.at("e1").target == "t1");
  CHECK(m.entries.at("e1").correct == 6);
  CHECK(m.entries.at("e1").false_alarms == 2);
  REQUIRE(m.entries.at("e2").target.has_value());
  CHECK(*m.entries.at("e2").target == "t2");
  CHECK(m.entries.at("e2").correct == 2);
  CHECK(m.entries.at("e2").false_alarms == 2);

  TranslationResult out = apply_mapping(m, sys);
  std::int64_t correct = 0, claimed = 0;
  for (std::size_t si = 0; si < key.size(); ++si) {
    claimed += static_cast<std::int64_t>(out.annotations[si].size());
    for (const GRInstance& arc : out.annotations[si])
      if (std::binary_search(key[si].begin(), key[si].end(), arc)) ++correct;
  }
  CHECK(correct == 8);
  CHECK(claimed == 12);
}
