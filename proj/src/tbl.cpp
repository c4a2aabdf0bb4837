#include "graft/tbl.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "graft/util.hpp"

namespace graft {

namespace {

// ---------------------------------------------------------------------------
// Template inventory. Conditions conjoin 1-3 atoms over endpoint POS/word/
// chunk kind, neighbour POS/chunk at offsets -2..+2, signed distance bucket,
// the arc signature at the site, and attachment-hint linkage.
// ---------------------------------------------------------------------------

enum TmplIdx : int {
  kPosSrc = 0,
  kPosTgt,
  kPosPair,
  kPosPairDist,
  kWordSrc,
  kWordTgt,
  kWordPair,
  kWordSrcPosTgt,
  kPosSrcWordTgt,
  kWordSrcPosTgtDist,
  kPosSrcWordTgtDist,
  kChunkPair,
  kChunkPairDist,
  kCtxPosSrc,
  kCtxPosTgt,
  kCtxChunkSrc,
  kCtxChunkTgt,
  kHintPos,
  kArcSite,
  kNumTemplates
};

struct TemplateDef {
  std::string id;
  std::vector<std::string> slots;
  bool is_ctx = false;  // enumerates one variant per neighbour offset
  bool is_arc = false;  // carries the state-dependent arc signature
};

const std::array<TemplateDef, kNumTemplates>& template_defs() {
  static const std::array<TemplateDef, kNumTemplates> defs = {{
      {"pos-src", {"sp"}},
      {"pos-tgt", {"tp"}},
      {"pos-pair", {"sp", "tp"}},
      {"pos-pair-dist", {"sp", "tp", "d"}},
      {"word-src", {"sw"}},
      {"word-tgt", {"tw"}},
      {"word-pair", {"sw", "tw"}},
      {"word-src-pos-tgt", {"sw", "tp"}},
      {"pos-src-word-tgt", {"sp", "tw"}},
      {"word-src-pos-tgt-dist", {"sw", "tp", "d"}},
      {"pos-src-word-tgt-dist", {"sp", "tw", "d"}},
      {"chunk-pair", {"sc", "tc"}},
      {"chunk-pair-dist", {"sc", "tc", "d"}},
      {"ctx-pos-src", {"sp", "off", "p"}, true},
      {"ctx-pos-tgt", {"tp", "off", "p"}, true},
      {"ctx-chunk-src", {"sp", "off", "c"}, true},
      {"ctx-chunk-tgt", {"tp", "off", "c"}, true},
      {"hint-pos", {"h", "sp", "tp"}},
      {"arc-site", {"sp", "tp", "a"}, false, true},
  }};
  return defs;
}

constexpr std::array<int, 4> kOffsets = {-2, -1, 1, 2};
constexpr std::array<const char*, 4> kOffsetNames = {"-2", "-1", "+1", "+2"};

int template_index(std::string_view id) {
  const auto& defs = template_defs();
  for (int i = 0; i < kNumTemplates; ++i)
    if (defs[i].id == id) return i;
  return -1;
}

std::string bucket_distance(int d) {
  std::string s = d < 0 ? "-" : "+";
  int m = std::abs(d);
  if (m <= 3)
    s += std::to_string(m);
  else if (m <= 5)
    s += "4-5";
  else if (m <= 10)
    s += "6-10";
  else
    s += ">10";
  return s;
}

struct SiteFeatures {
  std::string sp, tp, sw, tw, sc, tc, dist, hint;
  std::array<std::string, 4> src_pos_ctx, tgt_pos_ctx, src_chunk_ctx, tgt_chunk_ctx;
};

std::string pos_at(const Sentence& sent, int i) {
  if (i < 0 || i >= sent.size()) return "#";
  return sent.tokens[i].pos;
}

std::string chunk_at(const Sentence& sent, int i) {
  if (i < 0 || i >= sent.size()) return "#";
  const Chunk* c = sent.chunk_containing(i);
  return c ? c->kind : "O";
}

SiteFeatures compute_features(const Sentence& sent, Site site) {
  SiteFeatures f;
  f.sp = sent.tokens[site.source].pos;
  f.tp = sent.tokens[site.target].pos;
  f.sw = sent.tokens[site.source].word;
  f.tw = sent.tokens[site.target].word;
  f.sc = chunk_at(sent, site.source);
  f.tc = chunk_at(sent, site.target);
  f.dist = bucket_distance(site.target - site.source);
  f.hint = "n";
  for (const AttachmentHint& h : sent.hints) {
    if ((h.source == site.source && h.target == site.target) ||
        (h.source == site.target && h.target == site.source)) {
      f.hint = "y";
      break;
    }
  }
  for (std::size_t k = 0; k < kOffsets.size(); ++k) {
    f.src_pos_ctx[k] = pos_at(sent, site.source + kOffsets[k]);
    f.tgt_pos_ctx[k] = pos_at(sent, site.target + kOffsets[k]);
    f.src_chunk_ctx[k] = chunk_at(sent, site.source + kOffsets[k]);
    f.tgt_chunk_ctx[k] = chunk_at(sent, site.target + kOffsets[k]);
  }
  return f;
}

std::string one_slot_key(const TemplateDef& def, std::string_view v0) {
  std::string s = def.id;
  s += '\t';
  s += def.slots[0];
  s += '=';
  s += v0;
  return s;
}

std::string two_slot_key(const TemplateDef& def, std::string_view v0, std::string_view v1) {
  std::string s = one_slot_key(def, v0);
  s += ';';
  s += def.slots[1];
  s += '=';
  s += v1;
  return s;
}

std::string three_slot_key(const TemplateDef& def, std::string_view v0, std::string_view v1,
                           std::string_view v2) {
  std::string s = two_slot_key(def, v0, v1);
  s += ';';
  s += def.slots[2];
  s += '=';
  s += v2;
  return s;
}

// Static keys for one template at one site; ctx templates yield one key per
// offset, the arc-site template yields a prefix to be completed with the
// current arc signature.
void static_keys_for(int ti, const SiteFeatures& f, std::vector<std::string>& out) {
  const TemplateDef& def = template_defs()[ti];
  switch (ti) {
    case kPosSrc: out.push_back(one_slot_key(def, f.sp)); break;
    case kPosTgt: out.push_back(one_slot_key(def, f.tp)); break;
    case kPosPair: out.push_back(two_slot_key(def, f.sp, f.tp)); break;
    case kPosPairDist: out.push_back(three_slot_key(def, f.sp, f.tp, f.dist)); break;
    case kWordSrc: out.push_back(one_slot_key(def, f.sw)); break;
    case kWordTgt: out.push_back(one_slot_key(def, f.tw)); break;
    case kWordPair: out.push_back(two_slot_key(def, f.sw, f.tw)); break;
    case kWordSrcPosTgt: out.push_back(two_slot_key(def, f.sw, f.tp)); break;
    case kPosSrcWordTgt: out.push_back(two_slot_key(def, f.sp, f.tw)); break;
    case kWordSrcPosTgtDist: out.push_back(three_slot_key(def, f.sw, f.tp, f.dist)); break;
    case kPosSrcWordTgtDist: out.push_back(three_slot_key(def, f.sp, f.tw, f.dist)); break;
    case kChunkPair: out.push_back(two_slot_key(def, f.sc, f.tc)); break;
    case kChunkPairDist: out.push_back(three_slot_key(def, f.sc, f.tc, f.dist)); break;
    case kCtxPosSrc:
      for (std::size_t k = 0; k < kOffsets.size(); ++k)
        out.push_back(three_slot_key(def, f.sp, kOffsetNames[k], f.src_pos_ctx[k]));
      break;
    case kCtxPosTgt:
      for (std::size_t k = 0; k < kOffsets.size(); ++k)
        out.push_back(three_slot_key(def, f.tp, kOffsetNames[k], f.tgt_pos_ctx[k]));
      break;
    case kCtxChunkSrc:
      for (std::size_t k = 0; k < kOffsets.size(); ++k)
        out.push_back(three_slot_key(def, f.sp, kOffsetNames[k], f.src_chunk_ctx[k]));
      break;
    case kCtxChunkTgt:
      for (std::size_t k = 0; k < kOffsets.size(); ++k)
        out.push_back(three_slot_key(def, f.tp, kOffsetNames[k], f.tgt_chunk_ctx[k]));
      break;
    case kHintPos: out.push_back(three_slot_key(def, f.hint, f.sp, f.tp)); break;
    case kArcSite: break;
    default: break;
  }
}

struct CachedSite {
  Site site;
  std::array<std::vector<std::string>, kNumTemplates> keys;  // arc-site left empty
  std::string arc_prefix;                                    // "arc-site\tsp=..;tp=..;a="
};

struct CorpusCache {
  std::vector<std::vector<CachedSite>> sentences;
};

CorpusCache build_cache(const Corpus& corpus, int window) {
  CorpusCache cache;
  cache.sentences.resize(corpus.sentences.size());
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& sent = corpus.sentences[si];
    for (Site site : candidate_sites(sent, window)) {
      CachedSite cs;
      cs.site = site;
      SiteFeatures f = compute_features(sent, site);
      for (int ti = 0; ti < kNumTemplates; ++ti) static_keys_for(ti, f, cs.keys[ti]);
      const TemplateDef& arc_def = template_defs()[kArcSite];
      cs.arc_prefix = two_slot_key(arc_def, f.sp, f.tp);
      cs.arc_prefix += ';';
      cs.arc_prefix += arc_def.slots[2];
      cs.arc_prefix += '=';
      cache.sentences[si].push_back(std::move(cs));
    }
  }
  return cache;
}

std::string arc_signature(std::span<const GRInstance> arcs) {
  if (arcs.empty()) return "-";
  std::string sig;
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    if (i) sig += ',';
    sig += arcs[i].label;  // spans come label-sorted from the state
  }
  return sig;
}

std::string action_to_string(const RuleAction& action) {
  switch (action.kind) {
    case RuleAction::Kind::Add: return "ADD:" + action.label;
    case RuleAction::Kind::Remove: return "REMOVE";
    case RuleAction::Kind::Relabel: return "RELABEL:" + action.label + ":" + action.to_label;
  }
  return {};
}

RuleAction action_from_string(std::string_view text, const std::string& src, int lineno) {
  RuleAction action;
  if (text == "REMOVE") {
    action.kind = RuleAction::Kind::Remove;
    return action;
  }
  if (text.starts_with("ADD:")) {
    action.kind = RuleAction::Kind::Add;
    action.label = std::string(text.substr(4));
    if (action.label.empty()) throw ParseError(src, lineno, "ADD action without label");
    return action;
  }
  if (text.starts_with("RELABEL:")) {
    auto rest = text.substr(8);
    std::size_t colon = rest.find(':');
    if (colon == std::string_view::npos)
      throw ParseError(src, lineno, "RELABEL action needs two labels");
    action.kind = RuleAction::Kind::Relabel;
    action.label = std::string(rest.substr(0, colon));
    action.to_label = std::string(rest.substr(colon + 1));
    if (action.label.empty() || action.to_label.empty() || action.label == action.to_label)
      throw ParseError(src, lineno, "malformed RELABEL action");
    return action;
  }
  throw ParseError(src, lineno, "unknown action '" + std::string(text) + "'");
}

// Net error change at one site if the action ran there, computed over the
// site's label sets only (actions never touch arcs at other sites).
std::int64_t action_delta(const RuleAction& action, std::span<const GRInstance> state_arcs,
                          std::span<const GRInstance> key_arcs) {
  // Small sorted label views.
  auto labels_of = [](std::span<const GRInstance> arcs) {
    std::vector<std::string_view> out;
    out.reserve(arcs.size());
    for (const GRInstance& a : arcs) out.push_back(a.label);
    return out;
  };
  std::vector<std::string_view> cur = labels_of(state_arcs);
  std::vector<std::string_view> gold = labels_of(key_arcs);
  auto sym_diff = [](const std::vector<std::string_view>& a,
                     const std::vector<std::string_view>& b) {
    std::size_t i = 0, j = 0;
    std::int64_t diff = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++diff;
        ++i;
      } else if (b[j] < a[i]) {
        ++diff;
        ++j;
      } else {
        ++i;
        ++j;
      }
    }
    return diff + static_cast<std::int64_t>(a.size() - i) +
           static_cast<std::int64_t>(b.size() - j);
  };
  std::int64_t before = sym_diff(cur, gold);
  std::vector<std::string_view> after;
  switch (action.kind) {
    case RuleAction::Kind::Add: {
      after = cur;
      std::string_view l = action.label;
      auto it = std::lower_bound(after.begin(), after.end(), l);
      if (it == after.end() || *it != l) after.insert(it, l);
      break;
    }
    case RuleAction::Kind::Remove:
      break;  // site emptied
    case RuleAction::Kind::Relabel: {
      after = cur;
      std::string_view from = action.label;
      auto it = std::lower_bound(after.begin(), after.end(), from);
      if (it == after.end() || *it != from) return 0;  // nothing to relabel
      after.erase(it);
      std::string_view to = action.to_label;
      auto jt = std::lower_bound(after.begin(), after.end(), to);
      if (jt == after.end() || *jt != to) after.insert(jt, to);
      break;
    }
  }
  return before - sym_diff(after, gold);
}

void apply_action_at(AnnotationState& state, std::size_t si, Site site,
                     const RuleAction& action) {
  switch (action.kind) {
    case RuleAction::Kind::Add:
      state.add(si, GRInstance{site.source, site.target, action.label});
      break;
    case RuleAction::Kind::Remove: {
      auto arcs = state.arcs_at(si, site.source, site.target);
      std::vector<GRInstance> doomed(arcs.begin(), arcs.end());
      for (const GRInstance& arc : doomed) state.remove(si, arc);
      break;
    }
    case RuleAction::Kind::Relabel: {
      GRInstance from{site.source, site.target, action.label};
      if (state.contains(si, from)) {
        state.remove(si, from);
        state.add(si, GRInstance{site.source, site.target, action.to_label});
      }
      break;
    }
  }
}

std::vector<int> enabled_indices(const TblConfig& config) {
  std::vector<int> out;
  if (config.templates.empty()) {
    for (int i = 0; i < kNumTemplates; ++i) out.push_back(i);
    return out;
  }
  for (const std::string& id : config.templates) {
    int ti = template_index(id);
    if (ti < 0) throw Error("unknown rule template '" + id + "'");
    out.push_back(ti);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// AnnotationState
// ---------------------------------------------------------------------------

AnnotationState::AnnotationState(AnnotationLayer layer) : layer_(std::move(layer)) {
  for (auto& arcs : layer_) arcs = sorted_unique(std::move(arcs));
}

AnnotationState AnnotationState::blank(std::size_t n_sentences) {
  AnnotationState state;
  state.layer_.resize(n_sentences);
  return state;
}

bool AnnotationState::contains(std::size_t sentence, const GRInstance& arc) const {
  const auto& arcs = layer_[sentence];
  return std::binary_search(arcs.begin(), arcs.end(), arc);
}

void AnnotationState::add(std::size_t sentence, GRInstance arc) {
  auto& arcs = layer_[sentence];
  auto it = std::lower_bound(arcs.begin(), arcs.end(), arc);
  if (it != arcs.end() && *it == arc) return;
  arcs.insert(it, std::move(arc));
}

void AnnotationState::remove(std::size_t sentence, const GRInstance& arc) {
  auto& arcs = layer_[sentence];
  auto it = std::lower_bound(arcs.begin(), arcs.end(), arc);
  if (it != arcs.end() && *it == arc) arcs.erase(it);
}

std::span<const GRInstance> AnnotationState::arcs_at(std::size_t sentence, int source,
                                                     int target) const {
  const auto& arcs = layer_[sentence];
  GRInstance lo{source, target, ""};
  auto first = std::lower_bound(arcs.begin(), arcs.end(), lo);
  auto last = first;
  while (last != arcs.end() && last->source == source && last->target == target) ++last;
  return {first, last};
}

// ---------------------------------------------------------------------------

std::vector<Site> candidate_sites(const Sentence& sentence, int window) {
  std::vector<int> anchors;
  for (int i = 0; i < sentence.size(); ++i) {
    const Chunk* c = sentence.chunk_containing(i);
    if (!c || c->head == i) anchors.push_back(i);
  }
  std::vector<Site> sites;
  for (int a : anchors)
    for (int b : anchors)
      if (a != b && std::abs(a - b) <= window) sites.push_back(Site{a, b});
  for (const AttachmentHint& h : sentence.hints) {
    if (h.source == h.target) continue;
    sites.push_back(Site{h.source, h.target});
    sites.push_back(Site{h.target, h.source});
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

const std::vector<std::string>& template_inventory() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const TemplateDef& def : template_defs()) out.push_back(def.id);
    return out;
  }();
  return ids;
}

std::string TransformationRule::condition_key() const {
  std::string s = template_id;
  s += '\t';
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    if (i) s += ';';
    s += bindings[i].first;
    s += '=';
    s += bindings[i].second;
  }
  return s;
}

std::string TransformationRule::key() const { return condition_key() + "\t" + action_to_string(action); }

std::string TransformationRule::serialize() const { return key() + "\t" + std::to_string(gain); }

TransformationRule parse_rule_line(std::string_view line, const std::string& source_name,
                                   int lineno) {
  auto f = split(line, '\t');
  if (f.size() != 4)
    throw ParseError(source_name, lineno, "rule line must have 4 tab-separated fields");
  TransformationRule rule;
  rule.template_id = std::string(f[0]);
  int ti = template_index(rule.template_id);
  if (ti < 0) throw ParseError(source_name, lineno, "unknown template '" + rule.template_id + "'");
  const TemplateDef& def = template_defs()[ti];
  auto parts = split(f[1], ';');
  if (parts.size() != def.slots.size())
    throw ParseError(source_name, lineno, "template '" + rule.template_id + "' expects " +
                                              std::to_string(def.slots.size()) + " bindings");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::size_t eq = parts[i].find('=');
    if (eq == std::string_view::npos)
      throw ParseError(source_name, lineno, "binding without '='");
    std::string name(parts[i].substr(0, eq));
    std::string value(parts[i].substr(eq + 1));
    if (name != def.slots[i])
      throw ParseError(source_name, lineno,
                       "binding '" + name + "' out of place for template '" + rule.template_id +
                           "' (expected '" + def.slots[i] + "')");
    if (value.empty()) throw ParseError(source_name, lineno, "empty binding value");
    rule.bindings.emplace_back(std::move(name), std::move(value));
  }
  rule.action = action_from_string(f[2], source_name, lineno);
  if (!parse_int(f[3], rule.gain))
    throw ParseError(source_name, lineno, "non-numeric gain field");
  return rule;
}

std::int64_t total_errors(const AnnotationState& state, const AnnotationLayer& key) {
  if (state.size() != key.size()) throw Error("state and key cover different sentence counts");
  std::int64_t errors = 0;
  for (std::size_t si = 0; si < key.size(); ++si) {
    const auto& a = state.layer()[si];
    const auto& b = key[si];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++errors;
        ++i;
      } else if (b[j] < a[i]) {
        ++errors;
        ++j;
      } else {
        ++i;
        ++j;
      }
    }
    errors += static_cast<std::int64_t>(a.size() - i) + static_cast<std::int64_t>(b.size() - j);
  }
  return errors;
}

namespace {

// Shared matching core: visits every (sentence, site) whose condition equals
// the rule's, against the given state snapshot.
template <typename Fn>
void for_matching_sites(const TransformationRule& rule, const CorpusCache& cache,
                        const AnnotationState& state, Fn&& fn) {
  int ti = template_index(rule.template_id);
  if (ti < 0) throw Error("unknown rule template '" + rule.template_id + "'");
  const std::string cond = rule.condition_key();
  for (std::size_t si = 0; si < cache.sentences.size(); ++si) {
    for (const CachedSite& cs : cache.sentences[si]) {
      bool match = false;
      if (ti == kArcSite) {
        std::string key = cs.arc_prefix +
                          arc_signature(state.arcs_at(si, cs.site.source, cs.site.target));
        match = key == cond;
      } else {
        for (const std::string& key : cs.keys[ti]) {
          if (key == cond) {
            match = true;
            break;
          }
        }
      }
      if (match) fn(si, cs.site);
    }
  }
}

struct Candidate {
  std::string cond_key;
  RuleAction action;
  std::string full_key;  // cond + action; dedup and tie-break string
  std::int64_t score = 0;
};

TransformationRule materialize(const Candidate& cand, std::int64_t gain) {
  TransformationRule rule =
      parse_rule_line(cand.full_key + "\t0", "<internal>", 0);
  rule.gain = static_cast<int>(gain);
  return rule;
}

}  // namespace

std::int64_t score_rule(const TransformationRule& rule, const Corpus& corpus,
                        const AnnotationState& state, const AnnotationLayer& key,
                        const TblConfig& config) {
  if (state.size() != corpus.sentences.size() || key.size() != corpus.sentences.size())
    throw Error("score_rule: state/key do not align with corpus");
  CorpusCache cache = build_cache(corpus, config.window);
  AnnotationState key_state{key};
  std::int64_t score = 0;
  for_matching_sites(rule, cache, state, [&](std::size_t si, Site site) {
    score += action_delta(rule.action, state.arcs_at(si, site.source, site.target),
                          key_state.arcs_at(si, site.source, site.target));
  });
  return score;
}

std::vector<TransformationRule> learn_rules(const Corpus& corpus, const AnnotationState& initial,
                                            const AnnotationLayer& key, const TblConfig& config,
                                            AnnotationState* final_state) {
  if (initial.size() != corpus.sentences.size() || key.size() != corpus.sentences.size())
    throw Error("learn_rules: initial/key do not align with corpus");
  const CorpusCache cache = build_cache(corpus, config.window);
  const std::vector<int> enabled = enabled_indices(config);
  AnnotationState state = initial;
  AnnotationState key_state{key};
  std::int64_t errors = total_errors(state, key);
  std::vector<TransformationRule> rules;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    // 1. Ground candidate rules in the sites that currently disagree.
    std::deque<Candidate> candidates;
    std::unordered_map<std::string, int> dedup;
    std::unordered_map<std::string, std::vector<int>> by_condition;
    for (std::size_t si = 0; si < cache.sentences.size(); ++si) {
      for (const CachedSite& cs : cache.sentences[si]) {
        auto cur = state.arcs_at(si, cs.site.source, cs.site.target);
        auto gold = key_state.arcs_at(si, cs.site.source, cs.site.target);
        if (std::equal(cur.begin(), cur.end(), gold.begin(), gold.end())) continue;
        // Error-fixing actions available at this site.
        std::vector<RuleAction> actions;
        bool spurious = false;
        for (const GRInstance& arc : cur)
          if (!key_state.contains(si, arc)) spurious = true;
        for (const GRInstance& want : gold) {
          if (state.contains(si, want)) continue;
          actions.push_back(RuleAction{RuleAction::Kind::Add, want.label, ""});
          for (const GRInstance& have : cur)
            if (have.label != want.label)
              actions.push_back(RuleAction{RuleAction::Kind::Relabel, have.label, want.label});
        }
        if (spurious) actions.push_back(RuleAction{RuleAction::Kind::Remove, "", ""});
        if (actions.empty()) continue;
        std::string arc_key =
            cs.arc_prefix + arc_signature(cur);
        for (int ti : enabled) {
          auto consider = [&](const std::string& cond) {
            for (const RuleAction& action : actions) {
              std::string full = cond + "\t" + action_to_string(action);
              auto [it, inserted] = dedup.emplace(full, static_cast<int>(candidates.size()));
              if (!inserted) continue;
              candidates.push_back(Candidate{cond, action, full, 0});
              by_condition[cond].push_back(it->second);
            }
          };
          if (ti == kArcSite) {
            consider(arc_key);
          } else {
            for (const std::string& cond : cs.keys[ti]) consider(cond);
          }
        }
      }
    }
    if (candidates.empty()) break;

    // 2. Score every candidate with one pass over all sites.
    for (std::size_t si = 0; si < cache.sentences.size(); ++si) {
      for (const CachedSite& cs : cache.sentences[si]) {
        auto cur = state.arcs_at(si, cs.site.source, cs.site.target);
        auto gold = key_state.arcs_at(si, cs.site.source, cs.site.target);
        auto bump = [&](const std::string& cond) {
          auto it = by_condition.find(cond);
          if (it == by_condition.end()) return;
          for (int idx : it->second)
            candidates[idx].score += action_delta(candidates[idx].action, cur, gold);
        };
        for (int ti : enabled) {
          if (ti == kArcSite) {
            bump(cs.arc_prefix + arc_signature(cur));
          } else {
            for (const std::string& cond : cs.keys[ti]) bump(cond);
          }
        }
      }
    }

    // 3. Pick the best rule; ties go to the smallest serialized rule.
    const Candidate* best = nullptr;
    for (const Candidate& cand : candidates) {
      if (!best || cand.score > best->score ||
          (cand.score == best->score && cand.full_key < best->full_key))
        best = &cand;
    }
    if (!best || best->score < config.min_gain) break;

    TransformationRule rule = materialize(*best, best->score);

    // 4. Apply against a snapshot of the matching sites, then check the
    // promised gain actually materialized.
    std::vector<std::pair<std::size_t, Site>> matches;
    for_matching_sites(rule, cache, state,
                       [&](std::size_t si, Site site) { matches.emplace_back(si, site); });
    for (const auto& [si, site] : matches) apply_action_at(state, si, site, rule.action);
    std::int64_t now = total_errors(state, key);
    if (errors - now != best->score)
      throw Error("learner inconsistency: rule '" + rule.key() + "' scored " +
                  std::to_string(best->score) + " but changed errors by " +
                  std::to_string(errors - now));
    errors = now;
    rules.push_back(std::move(rule));
  }

  if (final_state) *final_state = std::move(state);
  return rules;
}

AnnotationState apply_rules(const std::vector<TransformationRule>& rules, const Corpus& corpus,
                            AnnotationState state, const TblConfig& config) {
  if (state.size() != corpus.sentences.size())
    throw Error("apply_rules: state does not align with corpus");
  const CorpusCache cache = build_cache(corpus, config.window);
  for (const TransformationRule& rule : rules) {
    std::vector<std::pair<std::size_t, Site>> matches;
    for_matching_sites(rule, cache, state,
                       [&](std::size_t si, Site site) { matches.emplace_back(si, site); });
    for (const auto& [si, site] : matches) apply_action_at(state, si, site, rule.action);
  }
  return state;
}

std::string rules_to_text(const RuleList& rules) {
  std::string out = "#! tbl-rules window " + std::to_string(rules.window) + "\n";
  for (const TransformationRule& rule : rules.rules) {
    out += rule.serialize();
    out += '\n';
  }
  return out;
}

RuleList rules_from_text(std::string_view text, const std::string& source_name) {
  RuleList list;
  bool saw_header = false;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    bool last = eol == std::string_view::npos;
    std::string_view line = text.substr(pos, last ? text.size() - pos : eol - pos);
    ++lineno;
    if (!line.empty()) {
      if (line.starts_with("#!")) {
        auto f = split_ws(line.substr(2));
        if (f.size() != 3 || f[0] != "tbl-rules" || f[1] != "window" ||
            !parse_int(f[2], list.window))
          throw ParseError(source_name, lineno, "malformed rules header");
        if (saw_header) throw ParseError(source_name, lineno, "duplicate rules header");
        saw_header = true;
      } else {
        if (!saw_header)
          throw ParseError(source_name, lineno, "rule line before '#! tbl-rules' header");
        list.rules.push_back(parse_rule_line(line, source_name, lineno));
      }
    }
    if (last) break;
    pos = eol + 1;
  }
  if (!saw_header) throw Error(source_name + ": missing '#! tbl-rules' header");
  return list;
}

void write_rules(const RuleList& rules, const std::filesystem::path& path) {
  std::string text = rules_to_text(rules);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open file for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

RuleList read_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open rules file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return rules_from_text(buf.str(), path.string());
}

}  // namespace graft
