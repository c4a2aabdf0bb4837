#include "graft/synthesis.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "graft/config.hpp"
#include "graft/tbl.hpp"
#include "graft/util.hpp"

namespace graft {

namespace {

const std::vector<std::pair<std::string, Slot>>& slot_names() {
  static const std::vector<std::pair<std::string, Slot>> names = {
      {"SUBJ", Slot::Subj}, {"VERB", Slot::Verb}, {"XVERB", Slot::XVerb},
      {"OBJ", Slot::Obj},   {"TIME", Slot::Time}, {"LOC", Slot::Loc},
      {"OTHER", Slot::Other}, {"REL", Slot::Rel}, {"COP", Slot::Cop},
      {"PRED", Slot::Pred},
  };
  return names;
}

Slot slot_by_name(std::string_view name, const std::string& src, int lineno) {
  for (const auto& [n, s] : slot_names())
    if (n == name) return s;
  throw ParseError(src, lineno, "unknown template slot '" + std::string(name) + "'");
}

// Lexicon slots in declaration-independent order; POS tags are collected
// from these in a fixed order so the header does not depend on which
// templates happen to fire.
const std::vector<std::string>& lexicon_slots() {
  static const std::vector<std::string> slots = {"det",     "poss",    "adj",      "noun",
                                                 "verb",    "xverb",   "cop",      "prep",
                                                 "timeadv", "otheradv", "relpron"};
  return slots;
}

void validate_template(const SentenceTemplate& tmpl) {
  auto count = [&](Slot s) {
    return std::count(tmpl.slots.begin(), tmpl.slots.end(), s);
  };
  auto err = [&](const std::string& msg) {
    throw Error("template '" + tmpl.name + "': " + msg);
  };
  if (tmpl.weight <= 0.0) err("weight must be positive");
  if (count(Slot::Subj) != 1) err("needs exactly one SUBJ");
  long verbs = count(Slot::Verb) + count(Slot::XVerb);
  long cops = count(Slot::Cop);
  if (verbs + cops != 1) err("needs exactly one of VERB, XVERB or COP");
  if (cops != count(Slot::Pred)) err("COP and PRED must appear together");
  for (Slot s : {Slot::Obj, Slot::Time, Slot::Loc, Slot::Other, Slot::Rel, Slot::Pred})
    if (count(s) > 1) err("repeated optional slot");
  if (count(Slot::Obj) == 1 && verbs == 0) err("OBJ requires VERB or XVERB");
  if (count(Slot::Rel) == 1) {
    auto rel = std::find(tmpl.slots.begin(), tmpl.slots.end(), Slot::Rel);
    bool np_before = false;
    for (auto it = tmpl.slots.begin(); it != rel; ++it)
      if (*it == Slot::Subj || *it == Slot::Obj || *it == Slot::Pred) np_before = true;
    if (!np_before) err("REL must follow a noun-chunk slot");
  }
}

class SentenceBuilder {
 public:
  SentenceBuilder(const GrammarSpec& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {}

  Sentence build(const SentenceTemplate& tmpl) {
    for (Slot slot : tmpl.slots) {
      switch (slot) {
        case Slot::Subj: subj_head_ = chunk(); break;
        case Slot::Verb: pred_tok_ = verb_tok_ = token("verb"); break;
        case Slot::XVerb:
          pred_tok_ = verb_tok_ = token("xverb");
          inverse_obj_ = true;
          break;
        case Slot::Obj: obj_head_ = chunk(); break;
        case Slot::Cop: pred_tok_ = token("cop"); break;
        case Slot::Pred: pred_head_ = chunk(); break;
        case Slot::Time: {
          int adv = token("timeadv");
          if (adv == 0) punct(",");
          time_adv_ = adv;
          break;
        }
        case Slot::Other: {
          int adv = token("otheradv");
          if (adv == 0) punct(",");
          other_adv_ = adv;
          break;
        }
        case Slot::Loc: {
          loc_prep_ = token("prep");
          loc_np_head_ = chunk();
          break;
        }
        case Slot::Rel: {
          rel_attach_ = last_np_head_;
          punct(",");
          token("relpron");
          rel_verb_ = token("verb");
          rel_obj_head_ = chunk();
          punct(",");
          break;
        }
      }
    }
    punct(".");
    make_arcs();
    return std::move(sent_);
  }

 private:
  const std::vector<LexEntry>& entries(const std::string& slot) {
    auto it = spec_.lexicon.find(slot);
    if (it == spec_.lexicon.end() || it->second.empty())
      throw Error("empty lexicon slot '" + slot + "'");
    return it->second;
  }

  const LexEntry& draw(const std::string& slot) {
    const auto& es = entries(slot);
    std::vector<double> weights;
    weights.reserve(es.size());
    for (const LexEntry& e : es) weights.push_back(e.weight);
    return es[weighted_pick(rng_, weights)];
  }

  int token(const std::string& slot) {
    const LexEntry& e = draw(slot);
    int idx = sent_.size();
    sent_.tokens.push_back(Token{idx, e.word, e.pos});
    return idx;
  }

  int punct(const std::string& w) {
    int idx = sent_.size();
    sent_.tokens.push_back(Token{idx, w, w});
    return idx;
  }

  // det/poss [adj] noun; the final noun is the chunk head.
  int chunk() {
    int begin = sent_.size();
    bool possessive = chance(rng_, spec_.poss_prob);
    int det = token(possessive ? "poss" : "det");
    if (possessive) poss_arcs_.emplace_back(det, -1);  // head patched below
    if (chance(rng_, spec_.adj_prob)) token("adj");
    int head = token("noun");
    if (possessive) poss_arcs_.back().second = head;
    sent_.chunks.push_back(Chunk{begin, head, "NP", head});
    last_np_head_ = head;
    return head;
  }

  void add_key(int source, int target, const std::string& label) {
    sent_.sets["key"].insert(GRInstance{source, target, label});
  }

  void make_arcs() {
    add_key(subj_head_, pred_tok_, "subj");
    if (obj_head_ >= 0) {
      if (inverse_obj_)
        add_key(verb_tok_, obj_head_, "obj");
      else
        add_key(obj_head_, verb_tok_, "obj");
    }
    if (pred_head_ >= 0) add_key(pred_head_, pred_tok_, "obj");
    if (time_adv_ >= 0) add_key(time_adv_, pred_tok_, "mod-time");
    if (other_adv_ >= 0) add_key(other_adv_, pred_tok_, "mod-other");
    for (auto [poss, head] : poss_arcs_) add_key(poss, head, "mod-poss");
    if (rel_verb_ >= 0) {
      add_key(rel_attach_, rel_verb_, "subj");
      add_key(rel_obj_head_, rel_verb_, "obj");
    }
    if (loc_prep_ >= 0) {
      // The PP attaches to the nearest nominal (object/predicate) or to the
      // predicate token; the hint reports the site imperfectly.
      int nominal = obj_head_ >= 0 ? obj_head_ : pred_head_;
      int site;
      if (nominal >= 0 && chance(rng_, spec_.loc_attach_obj_prob))
        site = nominal;
      else
        site = pred_tok_;
      add_key(loc_prep_, site, "mod-loc");
      int alt = site == pred_tok_ ? (nominal >= 0 ? nominal : subj_head_) : pred_tok_;
      int hinted = chance(rng_, spec_.hint_error_rate) ? alt : site;
      sent_.hints.push_back(AttachmentHint{loc_prep_, hinted});
    }
  }

  const GrammarSpec& spec_;
  std::mt19937_64& rng_;
  Sentence sent_;
  int subj_head_ = -1, verb_tok_ = -1, pred_tok_ = -1, obj_head_ = -1, pred_head_ = -1;
  int time_adv_ = -1, other_adv_ = -1, loc_prep_ = -1, loc_np_head_ = -1;
  int rel_verb_ = -1, rel_obj_head_ = -1, rel_attach_ = -1, last_np_head_ = -1;
  bool inverse_obj_ = false;
  std::vector<std::pair<int, int>> poss_arcs_;
};

}  // namespace

const std::vector<std::string>& target_scheme_labels() {
  static const std::vector<std::string> labels = {"subj",      "obj",       "mod-time",
                                                  "mod-loc",   "mod-other", "mod-poss"};
  return labels;
}

GrammarSpec parse_grammar_spec(std::string_view text, const std::string& source_name) {
  ConfigFile file = parse_config(text, source_name);
  GrammarSpec spec;
  const ConfigSection& g = file.require("grammar");
  spec.seed = config_u64(g, "seed", spec.seed);
  spec.hint_error_rate = config_double(g, "hint_error_rate", spec.hint_error_rate);
  spec.loc_attach_obj_prob = config_double(g, "loc_attach_obj_prob", spec.loc_attach_obj_prob);
  spec.adj_prob = config_double(g, "adj_prob", spec.adj_prob);
  spec.poss_prob = config_double(g, "poss_prob", spec.poss_prob);
  for (double rate : {spec.hint_error_rate, spec.loc_attach_obj_prob, spec.adj_prob,
                      spec.poss_prob})
    if (rate < 0.0 || rate > 1.0) throw Error(source_name + ": probabilities must be in [0,1]");

  const ConfigSection& templates = file.require("templates");
  for (const ConfigEntry& entry : templates.entries) {
    auto fields = split_ws(entry.value);
    if (fields.size() < 2)
      throw ParseError(source_name, entry.line, "template needs '<weight> <slot>...'");
    SentenceTemplate tmpl;
    tmpl.name = entry.key;
    if (!parse_double(fields[0], tmpl.weight))
      throw ParseError(source_name, entry.line, "non-numeric template weight");
    for (std::size_t i = 1; i < fields.size(); ++i)
      tmpl.slots.push_back(slot_by_name(fields[i], source_name, entry.line));
    validate_template(tmpl);
    spec.templates.push_back(std::move(tmpl));
  }
  if (spec.templates.empty()) throw Error(source_name + ": no templates declared");

  const ConfigSection& lex = file.require("lexicon");
  for (const ConfigEntry& entry : lex.entries) {
    if (std::find(lexicon_slots().begin(), lexicon_slots().end(), entry.key) ==
        lexicon_slots().end())
      throw ParseError(source_name, entry.line, "unknown lexicon slot '" + entry.key + "'");
    std::vector<LexEntry>& entries = spec.lexicon[entry.key];
    for (std::string_view item : split_ws(entry.value)) {
      auto parts = split(item, ':');
      if (parts.size() != 2 && parts.size() != 3)
        throw ParseError(source_name, entry.line, "lexicon entry must be word:POS[:weight]");
      LexEntry e;
      e.word = std::string(parts[0]);
      e.pos = std::string(parts[1]);
      if (e.word.empty() || e.pos.empty())
        throw ParseError(source_name, entry.line, "empty word or POS in lexicon entry");
      if (parts.size() == 3 && (!parse_double(parts[2], e.weight) || e.weight <= 0.0))
        throw ParseError(source_name, entry.line, "bad lexicon weight");
      entries.push_back(std::move(e));
    }
  }
  return spec;
}

GrammarSpec read_grammar_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open grammar config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grammar_spec(buf.str(), path.string());
}

Corpus generate_corpus(const GrammarSpec& spec, int n_sentences) {
  if (n_sentences < 0) throw Error("generate_corpus: negative sentence count");
  Corpus corpus;
  // Header: POS tags in fixed lexicon-slot order, then punctuation.
  for (const std::string& slot : lexicon_slots()) {
    auto it = spec.lexicon.find(slot);
    if (it == spec.lexicon.end()) continue;
    for (const LexEntry& e : it->second)
      if (!corpus.header.declares_pos(e.pos)) corpus.header.pos_tags.push_back(e.pos);
  }
  for (const char* p : {",", "."})
    if (!corpus.header.declares_pos(p)) corpus.header.pos_tags.push_back(p);
  corpus.header.chunk_kinds.push_back("NP");
  corpus.header.schemes["key"] = target_scheme_labels();

  std::vector<double> weights;
  for (const SentenceTemplate& t : spec.templates) weights.push_back(t.weight);

  for (int i = 0; i < n_sentences; ++i) {
    // Per-sentence seed stream: sentence i is the same in any corpus length.
    std::mt19937_64 rng(mix64(spec.seed, static_cast<std::uint64_t>(i)));
    const SentenceTemplate& tmpl = spec.templates[weighted_pick(rng, weights)];
    corpus.sentences.push_back(SentenceBuilder(spec, rng).build(tmpl));
  }
  normalize(corpus);
  validate(corpus);
  return corpus;
}

DivergenceSpec parse_divergence_spec(std::string_view text, const std::string& source_name) {
  ConfigFile file = parse_config(text, source_name);
  const ConfigSection& section = file.require("divergence");
  DivergenceSpec spec;
  for (const ConfigEntry& entry : section.entries) {
    if (entry.key != "channel")
      throw ParseError(source_name, entry.line, "only 'channel = ...' entries are allowed");
    auto f = split_ws(entry.value);
    if (f.empty()) throw ParseError(source_name, entry.line, "empty channel");
    DivergenceOp op;
    std::string_view kind = f[0];
    auto want = [&](std::size_t n) {
      if (f.size() != n)
        throw ParseError(source_name, entry.line,
                         "channel '" + std::string(kind) + "' takes " + std::to_string(n - 1) +
                             " arguments");
    };
    if (kind == "rename") {
      want(3);
      op.kind = DivergenceOp::Kind::Rename;
      op.from_labels = {std::string(f[1])};
      op.to_label = std::string(f[2]);
    } else if (kind == "merge") {
      want(3);
      op.kind = DivergenceOp::Kind::Merge;
      for (auto part : split(f[1], ','))
        if (!part.empty()) op.from_labels.emplace_back(part);
      if (op.from_labels.size() < 2)
        throw ParseError(source_name, entry.line, "merge needs at least two labels");
      op.to_label = std::string(f[2]);
    } else if (kind == "drop") {
      want(2);
      op.kind = DivergenceOp::Kind::Drop;
      op.from_labels = {std::string(f[1])};
    } else if (kind == "shift-relpron") {
      want(3);
      op.kind = DivergenceOp::Kind::ShiftRelpron;
      op.shift_label = std::string(f[1]);
      op.relpron_pos = std::string(f[2]);
    } else if (kind == "copula-variant") {
      want(3);
      op.kind = DivergenceOp::Kind::CopulaVariant;
      for (auto part : split(f[1], ','))
        if (!part.empty()) op.copula_words.emplace_back(part);
      if (op.copula_words.empty())
        throw ParseError(source_name, entry.line, "copula-variant needs copula words");
      op.pred_label = std::string(f[2]);
    } else if (kind == "noise") {
      want(4);
      op.kind = DivergenceOp::Kind::Noise;
      if (!parse_double(f[1], op.fa_rate) || !parse_double(f[2], op.miss_rate) ||
          !parse_u64(f[3], op.seed))
        throw ParseError(source_name, entry.line, "noise needs '<fa> <miss> <seed>'");
      if (op.fa_rate < 0 || op.fa_rate > 1 || op.miss_rate < 0 || op.miss_rate > 1)
        throw ParseError(source_name, entry.line, "noise rates must be in [0,1]");
    } else {
      throw ParseError(source_name, entry.line, "unknown channel '" + std::string(kind) + "'");
    }
    spec.ops.push_back(std::move(op));
  }
  return spec;
}

DivergenceSpec read_divergence_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open divergence config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_divergence_spec(buf.str(), path.string());
}

namespace {

void require_label(const std::vector<std::string>& inventory, const std::string& label) {
  if (std::find(inventory.begin(), inventory.end(), label) == inventory.end())
    throw Error("divergence channel references unknown label '" + label + "'");
}

void relabel_all(AnnotationLayer& layer, const std::vector<std::string>& from,
                 const std::string& to) {
  for (auto& arcs : layer) {
    for (GRInstance& arc : arcs)
      if (std::find(from.begin(), from.end(), arc.label) != from.end()) arc.label = to;
    arcs = sorted_unique(std::move(arcs));
  }
}

void replace_labels(std::vector<std::string>& inventory, const std::vector<std::string>& from,
                    const std::string& to) {
  bool placed = false;
  std::vector<std::string> out;
  for (const std::string& label : inventory) {
    if (std::find(from.begin(), from.end(), label) != from.end()) {
      if (!placed && std::find(out.begin(), out.end(), to) == out.end()) {
        out.push_back(to);
        placed = true;
      }
      continue;
    }
    if (label == to) {
      if (!placed) {
        out.push_back(label);
        placed = true;
      }
      continue;
    }
    out.push_back(label);
  }
  inventory = std::move(out);
}

}  // namespace

SimulatedSystem simulate_system(const Corpus& corpus, const DivergenceSpec& divergence,
                                const std::string& key_set) {
  SimulatedSystem sys;
  auto scheme_it = corpus.header.schemes.find(key_set);
  if (scheme_it == corpus.header.schemes.end())
    throw Error("corpus has no '" + key_set + "' annotation set");
  sys.scheme = scheme_it->second;
  sys.annotations = layer_from(corpus, key_set);

  for (const DivergenceOp& op : divergence.ops) {
    switch (op.kind) {
      case DivergenceOp::Kind::Rename:
      case DivergenceOp::Kind::Merge: {
        for (const std::string& label : op.from_labels) require_label(sys.scheme, label);
        relabel_all(sys.annotations, op.from_labels, op.to_label);
        replace_labels(sys.scheme, op.from_labels, op.to_label);
        break;
      }
      case DivergenceOp::Kind::Drop: {
        require_label(sys.scheme, op.from_labels.front());
        const std::string& doomed = op.from_labels.front();
        for (auto& arcs : sys.annotations)
          std::erase_if(arcs, [&](const GRInstance& a) { return a.label == doomed; });
        replace_labels(sys.scheme, op.from_labels, "");
        std::erase(sys.scheme, "");
        break;
      }
      case DivergenceOp::Kind::ShiftRelpron: {
        require_label(sys.scheme, op.shift_label);
        for (std::size_t si = 0; si < sys.annotations.size(); ++si) {
          const Sentence& sent = corpus.sentences[si];
          auto& arcs = sys.annotations[si];
          for (GRInstance& arc : arcs) {
            if (arc.label != op.shift_label) continue;
            int pron = arc.target - 1;
            if (pron >= 0 && pron < sent.size() && sent.tokens[pron].pos == op.relpron_pos &&
                arc.source < pron)
              arc.source = pron;
          }
          arcs = sorted_unique(std::move(arcs));
        }
        break;
      }
      case DivergenceOp::Kind::CopulaVariant: {
        require_label(sys.scheme, op.pred_label);
        for (std::size_t si = 0; si < sys.annotations.size(); ++si) {
          const Sentence& sent = corpus.sentences[si];
          auto& arcs = sys.annotations[si];
          // copula token -> predicate head, from the pred-labeled arc
          std::map<int, int> pred_of;
          for (const GRInstance& arc : arcs) {
            if (arc.label != op.pred_label) continue;
            const std::string& w = sent.tokens[arc.target].word;
            if (std::find(op.copula_words.begin(), op.copula_words.end(), w) !=
                op.copula_words.end())
              pred_of[arc.target] = arc.source;
          }
          if (pred_of.empty()) continue;
          std::vector<GRInstance> rewritten;
          for (const GRInstance& arc : arcs) {
            auto it = pred_of.find(arc.target);
            if (it == pred_of.end()) {
              rewritten.push_back(arc);
              continue;
            }
            if (arc.label == op.pred_label && arc.source == it->second) continue;  // dropped
            if (arc.source == it->second) continue;  // would degenerate
            rewritten.push_back(GRInstance{arc.source, it->second, arc.label});
          }
          arcs = sorted_unique(std::move(rewritten));
        }
        break;
      }
      case DivergenceOp::Kind::Noise: {
        for (std::size_t si = 0; si < sys.annotations.size(); ++si) {
          std::mt19937_64 rng(mix64(op.seed, static_cast<std::uint64_t>(si)));
          auto& arcs = sys.annotations[si];
          std::size_t original = arcs.size();
          std::vector<GRInstance> kept;
          for (const GRInstance& arc : arcs)
            if (!chance(rng, op.miss_rate)) kept.push_back(arc);
          std::vector<Site> sites = candidate_sites(corpus.sentences[si], 10);
          for (std::size_t k = 0; k < original; ++k) {
            if (!chance(rng, op.fa_rate) || sites.empty() || sys.scheme.empty()) continue;
            for (int attempt = 0; attempt < 5; ++attempt) {
              const Site& site = sites[uniform_below(rng, sites.size())];
              GRInstance arc{site.source, site.target,
                             sys.scheme[uniform_below(rng, sys.scheme.size())]};
              auto pos = std::lower_bound(kept.begin(), kept.end(), arc);
              if (pos == kept.end() || *pos != arc) {
                kept.insert(pos, std::move(arc));
                break;
              }
            }
          }
          arcs = std::move(kept);
        }
        break;
      }
    }
  }
  return sys;
}

}  // namespace graft
