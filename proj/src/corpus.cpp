#include "graft/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "graft/util.hpp"

namespace graft {

namespace {

bool has_space_or_tab(std::string_view s) {
  return s.find(' ') != std::string_view::npos || s.find('\t') != std::string_view::npos;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

bool AnnotationSet::insert(GRInstance arc) {
  auto it = std::lower_bound(arcs_.begin(), arcs_.end(), arc);
  if (it != arcs_.end() && *it == arc) return false;
  arcs_.insert(it, std::move(arc));
  return true;
}

bool AnnotationSet::contains(const GRInstance& arc) const {
  return std::binary_search(arcs_.begin(), arcs_.end(), arc);
}

const Chunk* Sentence::chunk_containing(int token) const {
  for (const Chunk& c : chunks)
    if (c.begin <= token && token <= c.end) return &c;
  return nullptr;
}

bool Sentence::is_chunk_head(int token) const {
  for (const Chunk& c : chunks)
    if (c.head == token) return true;
  return false;
}

bool CorpusHeader::declares_pos(std::string_view tag) const {
  return std::find(pos_tags.begin(), pos_tags.end(), tag) != pos_tags.end();
}

bool CorpusHeader::declares_chunk(std::string_view kind) const {
  return std::find(chunk_kinds.begin(), chunk_kinds.end(), kind) != chunk_kinds.end();
}

bool CorpusHeader::declares_label(const std::string& set_id, std::string_view label) const {
  auto it = schemes.find(set_id);
  if (it == schemes.end()) return false;
  return std::find(it->second.begin(), it->second.end(), label) != it->second.end();
}

std::vector<GRInstance> sorted_unique(std::vector<GRInstance> arcs) {
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
  return arcs;
}

std::int64_t layer_arc_count(const AnnotationLayer& layer) {
  std::int64_t n = 0;
  for (const auto& s : layer) n += static_cast<std::int64_t>(s.size());
  return n;
}

namespace {

struct BioTag {
  enum Kind { Outside, Begin, Inside } kind = Outside;
  std::string chunk_kind;
  bool head = false;
};

BioTag parse_bio(std::string_view field, const std::string& src, int line) {
  BioTag tag;
  if (field == "O") return tag;
  std::string_view body = field;
  if (body.size() >= 2 && body.substr(body.size() - 2) == ":H") {
    tag.head = true;
    body = body.substr(0, body.size() - 2);
  }
  if (body.size() < 3 || body[1] != '-' || (body[0] != 'B' && body[0] != 'I'))
    throw ParseError(src, line, "malformed chunk tag '" + std::string(field) + "'");
  tag.kind = body[0] == 'B' ? BioTag::Begin : BioTag::Inside;
  tag.chunk_kind = std::string(body.substr(2));
  return tag;
}

class Reader {
 public:
  Reader(std::string_view text, std::string source) : text_(text), src_(std::move(source)) {}

  Corpus run() {
    std::size_t pos = 0;
    bool in_header = true;
    std::vector<std::pair<std::string, int>> block;  // line text, line number
    while (pos <= text_.size()) {
      std::size_t eol = text_.find('\n', pos);
      bool last = eol == std::string_view::npos;
      std::string_view line = text_.substr(pos, last ? text_.size() - pos : eol - pos);
      ++lineno_;
      if (last && line.empty()) break;
      if (line.starts_with("#!")) {
        if (!in_header)
          throw ParseError(src_, lineno_, "header directive after sentence data");
        parse_directive(line);
      } else if (line.empty()) {
        if (!block.empty()) {
          parse_block(block);
          block.clear();
        }
      } else {
        in_header = false;
        block.emplace_back(std::string(line), lineno_);
      }
      if (last) break;
      pos = eol + 1;
    }
    if (!block.empty()) parse_block(block);
    normalize(corpus_);
    validate(corpus_);
    return std::move(corpus_);
  }

 private:
  void parse_directive(std::string_view line) {
    auto fields = split_ws(line.substr(2));
    if (fields.empty()) throw ParseError(src_, lineno_, "empty header directive");
    std::string_view what = fields[0];
    if (what == "pos") {
      if (!corpus_.header.pos_tags.empty())
        throw ParseError(src_, lineno_, "duplicate '#! pos' directive");
      for (std::size_t i = 1; i < fields.size(); ++i)
        corpus_.header.pos_tags.emplace_back(fields[i]);
      if (corpus_.header.pos_tags.empty())
        throw ParseError(src_, lineno_, "'#! pos' declares no tags");
      pos_seen_ = true;
    } else if (what == "chunk-types") {
      if (!corpus_.header.chunk_kinds.empty())
        throw ParseError(src_, lineno_, "duplicate '#! chunk-types' directive");
      for (std::size_t i = 1; i < fields.size(); ++i)
        corpus_.header.chunk_kinds.emplace_back(fields[i]);
    } else if (what == "scheme") {
      if (fields.size() < 2) throw ParseError(src_, lineno_, "'#! scheme' needs a set id");
      std::string set_id(fields[1]);
      if (all_digits(set_id) || set_id == "PP" || set_id == "NARY")
        throw ParseError(src_, lineno_, "reserved set id '" + set_id + "'");
      if (corpus_.header.schemes.count(set_id))
        throw ParseError(src_, lineno_, "duplicate scheme for set '" + set_id + "'");
      std::vector<std::string> labels;
      for (std::size_t i = 2; i < fields.size(); ++i) {
        if (contains(labels, fields[i]))
          throw ParseError(src_, lineno_, "duplicate label in scheme '" + set_id + "'");
        labels.emplace_back(fields[i]);
      }
      corpus_.header.schemes.emplace(std::move(set_id), std::move(labels));
    } else {
      throw ParseError(src_, lineno_, "unknown directive '#! " + std::string(what) + "'");
    }
  }

  void parse_block(const std::vector<std::pair<std::string, int>>& block) {
    Sentence sent;
    enum Phase { Tokens, Hints, Arcs } phase = Tokens;
    // chunk assembly state
    bool chunk_open = false;
    Chunk cur;
    bool cur_has_head = false;
    auto close_chunk = [&](int at_line) {
      if (!chunk_open) return;
      if (!cur_has_head)
        throw ParseError(src_, at_line, "chunk ending at token " + std::to_string(cur.end) +
                                            " has no head token (':H')");
      sent.chunks.push_back(cur);
      chunk_open = false;
      cur_has_head = false;
    };

    for (const auto& [line, ln] : block) {
      auto f = split(line, '\t');
      if (phase == Tokens) {
        int idx;
        if (parse_int(f[0], idx)) {
          if (f.size() != 4)
            throw ParseError(src_, ln, "token line must have 4 tab-separated fields");
          if (idx != sent.size())
            throw ParseError(src_, ln, "token index " + std::string(f[0]) +
                                           " out of order (expected " +
                                           std::to_string(sent.size()) + ")");
          if (f[1].empty()) throw ParseError(src_, ln, "empty word");
          if (f[2].empty()) throw ParseError(src_, ln, "empty POS tag");
          if (!corpus_.header.declares_pos(f[2]))
            throw ParseError(src_, ln, "undeclared POS tag '" + std::string(f[2]) + "'");
          BioTag bio = parse_bio(f[3], src_, ln);
          if (bio.kind == BioTag::Outside) {
            close_chunk(ln);
          } else if (bio.kind == BioTag::Begin) {
            close_chunk(ln);
            if (!corpus_.header.declares_chunk(bio.chunk_kind))
              throw ParseError(src_, ln, "undeclared chunk type '" + bio.chunk_kind + "'");
            chunk_open = true;
            cur = Chunk{idx, idx, bio.chunk_kind, idx};
            cur_has_head = false;
          } else {  // Inside
            if (!chunk_open || cur.kind != bio.chunk_kind)
              throw ParseError(src_, ln, "'I-" + bio.chunk_kind + "' without matching chunk start");
            cur.end = idx;
          }
          if (bio.head) {
            if (!chunk_open) throw ParseError(src_, ln, "':H' outside a chunk");
            if (cur_has_head) throw ParseError(src_, ln, "chunk has more than one head");
            cur.head = idx;
            cur_has_head = true;
          }
          sent.tokens.push_back(Token{idx, std::string(f[1]), std::string(f[2])});
          continue;
        }
        close_chunk(ln);
        phase = Hints;
      }
      if (phase == Hints) {
        if (f[0] == "PP") {
          if (f.size() != 3) throw ParseError(src_, ln, "hint line must be 'PP\\t<src>\\t<tgt>'");
          int s, t;
          if (!parse_int(f[1], s) || !parse_int(f[2], t))
            throw ParseError(src_, ln, "non-numeric hint endpoint");
          if (s < 0 || s >= sent.size() || t < 0 || t >= sent.size())
            throw ParseError(src_, ln, "hint endpoint out of range");
          sent.hints.push_back(AttachmentHint{s, t});
          continue;
        }
        phase = Arcs;
      }
      // Arcs and n-ary relations.
      std::string set_id(f[0]);
      auto scheme_it = corpus_.header.schemes.find(set_id);
      if (scheme_it == corpus_.header.schemes.end())
        throw ParseError(src_, ln, "undeclared annotation set '" + set_id + "'");
      if (f.size() == 4 && f[1] == "NARY") {
        std::string label(f[2]);
        if (!corpus_.header.declares_label(set_id, label))
          throw ParseError(src_, ln, "label '" + label + "' not in scheme of set '" + set_id + "'");
        NaryRelation rel;
        rel.label = std::move(label);
        for (auto part : split(f[3], ',')) {
          int idx;
          if (!parse_int(part, idx)) throw ParseError(src_, ln, "non-numeric n-ary element");
          if (idx < 0 || idx >= sent.size())
            throw ParseError(src_, ln, "n-ary element out of range");
          rel.elements.push_back(idx);
        }
        if (rel.elements.size() < 3 || rel.elements.size() > 4)
          throw ParseError(src_, ln, "n-ary relation must have 3 or 4 elements");
        sent.sets[set_id].nary.push_back(std::move(rel));
        continue;
      }
      if (f.size() != 4)
        throw ParseError(src_, ln, "arc line must be '<set>\\t<src>\\t<tgt>\\t<label>'");
      int s, t;
      if (!parse_int(f[1], s) || !parse_int(f[2], t))
        throw ParseError(src_, ln, "non-numeric arc endpoint");
      if (s < 0 || s >= sent.size() || t < 0 || t >= sent.size())
        throw ParseError(src_, ln,
                         "arc endpoint out of range for a " + std::to_string(sent.size()) +
                             "-token sentence");
      if (s == t) throw ParseError(src_, ln, "arc source equals target");
      std::string label(f[3]);
      if (!corpus_.header.declares_label(set_id, label))
        throw ParseError(src_, ln, "label '" + label + "' not in scheme of set '" + set_id + "'");
      if (!sent.sets[set_id].insert(GRInstance{s, t, std::move(label)}))
        throw ParseError(src_, ln, "duplicate arc in set '" + set_id + "'");
    }
    close_chunk(block.back().second);
    if (sent.tokens.empty())
      throw ParseError(src_, block.front().second, "sentence block without token lines");
    corpus_.sentences.push_back(std::move(sent));
  }

  std::string_view text_;
  std::string src_;
  Corpus corpus_;
  int lineno_ = 0;
  bool pos_seen_ = false;
};

}  // namespace

Corpus read_corpus_text(std::string_view text, const std::string& source_name) {
  return Reader(text, source_name).run();
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_corpus_text(buf.str(), path.string());
}

std::string corpus_to_text(const Corpus& corpus) {
  validate(corpus);
  std::string out;
  auto header_line = [&out](std::string_view what, const std::vector<std::string>& items) {
    out += "#! ";
    out += what;
    for (const auto& s : items) {
      out += ' ';
      out += s;
    }
    out += '\n';
  };
  if (!corpus.header.pos_tags.empty()) header_line("pos", corpus.header.pos_tags);
  if (!corpus.header.chunk_kinds.empty()) header_line("chunk-types", corpus.header.chunk_kinds);
  for (const auto& [set_id, labels] : corpus.header.schemes) {
    out += "#! scheme ";
    out += set_id;
    for (const auto& l : labels) {
      out += ' ';
      out += l;
    }
    out += '\n';
  }
  for (const Sentence& sent : corpus.sentences) {
    out += '\n';
    // token lines with BIO chunk tags
    for (const Token& tok : sent.tokens) {
      out += std::to_string(tok.index);
      out += '\t';
      out += tok.word;
      out += '\t';
      out += tok.pos;
      out += '\t';
      const Chunk* c = sent.chunk_containing(tok.index);
      if (!c) {
        out += 'O';
      } else {
        out += tok.index == c->begin ? "B-" : "I-";
        out += c->kind;
        if (tok.index == c->head) out += ":H";
      }
      out += '\n';
    }
    for (const AttachmentHint& h : sent.hints) {
      out += "PP\t";
      out += std::to_string(h.source);
      out += '\t';
      out += std::to_string(h.target);
      out += '\n';
    }
    for (const auto& [set_id, set] : sent.sets) {
      for (const GRInstance& arc : set.arcs()) {
        out += set_id;
        out += '\t';
        out += std::to_string(arc.source);
        out += '\t';
        out += std::to_string(arc.target);
        out += '\t';
        out += arc.label;
        out += '\n';
      }
      for (const NaryRelation& rel : set.nary) {
        out += set_id;
        out += "\tNARY\t";
        out += rel.label;
        out += '\t';
        for (std::size_t i = 0; i < rel.elements.size(); ++i) {
          if (i) out += ',';
          out += std::to_string(rel.elements[i]);
        }
        out += '\n';
      }
    }
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::string text = corpus_to_text(corpus);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open file for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void normalize(Corpus& corpus) {
  for (Sentence& sent : corpus.sentences)
    for (const auto& [set_id, labels] : corpus.header.schemes) sent.sets[set_id];
}

void validate(const Corpus& corpus) {
  const CorpusHeader& h = corpus.header;
  for (const auto& tag : h.pos_tags)
    if (tag.empty() || has_space_or_tab(tag)) throw Error("bad POS tag declaration");
  for (const auto& kind : h.chunk_kinds)
    if (kind.empty() || has_space_or_tab(kind)) throw Error("bad chunk type declaration");
  for (const auto& [set_id, labels] : h.schemes) {
    if (set_id.empty() || has_space_or_tab(set_id) || all_digits(set_id) || set_id == "PP" ||
        set_id == "NARY")
      throw Error("bad set id '" + set_id + "'");
    for (const auto& l : labels)
      if (l.empty() || has_space_or_tab(l)) throw Error("bad label in scheme '" + set_id + "'");
  }
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& sent = corpus.sentences[si];
    auto where = [&](const std::string& msg) {
      return Error("sentence " + std::to_string(si) + ": " + msg);
    };
    if (sent.tokens.empty()) throw where("no tokens");
    for (int i = 0; i < sent.size(); ++i) {
      const Token& tok = sent.tokens[i];
      if (tok.index != i) throw where("token indices not contiguous from 0");
      if (tok.word.empty()) throw where("empty word");
      if (!h.declares_pos(tok.pos)) throw where("undeclared POS tag '" + tok.pos + "'");
    }
    int prev_end = -1;
    for (const Chunk& c : sent.chunks) {
      if (c.begin < 0 || c.end >= sent.size() || c.begin > c.end)
        throw where("chunk span out of range");
      if (c.begin <= prev_end) throw where("overlapping or unordered chunks");
      if (c.head < c.begin || c.head > c.end) throw where("chunk head outside span");
      if (!h.declares_chunk(c.kind)) throw where("undeclared chunk type '" + c.kind + "'");
      prev_end = c.end;
    }
    for (const AttachmentHint& hint : sent.hints)
      if (hint.source < 0 || hint.source >= sent.size() || hint.target < 0 ||
          hint.target >= sent.size())
        throw where("attachment hint endpoint out of range");
    for (const auto& [set_id, set] : sent.sets) {
      if (!h.schemes.count(set_id)) throw where("undeclared annotation set '" + set_id + "'");
      const GRInstance* prev = nullptr;
      for (const GRInstance& arc : set.arcs()) {
        if (arc.source < 0 || arc.source >= sent.size() || arc.target < 0 ||
            arc.target >= sent.size())
          throw where("arc endpoint out of range in set '" + set_id + "'");
        if (arc.source == arc.target) throw where("arc source equals target");
        if (!h.declares_label(set_id, arc.label))
          throw where("label '" + arc.label + "' not in scheme of set '" + set_id + "'");
        if (prev && !(*prev < arc)) throw where("arcs not sorted/unique in set '" + set_id + "'");
        prev = &arc;
      }
      for (const NaryRelation& rel : set.nary) {
        if (rel.elements.size() < 3 || rel.elements.size() > 4)
          throw where("n-ary relation must have 3 or 4 elements");
        for (int e : rel.elements)
          if (e < 0 || e >= sent.size()) throw where("n-ary element out of range");
        if (!h.declares_label(set_id, rel.label))
          throw where("n-ary label '" + rel.label + "' not in scheme of set '" + set_id + "'");
      }
    }
  }
}

AnnotationLayer layer_from(const Corpus& corpus, const std::string& set_id) {
  if (!corpus.header.schemes.count(set_id))
    throw Error("annotation set '" + set_id + "' not declared in corpus header");
  AnnotationLayer layer;
  layer.reserve(corpus.sentences.size());
  for (const Sentence& sent : corpus.sentences) {
    auto it = sent.sets.find(set_id);
    layer.push_back(it == sent.sets.end() ? std::vector<GRInstance>{} : it->second.arcs());
  }
  return layer;
}

void set_layer(Corpus& corpus, const std::string& set_id, const AnnotationLayer& layer,
               const std::vector<std::string>& scheme_labels) {
  if (layer.size() != corpus.sentences.size())
    throw Error("layer does not align with corpus (" + std::to_string(layer.size()) + " vs " +
                std::to_string(corpus.sentences.size()) + " sentences)");
  corpus.header.schemes[set_id] = scheme_labels;
  for (std::size_t i = 0; i < layer.size(); ++i) {
    AnnotationSet set;
    for (GRInstance arc : layer[i]) set.insert(std::move(arc));
    corpus.sentences[i].sets[set_id] = std::move(set);
  }
  normalize(corpus);
  validate(corpus);
}

}  // namespace graft
