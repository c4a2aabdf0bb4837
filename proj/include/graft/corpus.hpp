// graft -- corpus data model: tokens, chunks, attachment hints, GR arcs.
#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graft {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure tied to a specific line of an input file.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Token {
  int index = 0;
  std::string word;
  std::string pos;
  bool operator==(const Token&) const = default;
};

// Inclusive token span with exactly one head token inside it.
struct Chunk {
  int begin = 0;
  int end = 0;
  std::string kind;
  int head = 0;
  bool operator==(const Chunk&) const = default;
};

struct AttachmentHint {
  int source = 0;  // preposition
  int target = 0;  // estimated attachment site
  bool operator==(const AttachmentHint&) const = default;
};

// Directed labeled arc between token positions. Chunk endpoints are
// canonicalized to the chunk's head token, so triple equality decides
// arc identity everywhere (scoring, mapping, learning).
struct GRInstance {
  int source = 0;
  int target = 0;
  std::string label;
  auto operator<=>(const GRInstance&) const = default;
};

struct NaryRelation {
  std::string label;
  std::vector<int> elements;  // 3 or 4
  bool operator==(const NaryRelation&) const = default;
};

// Arcs kept sorted by (source, target, label); duplicate triples rejected.
class AnnotationSet {
 public:
  bool insert(GRInstance arc);
  bool contains(const GRInstance& arc) const;
  const std::vector<GRInstance>& arcs() const { return arcs_; }
  std::vector<NaryRelation> nary;
  bool operator==(const AnnotationSet&) const = default;

 private:
  std::vector<GRInstance> arcs_;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<Chunk> chunks;
  std::vector<AttachmentHint> hints;
  std::map<std::string, AnnotationSet> sets;

  int size() const { return static_cast<int>(tokens.size()); }
  const Chunk* chunk_containing(int token) const;
  bool is_chunk_head(int token) const;
  bool operator==(const Sentence&) const = default;
};

struct CorpusHeader {
  std::vector<std::string> pos_tags;
  std::vector<std::string> chunk_kinds;
  // set-id -> declared label inventory for that annotation set
  std::map<std::string, std::vector<std::string>> schemes;

  bool declares_pos(std::string_view tag) const;
  bool declares_chunk(std::string_view kind) const;
  bool declares_label(const std::string& set_id, std::string_view label) const;
  bool operator==(const CorpusHeader&) const = default;
};

struct Corpus {
  CorpusHeader header;
  std::vector<Sentence> sentences;
  bool operator==(const Corpus&) const = default;
};

// One annotation set across sentences; inner vectors sorted and unique.
using AnnotationLayer = std::vector<std::vector<GRInstance>>;

Corpus read_corpus(const std::filesystem::path& path);
Corpus read_corpus_text(std::string_view text, const std::string& source_name = "<text>");
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_text(const Corpus& corpus);

// Checks every invariant; throws Error naming the first violation.
void validate(const Corpus& corpus);
// Gives every sentence an (empty) entry for every declared set.
void normalize(Corpus& corpus);

// Binary arcs of one set, per sentence. Throws if the set is undeclared.
AnnotationLayer layer_from(const Corpus& corpus, const std::string& set_id);
// Installs a layer as annotation set `set_id`, declaring `scheme_labels`.
void set_layer(Corpus& corpus, const std::string& set_id, const AnnotationLayer& layer,
               const std::vector<std::string>& scheme_labels);

std::vector<GRInstance> sorted_unique(std::vector<GRInstance> arcs);
std::int64_t layer_arc_count(const AnnotationLayer& layer);

}  // namespace graft
