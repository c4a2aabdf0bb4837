// graft -- synthetic corpora with gold GR keys, plus simulated "existing
// systems" whose annotation standards diverge from the target scheme.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "graft/corpus.hpp"

namespace graft {

struct LexEntry {
  std::string word;
  std::string pos;
  double weight = 1.0;
};

// Sentence skeleton slots. SUBJ/OBJ/PRED expand to noun chunks, REL to a
// relative clause on the most recent chunk, COP to a copular predicate.
// XVERB is a main verb with the exceptional reversed object-arc convention
// (verb -> object head), a lexically conditioned quirk of the target scheme.
enum class Slot { Subj, Verb, XVerb, Obj, Time, Loc, Other, Rel, Cop, Pred };

struct SentenceTemplate {
  std::string name;
  double weight = 1.0;
  std::vector<Slot> slots;
};

struct GrammarSpec {
  std::uint64_t seed = 1;
  double hint_error_rate = 0.1;    // chance a pp-attachment hint points at the wrong site
  double loc_attach_obj_prob = 0.5;  // chance a PP attaches to the object over the predicate
  double adj_prob = 0.0;
  double poss_prob = 0.25;  // chance a noun chunk opens with a possessive determiner
  std::map<std::string, std::vector<LexEntry>> lexicon;
  std::vector<SentenceTemplate> templates;
};

GrammarSpec parse_grammar_spec(std::string_view text, const std::string& source_name = "<grammar>");
GrammarSpec read_grammar_spec(const std::filesystem::path& path);

// Labels of the generator's key scheme, in declaration order.
const std::vector<std::string>& target_scheme_labels();

// Deterministic for a given spec seed; sentence i is generated from its own
// seed stream, so a prefix of a larger corpus equals a smaller corpus.
Corpus generate_corpus(const GrammarSpec& spec, int n_sentences);

struct DivergenceOp {
  enum class Kind { Merge, Drop, Rename, ShiftRelpron, CopulaVariant, Noise };
  Kind kind = Kind::Rename;
  std::vector<std::string> from_labels;  // Merge (set), Drop/Rename (single)
  std::string to_label;                  // Merge/Rename
  std::string shift_label;               // ShiftRelpron: label to re-anchor
  std::string relpron_pos;               // ShiftRelpron: POS of the pronoun
  std::vector<std::string> copula_words;  // CopulaVariant
  std::string pred_label;                 // CopulaVariant: predicate arc label
  double fa_rate = 0.0;                   // Noise
  double miss_rate = 0.0;
  std::uint64_t seed = 0;
};

struct DivergenceSpec {
  std::vector<DivergenceOp> ops;  // applied in order
};

DivergenceSpec parse_divergence_spec(std::string_view text,
                                     const std::string& source_name = "<divergence>");
DivergenceSpec read_divergence_spec(const std::filesystem::path& path);

struct SimulatedSystem {
  AnnotationLayer annotations;
  std::vector<std::string> scheme;  // derived label inventory
};

// Applies the channel operations, in order, to the corpus's key annotations.
SimulatedSystem simulate_system(const Corpus& corpus, const DivergenceSpec& divergence,
                                const std::string& key_set = "key");

}  // namespace graft
