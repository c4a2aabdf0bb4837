// graft -- transformation-based error-driven learning over GR arcs.
//
// The learner greedily grows an ordered rule list. Each iteration grounds
// candidate rules in the sites that currently disagree with the key, scores
// every candidate corpus-wide, and accepts the best-scoring rule (ties broken
// by lexicographically smallest serialized rule) until the best gain drops
// below min_gain or the iteration cap is hit.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "graft/corpus.hpp"

namespace graft {

struct RuleAction {
  enum class Kind { Add, Remove, Relabel };
  Kind kind = Kind::Add;
  std::string label;     // Add: label to add; Relabel: from-label
  std::string to_label;  // Relabel only
  auto operator<=>(const RuleAction&) const = default;
};

// A condition is one template plus concrete slot bindings; a rule applies its
// action at every candidate site whose features equal the bindings.
struct TransformationRule {
  std::string template_id;
  std::vector<std::pair<std::string, std::string>> bindings;  // slot order fixed per template
  RuleAction action;
  int gain = 0;  // training-set net benefit at acceptance time

  std::string condition_key() const;  // template id + bindings
  std::string key() const;            // condition + action; the tie-break string
  std::string serialize() const;      // key + gain; one rule-file line
  bool operator==(const TransformationRule&) const = default;
};

struct TblConfig {
  int min_gain = 2;
  int max_iterations = 500;
  int window = 10;
  // Enabled template ids; empty means the full inventory.
  std::vector<std::string> templates;
};

const std::vector<std::string>& template_inventory();

// Current per-sentence hypothesis arcs, mutable during learning/application.
class AnnotationState {
 public:
  AnnotationState() = default;
  explicit AnnotationState(AnnotationLayer layer);
  static AnnotationState blank(std::size_t n_sentences);

  const AnnotationLayer& layer() const { return layer_; }
  std::size_t size() const { return layer_.size(); }
  bool contains(std::size_t sentence, const GRInstance& arc) const;
  void add(std::size_t sentence, GRInstance arc);      // no-op if present
  void remove(std::size_t sentence, const GRInstance& arc);
  std::span<const GRInstance> arcs_at(std::size_t sentence, int source, int target) const;
  bool operator==(const AnnotationState&) const = default;

 private:
  AnnotationLayer layer_;
};

struct Site {
  int source = 0;
  int target = 0;
  auto operator<=>(const Site&) const = default;
};

// Plausible arc endpoints: ordered pairs of anchor tokens (chunk heads and
// tokens outside any chunk) within the token-distance window, plus both
// orientations of every attachment hint.
std::vector<Site> candidate_sites(const Sentence& sentence, int window);

// Arc-level errors fixed minus errors introduced if the rule were applied
// once over the whole corpus. Pure; does not mutate the state.
std::int64_t score_rule(const TransformationRule& rule, const Corpus& corpus,
                        const AnnotationState& state, const AnnotationLayer& key,
                        const TblConfig& config);

std::vector<TransformationRule> learn_rules(const Corpus& corpus, const AnnotationState& initial,
                                            const AnnotationLayer& key, const TblConfig& config,
                                            AnnotationState* final_state = nullptr);

// Applies each rule once, in order, each over the whole corpus. Matching is
// evaluated against a snapshot per rule, then all edits are applied.
AnnotationState apply_rules(const std::vector<TransformationRule>& rules, const Corpus& corpus,
                            AnnotationState state, const TblConfig& config);

// |state ^ key| over the whole corpus: missing plus spurious arcs.
std::int64_t total_errors(const AnnotationState& state, const AnnotationLayer& key);

struct RuleList {
  int window = 10;
  std::vector<TransformationRule> rules;
};

std::string rules_to_text(const RuleList& rules);
RuleList rules_from_text(std::string_view text, const std::string& source_name = "<text>");
void write_rules(const RuleList& rules, const std::filesystem::path& path);
RuleList read_rules(const std::filesystem::path& path);

TransformationRule parse_rule_line(std::string_view line,
                                   const std::string& source_name = "<rule>", int lineno = 0);

}  // namespace graft
