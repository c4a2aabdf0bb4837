// graft -- label translation: learn a source->target label mapping from
// co-occurrence counts on a small training set and apply it.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "graft/corpus.hpp"

namespace graft {

// Raw co-occurrence evidence: how often each source label shares its exact
// endpoints with each target label, plus per-source instance totals.
struct CooccurrenceTable {
  std::map<std::string, std::map<std::string, std::int64_t>> counts;
  std::map<std::string, std::int64_t> totals;
};

struct MappingEntry {
  std::optional<std::string> target;  // nullopt = translate to no relation
  std::int64_t win_count = 0;
  std::int64_t runner_up = 0;
  std::int64_t correct = 0;
  std::int64_t false_alarms = 0;
};

struct LabelMapping {
  std::map<std::string, MappingEntry> entries;
  double null_fraction = 0.0;  // percent of training instances translated to nothing
  bool operator==(const LabelMapping&) const;
};

// Expands an n-ary relation (a1..an, label L) into binary sub-relations
// a1->ak labeled "L/argk", k = 2..n, in relation order then k order.
std::vector<GRInstance> decompose_nary(const std::vector<NaryRelation>& relations);

// Binary arcs of a set plus its decomposed n-ary relations, merged per sentence.
AnnotationLayer layer_with_decomposed(const Corpus& corpus, const std::string& set_id);

// For each source label e: find the target label with the most endpoint
// co-occurrences. Unique winner W with correct >= false alarms maps e -> W;
// anything else (tie, no winner, too many false alarms) maps e -> null.
LabelMapping learn_mapping(const AnnotationLayer& system_output, const AnnotationLayer& key);

CooccurrenceTable count_cooccurrences(const AnnotationLayer& system_output,
                                      const AnnotationLayer& key);

struct TranslationResult {
  AnnotationLayer annotations;
  std::int64_t dropped_null = 0;     // instances of labels mapped to null
  std::int64_t dropped_unknown = 0;  // instances of labels absent from the mapping
};

TranslationResult apply_mapping(const LabelMapping& mapping, const AnnotationLayer& system_output);

std::string mapping_to_text(const LabelMapping& mapping);
LabelMapping mapping_from_text(std::string_view text, const std::string& source_name = "<text>");
void write_mapping(const LabelMapping& mapping, const std::filesystem::path& path);
LabelMapping read_mapping(const std::filesystem::path& path);

}  // namespace graft
