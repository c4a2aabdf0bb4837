#include "graft/mapping.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "graft/util.hpp"

namespace graft {

namespace {
constexpr std::string_view kNullMark = "\xe2\x88\x85";  // U+2205
}

bool LabelMapping::operator==(const LabelMapping& other) const {
  if (entries.size() != other.entries.size()) return false;
  for (auto it = entries.begin(), jt = other.entries.begin(); it != entries.end(); ++it, ++jt) {
    if (it->first != jt->first) return false;
    const MappingEntry& a = it->second;
    const MappingEntry& b = jt->second;
    if (a.target != b.target || a.win_count != b.win_count || a.runner_up != b.runner_up ||
        a.correct != b.correct || a.false_alarms != b.false_alarms)
      return false;
  }
  return std::abs(null_fraction - other.null_fraction) < 1e-9;
}

std::vector<GRInstance> decompose_nary(const std::vector<NaryRelation>& relations) {
  std::vector<GRInstance> out;
  for (const NaryRelation& rel : relations) {
    if (rel.elements.size() < 3 || rel.elements.size() > 4)
      throw Error("n-ary relation must have 3 or 4 elements, got " +
                  std::to_string(rel.elements.size()));
    for (std::size_t k = 1; k < rel.elements.size(); ++k) {
      if (rel.elements[0] == rel.elements[k])
        throw Error("degenerate n-ary relation: element " + std::to_string(k + 1) +
                    " equals element 1");
      out.push_back(GRInstance{rel.elements[0], rel.elements[k],
                               rel.label + "/arg" + std::to_string(k + 1)});
    }
  }
  return out;
}

AnnotationLayer layer_with_decomposed(const Corpus& corpus, const std::string& set_id) {
  AnnotationLayer layer = layer_from(corpus, set_id);
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    auto it = corpus.sentences[i].sets.find(set_id);
    if (it == corpus.sentences[i].sets.end() || it->second.nary.empty()) continue;
    auto subs = decompose_nary(it->second.nary);
    layer[i].insert(layer[i].end(), subs.begin(), subs.end());
    layer[i] = sorted_unique(std::move(layer[i]));
  }
  return layer;
}

CooccurrenceTable count_cooccurrences(const AnnotationLayer& system_output,
                                      const AnnotationLayer& key) {
  if (system_output.size() != key.size())
    throw Error("system output and key cover different sentence counts (" +
                std::to_string(system_output.size()) + " vs " + std::to_string(key.size()) + ")");
  CooccurrenceTable table;
  for (std::size_t si = 0; si < key.size(); ++si) {
    for (const GRInstance& sys : system_output[si]) {
      table.totals[sys.label] += 1;
      for (const GRInstance& gold : key[si]) {
        if (gold.source == sys.source && gold.target == sys.target)
          table.counts[sys.label][gold.label] += 1;
      }
    }
  }
  return table;
}

LabelMapping learn_mapping(const AnnotationLayer& system_output, const AnnotationLayer& key) {
  CooccurrenceTable table = count_cooccurrences(system_output, key);
  LabelMapping mapping;
  for (const auto& [source_label, total] : table.totals) {
    MappingEntry entry;
    const auto cit = table.counts.find(source_label);
    std::string winner;
    bool unique = false;
    if (cit != table.counts.end()) {
      for (const auto& [target_label, n] : cit->second) {
        if (n > entry.win_count) {
          entry.runner_up = entry.win_count;
          entry.win_count = n;
          winner = target_label;
          unique = true;
        } else if (n == entry.win_count) {
          entry.runner_up = n;
          unique = false;
        } else if (n > entry.runner_up) {
          entry.runner_up = n;
        }
      }
    }
    if (!winner.empty()) {
      // Translating every instance of this source label to the winner:
      // instances whose endpoints carry the winner in the key are correct,
      // the rest are false alarms.
      entry.correct = entry.win_count;
      entry.false_alarms = total - entry.correct;
      if (unique && entry.correct >= entry.false_alarms) entry.target = winner;
    } else {
      entry.correct = 0;
      entry.false_alarms = total;
    }
    mapping.entries.emplace(source_label, std::move(entry));
  }
  std::int64_t all_instances = 0;
  std::int64_t null_instances = 0;
  for (const auto& [source_label, total] : table.totals) {
    all_instances += total;
    if (!mapping.entries.at(source_label).target) null_instances += total;
  }
  mapping.null_fraction =
      all_instances == 0 ? 0.0 : 100.0 * static_cast<double>(null_instances) /
                                      static_cast<double>(all_instances);
  return mapping;
}

TranslationResult apply_mapping(const LabelMapping& mapping,
                                const AnnotationLayer& system_output) {
  TranslationResult result;
  result.annotations.reserve(system_output.size());
  for (const auto& arcs : system_output) {
    std::vector<GRInstance> translated;
    for (const GRInstance& arc : arcs) {
      auto it = mapping.entries.find(arc.label);
      if (it == mapping.entries.end()) {
        ++result.dropped_unknown;
        continue;
      }
      if (!it->second.target) {
        ++result.dropped_null;
        continue;
      }
      translated.push_back(GRInstance{arc.source, arc.target, *it->second.target});
    }
    result.annotations.push_back(sorted_unique(std::move(translated)));
  }
  return result;
}

std::string mapping_to_text(const LabelMapping& mapping) {
  std::string out;
  for (const auto& [source_label, e] : mapping.entries) {
    if (e.target && *e.target == kNullMark)
      throw Error("target label collides with the null marker");
    out += source_label;
    out += '\t';
    out += e.target ? *e.target : std::string(kNullMark);
    out += '\t';
    out += std::to_string(e.win_count);
    out += '\t';
    out += std::to_string(e.runner_up);
    out += '\t';
    out += std::to_string(e.correct);
    out += '\t';
    out += std::to_string(e.false_alarms);
    out += '\n';
  }
  out += "null_fraction\t";
  out += fmt1(mapping.null_fraction);
  out += '\n';
  return out;
}

LabelMapping mapping_from_text(std::string_view text, const std::string& source_name) {
  LabelMapping mapping;
  bool saw_footer = false;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    bool last = eol == std::string_view::npos;
    std::string_view line = text.substr(pos, last ? text.size() - pos : eol - pos);
    ++lineno;
    if (!line.empty()) {
      auto f = split(line, '\t');
      if (f[0] == "null_fraction") {
        if (f.size() != 2 || !parse_double(f[1], mapping.null_fraction))
          throw ParseError(source_name, lineno, "malformed null_fraction footer");
        saw_footer = true;
      } else {
        if (saw_footer) throw ParseError(source_name, lineno, "entry after null_fraction footer");
        if (f.size() != 6) throw ParseError(source_name, lineno, "expected 6 tab-separated fields");
        MappingEntry e;
        if (f[1] != kNullMark) e.target = std::string(f[1]);
        if (!parse_i64(f[2], e.win_count) || !parse_i64(f[3], e.runner_up) ||
            !parse_i64(f[4], e.correct) || !parse_i64(f[5], e.false_alarms))
          throw ParseError(source_name, lineno, "non-numeric count field");
        if (!mapping.entries.emplace(std::string(f[0]), std::move(e)).second)
          throw ParseError(source_name, lineno, "duplicate source label");
      }
    }
    if (last) break;
    pos = eol + 1;
  }
  if (!saw_footer) throw Error(source_name + ": missing null_fraction footer");
  return mapping;
}

void write_mapping(const LabelMapping& mapping, const std::filesystem::path& path) {
  std::string text = mapping_to_text(mapping);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open file for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

LabelMapping read_mapping(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mapping file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return mapping_from_text(buf.str(), path.string());
}

}  // namespace graft
