// graft -- combining systems' translated annotations by set union.
#pragma once

#include <cstdint>
#include <vector>

#include "graft/corpus.hpp"

namespace graft {

struct UnionReport {
  std::vector<std::int64_t> component_counts;
  std::int64_t overlap_count = 0;  // instances collapsed by the union
  std::int64_t union_count = 0;
};

// Per-sentence set union of arc triples across components. Output arcs are
// sorted; conflicting labels on the same endpoint pair are distinct triples
// and are both kept.
std::pair<AnnotationLayer, UnionReport> union_annotations(
    const std::vector<AnnotationLayer>& components);

}  // namespace graft
