#include "graft/ensemble.hpp"

namespace graft {

std::pair<AnnotationLayer, UnionReport> union_annotations(
    const std::vector<AnnotationLayer>& components) {
  if (components.empty()) throw Error("union_annotations: no components");
  const std::size_t n_sentences = components.front().size();
  for (const AnnotationLayer& layer : components)
    if (layer.size() != n_sentences)
      throw Error("union_annotations: components cover different sentence counts");

  UnionReport report;
  std::int64_t total = 0;
  for (const AnnotationLayer& layer : components) {
    std::int64_t count = layer_arc_count(layer);
    report.component_counts.push_back(count);
    total += count;
  }

  AnnotationLayer merged(n_sentences);
  for (std::size_t si = 0; si < n_sentences; ++si) {
    std::vector<GRInstance> arcs;
    for (const AnnotationLayer& layer : components)
      arcs.insert(arcs.end(), layer[si].begin(), layer[si].end());
    merged[si] = sorted_unique(std::move(arcs));
  }
  report.union_count = layer_arc_count(merged);
  report.overlap_count = total - report.union_count;
  return {std::move(merged), report};
}

}  // namespace graft
