// graft -- end-to-end experiment pipeline: translate existing systems'
// annotations, optionally union them, learn rules, apply to the test set,
// score, and compare conditions.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graft/corpus.hpp"
#include "graft/ensemble.hpp"
#include "graft/eval.hpp"
#include "graft/mapping.hpp"
#include "graft/tbl.hpp"

namespace graft {

struct ConditionSpec {
  std::string name;
  std::vector<std::string> systems;  // existing-system set ids; empty = blank start
};

struct ExperimentConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::string key_set = "key";
  std::vector<ConditionSpec> conditions;
  TblConfig tbl;
  int rand_iterations = 10000;
  std::uint64_t seed = 1;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Canonical text form; its hash goes into the run manifest.
std::string serialize_experiment_config(const ExperimentConfig& config);

struct ConditionResult {
  std::string name;
  std::vector<std::pair<std::string, LabelMapping>> mappings;  // per system
  std::optional<UnionReport> union_train;
  std::optional<UnionReport> union_test;
  std::vector<TransformationRule> rules;
  AnnotationLayer initial_test;
  AnnotationLayer final_test;
  EvalReport initial_report;
  EvalReport final_report;
};

struct RunResult {
  std::vector<ConditionResult> conditions;
  std::vector<SignificanceRow> significance;
  std::string report_text;
};

// Executes every condition and writes artifacts (mapping files, rule files,
// annotated test corpora, report, manifest) under out_dir.
RunResult run_pipeline(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Pairwise one-sided tests between conditions' final test annotations:
// sign test on recall, randomization tests on precision and F.
std::vector<SignificanceRow> compare_conditions(
    const std::vector<std::pair<std::string, AnnotationLayer>>& conditions,
    const AnnotationLayer& key, int rand_iterations, std::uint64_t seed);

}  // namespace graft
