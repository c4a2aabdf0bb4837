#include "graft/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "graft/config.hpp"
#include "graft/util.hpp"

namespace graft {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open file for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::string union_report_text(const std::string& what, const UnionReport& report) {
  std::string out = what + "\n";
  for (std::size_t i = 0; i < report.component_counts.size(); ++i)
    out += "component-" + std::to_string(i) + "\t" +
           std::to_string(report.component_counts[i]) + "\n";
  out += "overlap\t" + std::to_string(report.overlap_count) + "\n";
  out += "union\t" + std::to_string(report.union_count) + "\n";
  return out;
}

struct Stage {
  std::string name;
  template <typename Fn>
  auto run(Fn&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error("stage '" + name + "': " + e.what());
    }
  }
};

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  ConfigFile file = read_config(path);
  ExperimentConfig config;
  const ConfigSection& exp = file.require("experiment");
  const std::string* train = exp.find("train");
  const std::string* test = exp.find("test");
  if (!train || !test) throw Error(path.string() + ": [experiment] needs train and test paths");
  // Relative corpus paths resolve against the config file's directory.
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : path.parent_path() / fp;
  };
  config.train_path = resolve(*train);
  config.test_path = resolve(*test);
  config.key_set = exp.get("key", config.key_set);
  config.seed = config_u64(exp, "seed", config.seed);
  config.rand_iterations = config_int(exp, "rand_iterations", config.rand_iterations);
  config.tbl.min_gain = config_int(exp, "min_gain", config.tbl.min_gain);
  config.tbl.max_iterations = config_int(exp, "max_rules", config.tbl.max_iterations);
  config.tbl.window = config_int(exp, "window", config.tbl.window);
  if (const std::string* templates = exp.find("templates")) {
    for (auto id : split_ws(*templates)) config.tbl.templates.emplace_back(id);
  }
  for (const ConfigSection& section : file.sections) {
    if (section.name == "experiment") continue;
    if (!section.name.starts_with("condition "))
      throw Error(path.string() + ": unexpected section [" + section.name + "]");
    ConditionSpec cond;
    cond.name = section.name.substr(10);
    if (cond.name.empty()) throw Error(path.string() + ": condition without a name");
    for (const auto& other : config.conditions)
      if (other.name == cond.name)
        throw Error(path.string() + ": duplicate condition '" + cond.name + "'");
    const std::string* systems = section.find("systems");
    if (systems)
      for (auto id : split_ws(*systems)) cond.systems.emplace_back(id);
    config.conditions.push_back(std::move(cond));
  }
  if (config.conditions.empty()) throw Error(path.string() + ": no [condition ...] sections");
  return config;
}

std::string serialize_experiment_config(const ExperimentConfig& config) {
  std::string out = "[experiment]\n";
  out += "train = " + config.train_path.string() + "\n";
  out += "test = " + config.test_path.string() + "\n";
  out += "key = " + config.key_set + "\n";
  out += "seed = " + std::to_string(config.seed) + "\n";
  out += "rand_iterations = " + std::to_string(config.rand_iterations) + "\n";
  out += "min_gain = " + std::to_string(config.tbl.min_gain) + "\n";
  out += "max_rules = " + std::to_string(config.tbl.max_iterations) + "\n";
  out += "window = " + std::to_string(config.tbl.window) + "\n";
  if (!config.tbl.templates.empty()) {
    out += "templates =";
    for (const auto& id : config.tbl.templates) out += " " + id;
    out += "\n";
  }
  for (const ConditionSpec& cond : config.conditions) {
    out += "[condition " + cond.name + "]\n";
    out += "systems =";
    for (const auto& sys : cond.systems) out += " " + sys;
    out += "\n";
  }
  return out;
}

std::vector<SignificanceRow> compare_conditions(
    const std::vector<std::pair<std::string, AnnotationLayer>>& conditions,
    const AnnotationLayer& key, int rand_iterations, std::uint64_t seed) {
  std::vector<SignificanceRow> rows;
  std::uint64_t counter = 0;
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    for (std::size_t j = i + 1; j < conditions.size(); ++j) {
      const auto& [name_i, layer_i] = conditions[i];
      const auto& [name_j, layer_j] = conditions[j];
      EvalReport rep_i = score(layer_i, key);
      EvalReport rep_j = score(layer_j, key);
      // One-sided tests run from the higher-scoring condition toward the lower.
      auto directed = [&](double vi, double vj) {
        return vi >= vj ? std::pair(i, j) : std::pair(j, i);
      };
      {
        auto [a, b] = directed(rep_i.r, rep_j.r);
        SignificanceRow row;
        row.a = conditions[a].first;
        row.b = conditions[b].first;
        row.metric = "recall";
        row.result = sign_test_recall(recall_flags(conditions[a].second, key),
                                      recall_flags(conditions[b].second, key));
        rows.push_back(std::move(row));
      }
      for (PairedStat stat : {PairedStat::Precision, PairedStat::FScore}) {
        auto [a, b] = stat == PairedStat::Precision ? directed(rep_i.p, rep_j.p)
                                                    : directed(rep_i.f, rep_j.f);
        SignificanceRow row;
        row.a = conditions[a].first;
        row.b = conditions[b].first;
        row.metric = stat == PairedStat::Precision ? "precision" : "f";
        row.result = randomization_test(per_unit_counts(conditions[a].second, key),
                                        per_unit_counts(conditions[b].second, key), stat,
                                        rand_iterations, mix64(seed, ++counter));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

RunResult run_pipeline(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  if (config.conditions.empty()) throw Error("experiment has no conditions");
  {
    std::set<std::string> names;
    for (const ConditionSpec& cond : config.conditions)
      if (!names.insert(cond.name).second)
        throw Error("duplicate condition '" + cond.name + "'");
  }
  std::filesystem::create_directories(out_dir);

  Stage load{"load-corpora"};
  Corpus train = load.run([&] { return read_corpus(config.train_path); });
  Corpus test = load.run([&] { return read_corpus(config.test_path); });
  AnnotationLayer key_train = load.run([&] { return layer_from(train, config.key_set); });
  AnnotationLayer key_test = load.run([&] { return layer_from(test, config.key_set); });
  const std::vector<std::string>& target_labels = train.header.schemes.at(config.key_set);

  RunResult result;
  for (const ConditionSpec& cond : config.conditions) {
    ConditionResult cr;
    cr.name = cond.name;
    std::filesystem::path cond_dir = out_dir / cond.name;
    std::filesystem::create_directories(cond_dir);

    std::vector<AnnotationLayer> translated_train;
    std::vector<AnnotationLayer> translated_test;
    for (const std::string& sys : cond.systems) {
      Stage translate{"translate:" + cond.name + ":" + sys};
      translate.run([&] {
        AnnotationLayer sys_train = layer_with_decomposed(train, sys);
        AnnotationLayer sys_test = layer_with_decomposed(test, sys);
        LabelMapping mapping = learn_mapping(sys_train, key_train);
        write_mapping(mapping, cond_dir / ("mapping-" + sys + ".tsv"));
        translated_train.push_back(apply_mapping(mapping, sys_train).annotations);
        translated_test.push_back(apply_mapping(mapping, sys_test).annotations);
        cr.mappings.emplace_back(sys, std::move(mapping));
        return 0;
      });
    }

    AnnotationLayer initial_train(train.sentences.size());
    AnnotationLayer initial_test(test.sentences.size());
    if (translated_train.size() == 1) {
      initial_train = translated_train.front();
      initial_test = translated_test.front();
    } else if (translated_train.size() > 1) {
      Stage unite{"union:" + cond.name};
      unite.run([&] {
        auto [train_union, train_report] = union_annotations(translated_train);
        auto [test_union, test_report] = union_annotations(translated_test);
        initial_train = std::move(train_union);
        initial_test = std::move(test_union);
        cr.union_train = train_report;
        cr.union_test = test_report;
        write_text(cond_dir / "union.txt", union_report_text("train", train_report) +
                                               union_report_text("test", test_report));
        return 0;
      });
    }

    Stage learn{"learn-rules:" + cond.name};
    cr.rules = learn.run([&] {
      return learn_rules(train, AnnotationState(initial_train), key_train, config.tbl);
    });
    write_rules(RuleList{config.tbl.window, cr.rules}, cond_dir / "rules.tsv");

    Stage apply{"apply-rules:" + cond.name};
    AnnotationState final_state = apply.run([&] {
      return apply_rules(cr.rules, test, AnnotationState(initial_test), config.tbl);
    });
    cr.initial_test = initial_test;
    cr.final_test = final_state.layer();
    cr.initial_report = score(cr.initial_test, key_test);
    cr.final_report = score(cr.final_test, key_test);

    Corpus annotated = test;
    set_layer(annotated, "initial", cr.initial_test, target_labels);
    set_layer(annotated, "final", cr.final_test, target_labels);
    write_corpus(annotated, cond_dir / "test-annotated.grc");

    result.conditions.push_back(std::move(cr));
  }

  // Error reduction against the first blank-start condition, when present.
  const ConditionResult* baseline = nullptr;
  for (std::size_t i = 0; i < result.conditions.size(); ++i) {
    if (config.conditions[i].systems.empty()) {
      baseline = &result.conditions[i];
      break;
    }
  }
  if (baseline && baseline->final_report.f < 100.0) {
    for (ConditionResult& cr : result.conditions) {
      if (cr.name == baseline->name) continue;
      cr.final_report.er_vs_baseline =
          error_reduction(cr.final_report.f, baseline->final_report.f);
    }
  }

  std::vector<std::pair<std::string, AnnotationLayer>> finals;
  for (const ConditionResult& cr : result.conditions) finals.emplace_back(cr.name, cr.final_test);
  result.significance =
      compare_conditions(finals, key_test, config.rand_iterations, config.seed);

  std::string report = "final annotations\n";
  {
    std::vector<std::pair<std::string, EvalReport>> rows;
    for (const ConditionResult& cr : result.conditions) rows.emplace_back(cr.name, cr.final_report);
    report += format_score_table(rows);
  }
  report += "\ninitial annotations (translation only)\n";
  {
    std::vector<std::pair<std::string, EvalReport>> rows;
    for (const ConditionResult& cr : result.conditions)
      rows.emplace_back(cr.name, cr.initial_report);
    report += format_score_table(rows);
  }
  report += '\n';
  for (const ConditionResult& cr : result.conditions)
    report += format_per_label(cr.name, cr.final_report) + "\n";
  report += "significance (final annotations)\n";
  report += format_significance(result.significance);
  result.report_text = report;
  write_text(out_dir / "report.txt", report);

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(serialize_experiment_config(config))));
  std::string manifest = "graft-run\n";
  manifest += "config-hash\t" + std::string(hash_hex) + "\n";
  manifest += "seed\t" + std::to_string(config.seed) + "\n";
  manifest += "rand-iterations\t" + std::to_string(config.rand_iterations) + "\n";
  manifest += "min-gain\t" + std::to_string(config.tbl.min_gain) + "\n";
  manifest += "max-rules\t" + std::to_string(config.tbl.max_iterations) + "\n";
  manifest += "window\t" + std::to_string(config.tbl.window) + "\n";
  manifest += "train\t" + config.train_path.string() + "\n";
  manifest += "test\t" + config.test_path.string() + "\n";
  for (const ConditionSpec& cond : config.conditions) {
    manifest += "condition\t" + cond.name;
    for (const std::string& sys : cond.systems) manifest += "\t" + sys;
    manifest += "\n";
  }
  write_text(out_dir / "manifest.txt", manifest);
  return result;
}

}  // namespace graft
