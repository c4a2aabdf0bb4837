// graft command line: corpus generation, system simulation, mapping,
// rule learning, union combination, scoring, and full pipeline runs.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graft/config.hpp"
#include "graft/ensemble.hpp"
#include "graft/eval.hpp"
#include "graft/mapping.hpp"
#include "graft/pipeline.hpp"
#include "graft/synthesis.hpp"
#include "graft/tbl.hpp"
#include "graft/util.hpp"

namespace {

using namespace graft;

std::vector<std::string> comma_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto part : split(value, ','))
    if (!part.empty()) out.emplace_back(part);
  return out;
}

const std::vector<std::string>& scheme_of(const Corpus& corpus, const std::string& set_id) {
  auto it = corpus.header.schemes.find(set_id);
  if (it == corpus.header.schemes.end())
    throw Error("annotation set '" + set_id + "' not declared in corpus header");
  return it->second;
}

int run_app(int argc, char** argv) {
  CLI::App app{"graft: adapt existing grammatical-relation annotators to a new scheme"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus with key annotations");
  std::string gen_config, gen_output;
  int gen_n = 0;
  std::uint64_t gen_seed = 0;
  bool gen_seed_set = false;
  gen->add_option("--config", gen_config, "grammar config file")->required();
  gen->add_option("--n", gen_n, "number of sentences")->required();
  gen->add_option("--seed", gen_seed, "override the grammar seed")
      ->each([&](const std::string&) { gen_seed_set = true; });
  gen->add_option("-o,--output", gen_output, "output corpus file")->required();

  // simulate
  auto* simulate =
      app.add_subcommand("simulate", "derive a divergent system's annotations from the key");
  std::string sim_config, sim_set, sim_output, sim_input;
  simulate->add_option("--config", sim_config, "divergence config file")->required();
  simulate->add_option("--set-id", sim_set, "name for the simulated annotation set")->required();
  simulate->add_option("input", sim_input, "input corpus")->required();
  simulate->add_option("-o,--output", sim_output, "output corpus file")->required();

  // learn-mapping
  auto* learnmap = app.add_subcommand("learn-mapping", "learn a label translation from co-occurrences");
  std::string lm_system, lm_key = "key", lm_input, lm_output;
  learnmap->add_option("--system", lm_system, "source annotation set")->required();
  learnmap->add_option("--key", lm_key, "key annotation set");
  learnmap->add_option("input", lm_input, "training corpus")->required();
  learnmap->add_option("-o,--output", lm_output, "output mapping file")->required();

  // apply-mapping
  auto* applymap = app.add_subcommand("apply-mapping", "translate a system's annotations");
  std::string am_mapping, am_system, am_to, am_scheme_from = "key", am_input, am_output;
  applymap->add_option("--mapping", am_mapping, "mapping file")->required();
  applymap->add_option("--system", am_system, "source annotation set")->required();
  applymap->add_option("--to", am_to, "name for the translated set")->required();
  applymap->add_option("--scheme-from", am_scheme_from, "set whose scheme the output uses");
  applymap->add_option("input", am_input, "input corpus")->required();
  applymap->add_option("-o,--output", am_output, "output corpus file")->required();

  // union
  auto* unite = app.add_subcommand("union", "combine annotation sets by set union");
  std::string un_sets, un_to, un_scheme_from = "key", un_input, un_output;
  unite->add_option("--sets", un_sets, "comma-separated set ids")->required();
  unite->add_option("--to", un_to, "name for the union set")->required();
  unite->add_option("--scheme-from", un_scheme_from, "set whose scheme the output uses");
  unite->add_option("input", un_input, "input corpus")->required();
  unite->add_option("-o,--output", un_output, "output corpus file")->required();

  // learn-rules
  auto* learnr = app.add_subcommand("learn-rules", "learn a transformation rule list");
  std::string lr_initial, lr_key = "key", lr_input, lr_output;
  TblConfig lr_config;
  learnr->add_option("--initial", lr_initial, "initial annotation set (omit for blank start)");
  learnr->add_option("--key", lr_key, "key annotation set");
  learnr->add_option("--min-gain", lr_config.min_gain, "minimum accepted rule gain");
  learnr->add_option("--iterations", lr_config.max_iterations, "rule count cap");
  learnr->add_option("--window", lr_config.window, "candidate-site token window");
  learnr->add_option("input", lr_input, "training corpus")->required();
  learnr->add_option("-o,--output", lr_output, "output rules file")->required();

  // apply-rules
  auto* applyr = app.add_subcommand("apply-rules", "apply a learned rule list");
  std::string ar_rules, ar_initial, ar_to, ar_scheme_from = "key", ar_input, ar_output;
  applyr->add_option("--rules", ar_rules, "rules file")->required();
  applyr->add_option("--initial", ar_initial, "initial annotation set (omit for blank start)");
  applyr->add_option("--to", ar_to, "name for the final set")->required();
  applyr->add_option("--scheme-from", ar_scheme_from, "set whose scheme the output uses");
  applyr->add_option("input", ar_input, "input corpus")->required();
  applyr->add_option("-o,--output", ar_output, "output corpus file")->required();

  // score
  auto* score_cmd = app.add_subcommand("score", "score a hypothesis set against the key");
  std::string sc_hyp, sc_key = "key", sc_name, sc_input;
  double sc_baseline_f = -1.0;
  score_cmd->add_option("--hypothesis", sc_hyp, "hypothesis annotation set")->required();
  score_cmd->add_option("--key", sc_key, "key annotation set");
  score_cmd->add_option("--name", sc_name, "row label for the report");
  score_cmd->add_option("--baseline-f", sc_baseline_f, "baseline F% for error reduction");
  score_cmd->add_option("input", sc_input, "input corpus")->required();

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "significance tests between two sets");
  std::string cp_a, cp_b, cp_key = "key", cp_input;
  int cp_iterations = 10000;
  std::uint64_t cp_seed = 1;
  compare_cmd->add_option("--a", cp_a, "first hypothesis set")->required();
  compare_cmd->add_option("--b", cp_b, "second hypothesis set")->required();
  compare_cmd->add_option("--key", cp_key, "key annotation set");
  compare_cmd->add_option("--iterations", cp_iterations, "randomization iterations");
  compare_cmd->add_option("--seed", cp_seed, "randomization seed");
  compare_cmd->add_option("input", cp_input, "input corpus")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "run the full pipeline from an experiment config");
  std::string run_config, run_out;
  std::uint64_t run_seed = 0;
  int run_iterations = -1, run_min_gain = -1;
  bool run_seed_set = false;
  run_cmd->add_option("--config", run_config, "experiment config file")->required();
  run_cmd->add_option("--out", run_out, "output directory for artifacts")->required();
  run_cmd->add_option("--seed", run_seed, "override the config seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run_cmd->add_option("--iterations", run_iterations, "override randomization iterations");
  run_cmd->add_option("--min-gain", run_min_gain, "override the learner's minimum gain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage problems exit 1; --help exits 0
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) {
    GrammarSpec spec = read_grammar_spec(gen_config);
    if (gen_seed_set) spec.seed = gen_seed;
    Corpus corpus = generate_corpus(spec, gen_n);
    write_corpus(corpus, gen_output);
    std::int64_t arcs = layer_arc_count(layer_from(corpus, "key"));
    std::printf("generated %zu sentences, %lld key arcs -> %s\n", corpus.sentences.size(),
                static_cast<long long>(arcs), gen_output.c_str());
  } else if (simulate->parsed()) {
    Corpus corpus = read_corpus(sim_input);
    DivergenceSpec spec = read_divergence_spec(sim_config);
    SimulatedSystem sys = simulate_system(corpus, spec);
    set_layer(corpus, sim_set, sys.annotations, sys.scheme);
    write_corpus(corpus, sim_output);
    std::printf("simulated set '%s' (%lld arcs) -> %s\n", sim_set.c_str(),
                static_cast<long long>(layer_arc_count(sys.annotations)), sim_output.c_str());
  } else if (learnmap->parsed()) {
    Corpus corpus = read_corpus(lm_input);
    LabelMapping mapping =
        learn_mapping(layer_with_decomposed(corpus, lm_system), layer_from(corpus, lm_key));
    write_mapping(mapping, lm_output);
    std::printf("learned %zu entries, null fraction %s%% -> %s\n", mapping.entries.size(),
                fmt1(mapping.null_fraction).c_str(), lm_output.c_str());
  } else if (applymap->parsed()) {
    Corpus corpus = read_corpus(am_input);
    LabelMapping mapping = read_mapping(am_mapping);
    TranslationResult translated =
        apply_mapping(mapping, layer_with_decomposed(corpus, am_system));
    std::vector<std::string> scheme = scheme_of(corpus, am_scheme_from);
    set_layer(corpus, am_to, translated.annotations, scheme);
    write_corpus(corpus, am_output);
    std::printf("translated %lld arcs (dropped %lld null, %lld unknown) -> %s\n",
                static_cast<long long>(layer_arc_count(translated.annotations)),
                static_cast<long long>(translated.dropped_null),
                static_cast<long long>(translated.dropped_unknown), am_output.c_str());
  } else if (unite->parsed()) {
    Corpus corpus = read_corpus(un_input);
    std::vector<std::string> ids = comma_list(un_sets);
    if (ids.size() < 2) throw Error("union needs at least two sets");
    std::vector<AnnotationLayer> components;
    for (const std::string& id : ids) components.push_back(layer_from(corpus, id));
    auto [merged, report] = union_annotations(components);
    std::vector<std::string> scheme = scheme_of(corpus, un_scheme_from);
    set_layer(corpus, un_to, merged, scheme);
    write_corpus(corpus, un_output);
    for (std::size_t i = 0; i < ids.size(); ++i)
      std::printf("%s\t%lld\n", ids[i].c_str(),
                  static_cast<long long>(report.component_counts[i]));
    std::printf("overlap\t%lld\nunion\t%lld\n", static_cast<long long>(report.overlap_count),
                static_cast<long long>(report.union_count));
  } else if (learnr->parsed()) {
    Corpus corpus = read_corpus(lr_input);
    AnnotationState initial = lr_initial.empty()
                                  ? AnnotationState::blank(corpus.sentences.size())
                                  : AnnotationState(layer_from(corpus, lr_initial));
    auto rules = learn_rules(corpus, initial, layer_from(corpus, lr_key), lr_config);
    write_rules(RuleList{lr_config.window, rules}, lr_output);
    std::printf("learned %zu rules -> %s\n", rules.size(), lr_output.c_str());
  } else if (applyr->parsed()) {
    Corpus corpus = read_corpus(ar_input);
    RuleList rules = read_rules(ar_rules);
    AnnotationState initial = ar_initial.empty()
                                  ? AnnotationState::blank(corpus.sentences.size())
                                  : AnnotationState(layer_from(corpus, ar_initial));
    TblConfig config;
    config.window = rules.window;
    AnnotationState final_state = apply_rules(rules.rules, corpus, std::move(initial), config);
    std::vector<std::string> scheme = scheme_of(corpus, ar_scheme_from);
    set_layer(corpus, ar_to, final_state.layer(), scheme);
    write_corpus(corpus, ar_output);
    std::printf("applied %zu rules -> %s\n", rules.rules.size(), ar_output.c_str());
  } else if (score_cmd->parsed()) {
    Corpus corpus = read_corpus(sc_input);
    EvalReport report = score(layer_from(corpus, sc_hyp), layer_from(corpus, sc_key));
    if (sc_baseline_f >= 0.0) report.er_vs_baseline = error_reduction(report.f, sc_baseline_f);
    std::string name = sc_name.empty() ? sc_hyp : sc_name;
    std::fputs(format_score_table({{name, report}}).c_str(), stdout);
    std::fputs(format_per_label(name, report).c_str(), stdout);
  } else if (compare_cmd->parsed()) {
    Corpus corpus = read_corpus(cp_input);
    std::vector<std::pair<std::string, AnnotationLayer>> conditions = {
        {cp_a, layer_from(corpus, cp_a)}, {cp_b, layer_from(corpus, cp_b)}};
    auto rows = compare_conditions(conditions, layer_from(corpus, cp_key), cp_iterations, cp_seed);
    std::fputs(format_significance(rows).c_str(), stdout);
  } else if (run_cmd->parsed()) {
    ExperimentConfig config = load_experiment_config(run_config);
    if (run_seed_set) config.seed = run_seed;
    if (run_iterations >= 0) config.rand_iterations = run_iterations;
    if (run_min_gain >= 0) config.tbl.min_gain = run_min_gain;
    RunResult result = run_pipeline(config, run_out);
    std::fputs(result.report_text.c_str(), stdout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const graft::Error& e) {
    std::fprintf(stderr, "graft: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "graft: %s\n", e.what());
    return 2;
  }
}
