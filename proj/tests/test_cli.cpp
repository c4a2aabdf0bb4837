#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "testutil.hpp"

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(GRAFT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("cli exit codes: help 0, usage 1, data error 2") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("gen --help") == 0);
  CHECK(run_cli("definitely-not-a-subcommand") == 1);
  CHECK(run_cli("gen") == 1);  // missing required options
  testutil::TempDir tmp;
  CHECK(run_cli("score --hypothesis h " + (tmp.path() / "missing.grc").string()) == 2);
}

TEST_CASE("cli stage chain matches the library pipeline") {
  testutil::TempDir tmp;
  auto p = [&](const char* name) { return (tmp.path() / name).string(); };
  std::filesystem::copy_file(testutil::config_dir() / "benchmark-grammar.cfg",
                             tmp.path() / "grammar.cfg");
  std::filesystem::copy_file(testutil::config_dir() / "sysB.cfg", tmp.path() / "sysb.cfg");
  std::filesystem::copy_file(testutil::config_dir() / "sysC.cfg", tmp.path() / "sysc.cfg");

  REQUIRE(run_cli("gen --config " + p("grammar.cfg") + " --n 30 -o " + p("train.grc")) == 0);
  REQUIRE(run_cli("gen --config " + p("grammar.cfg") + " --n 30 -o " + p("train2.grc")) == 0);
  CHECK(slurp(tmp.path() / "train.grc") == slurp(tmp.path() / "train2.grc"));
  REQUIRE(run_cli("gen --config " + p("grammar.cfg") + " --seed 12 --n 15 -o " + p("test.grc")) ==
          0);

  REQUIRE(run_cli("simulate --config " + p("sysb.cfg") + " --set-id sysB " + p("train.grc") +
                  " -o " + p("train-b.grc")) == 0);
  REQUIRE(run_cli("simulate --config " + p("sysc.cfg") + " --set-id sysC " + p("train-b.grc") +
                  " -o " + p("train-bc.grc")) == 0);
  REQUIRE(run_cli("learn-mapping --system sysB " + p("train-bc.grc") + " -o " +
                  p("mapping.tsv")) == 0);
  REQUIRE(run_cli("apply-mapping --mapping " + p("mapping.tsv") + " --system sysB --to init " +
                  p("train-bc.grc") + " -o " + p("train-init.grc")) == 0);
  REQUIRE(run_cli("learn-rules --initial init --min-gain 2 " + p("train-init.grc") + " -o " +
                  p("rules.tsv")) == 0);
  REQUIRE(run_cli("apply-rules --rules " + p("rules.tsv") + " --initial init --to final " +
                  p("train-init.grc") + " -o " + p("train-final.grc")) == 0);
  REQUIRE(run_cli("score --hypothesis final " + p("train-final.grc")) == 0);
  REQUIRE(run_cli("compare --a init --b final --iterations 200 " + p("train-final.grc")) == 0);

  // union subcommand over two translated layers
  REQUIRE(run_cli("apply-mapping --mapping " + p("mapping.tsv") + " --system sysB --to tb " +
                  p("train-bc.grc") + " -o " + p("u1.grc")) == 0);
  REQUIRE(run_cli("learn-mapping --system sysC " + p("u1.grc") + " -o " + p("mc.tsv")) == 0);
  REQUIRE(run_cli("apply-mapping --mapping " + p("mc.tsv") + " --system sysC --to tc " +
                  p("u1.grc") + " -o " + p("u2.grc")) == 0);
  REQUIRE(run_cli("union --sets tb,tc --to merged " + p("u2.grc") + " -o " + p("u3.grc")) == 0);
}

TEST_CASE("cli run executes an experiment config") {
  testutil::TempDir tmp;
  testutil::Workspace ws = testutil::make_workspace(tmp.path(), 25, 12, 100);
  std::ofstream cfg(tmp.path() / "exp.cfg");
  cfg << "[experiment]\n"
      << "train = " << ws.train.string() << "\n"
      << "test = " << ws.test.string() << "\n"
      << "seed = 9\nrand_iterations = 100\n"
      << "[condition NI]\nsystems =\n"
      << "[condition IaB]\nsystems = sysB\n";
  cfg.close();
  std::string out1 = (tmp.path() / "o1").string();
  std::string out2 = (tmp.path() / "o2").string();
  REQUIRE(run_cli("run --config " + (tmp.path() / "exp.cfg").string() + " --out " + out1) == 0);
  REQUIRE(run_cli("run --config " + (tmp.path() / "exp.cfg").string() + " --out " + out2) == 0);
  CHECK(slurp(tmp.path() / "o1" / "report.txt") == slurp(tmp.path() / "o2" / "report.txt"));
  CHECK(slurp(tmp.path() / "o1" / "IaB" / "rules.tsv") ==
        slurp(tmp.path() / "o2" / "IaB" / "rules.tsv"));
  CHECK(std::filesystem::exists(tmp.path() / "o1" / "manifest.txt"));
}
