#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "support.hpp"

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  std::string cmd = std::string(HYRQL_CLI_PATH) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string corpus(const char* f) { return hyrql::fixtures::corpus_path(f); }

} // namespace

TEST(Cli, RunHadamardTrace) {
  CliRun r = cli("run " + corpus("hadamard.hyrql") + " --trace");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("3 (Qcase0)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("value after 3 steps"), std::string::npos);
}

TEST(Cli, JsonRunOfLen) {
  CliRun r = cli("--json run " + corpus("len.hyrql"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["status"], "value");
  EXPECT_EQ(j["value"], "3");
}

TEST(Cli, CheckRejectsDivergingSuperposition) { EXPECT_EQ(cli("check " + corpus("diverging_superposition.hyrql")).code, 1); }

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("run").code, 2);
}

TEST(Cli, TranslateThenLpo) {
  auto dir = std::filesystem::temp_directory_path() / "hyrql_cli_test";
  std::filesystem::create_directories(dir);
  std::string out = (dir / "ack.trs").string();
  CliRun t = cli("translate " + corpus("ackermann.hyrql") + " --entry ack -o " + out);
  ASSERT_EQ(t.code, 0) << t.out;
  std::string text = hyrql::fixtures::slurp(out);
  EXPECT_NE(text.find("ack(S(m'), S(n')) -> ack(m', ack(S(m'), n'));"), std::string::npos) << text;
  CliRun a = cli("analyze " + out + " --method lpo");
  EXPECT_EQ(a.code, 0) << a.out;
  std::filesystem::remove_all(dir);
}

TEST(Cli, QuasiInterpretationFromFile) {
  CliRun ok = cli("analyze " + corpus("len.hyrql") + " --entry len --method qi --interp " + corpus("len_interp.json"));
  EXPECT_EQ(ok.code, 0) << ok.out;
}

TEST(Cli, CompareAckermann) {
  CliRun r = cli("--json compare " + corpus("ackermann.hyrql") + " --entry ack --args \"2 3\"");
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["values_agree"], true);
}

TEST(Cli, CorpusTablePasses) {
  CliRun r = cli("corpus");
  EXPECT_EQ(r.code, 0) << r.out;
}
