#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mdepth/io.hpp"
#include "mdepth/synth.hpp"
#include "test_support.hpp"

using namespace mdepth;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string("'") + MDEPTH_CLI + "' " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("eval").code, 1);
  EXPECT_EQ(run("eval --manifest /nonexistent/m.tsv").code, 1);
  EXPECT_EQ(run("gradcheck --instances -2").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, GradcheckPassesAndMutationFails) {
  const auto ok = run("gradcheck --instances 10");
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  for (const char* name : {"lambda_mse", "consistency", "eg_ssi", "uncertainty_l1"}) {
    EXPECT_NE(ok.out.find(name), std::string::npos) << name;
  }
  const auto bad = run("gradcheck --instances 10 --flip-sign");
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST(Cli, EvalIsDeterministicAcrossRunsAndJobs) {
  test::TempDir dir("cli_eval");
  ASSERT_EQ(run("synth --scenes 4 --width 48 --height 36 --pred-scale 1.1 --out " + q(dir / "d")).code, 0);
  const auto m = q(dir / "d" / "manifest.tsv");
  const auto a = run("eval --manifest " + m + " --format csv --jobs 1 --out " + q(dir / "a"));
  const auto b = run("eval --manifest " + m + " --format csv --jobs 1 --out " + q(dir / "b"));
  const auto c = run("eval --manifest " + m + " --format csv --jobs 8 --out " + q(dir / "c"));
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  for (const char* f : {"per_image.csv", "summary.csv"}) {
    const auto ref = slurp(dir / "a" / f);
    EXPECT_FALSE(ref.empty());
    EXPECT_EQ(ref, slurp(dir / "b" / f));
    EXPECT_EQ(ref, slurp(dir / "c" / f));
  }
  EXPECT_EQ(slurp(dir / "a" / "summary.csv"), a.out);
}

TEST(Cli, EvalReportsMissingRecordAsDataFailure) {
  test::TempDir dir("cli_missing");
  SynthOptions opt;
  opt.scenes = 2;
  opt.width = 32;
  opt.height = 24;
  auto m = write_synthetic_dataset(dir / "d", opt);
  m.records[1].pred = dir / "d" / "no_such_pred.dkf";
  write_manifest(m, dir / "broken.tsv");
  const auto r = run("eval --manifest " + q(dir / "broken.tsv") + " --format kv");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("failures=1"), std::string::npos);
  EXPECT_NE(r.out.find("delta1.count=1"), std::string::npos);
}

TEST(Cli, MalformedManifestIsDataFailure) {
  test::TempDir dir("cli_bad_manifest");
  std::ofstream(dir / "m.tsv") << "a\tb\n";
  EXPECT_EQ(run("eval --manifest " + q(dir / "m.tsv")).code, 2);
}

TEST(Cli, LossEchoesWeightsAndOverrides) {
  test::TempDir dir("cli_loss");
  SynthOptions opt;
  opt.scenes = 1;
  opt.width = 64;
  opt.height = 48;
  opt.pred_scale = 1.2;
  const auto m = write_synthetic_dataset(dir.path(), opt);
  const auto& r = m.records[0];
  const std::string base = "loss --pred " + q(r.pred) + " --gt " + q(r.gt) + " --rgb " + q(r.rgb) +
                           " --camera " + q(r.camera);
  const auto def = run(base);
  ASSERT_EQ(def.code, 0);
  EXPECT_NE(def.out.find("weights lambda=(1,1,0.15) alpha=0.1 beta=1 gamma=0.1"), std::string::npos);
  for (const char* name : {"lambda_mse", "consistency", "eg_ssi", "uncertainty_l1", "total"}) {
    EXPECT_NE(def.out.find(name), std::string::npos) << name;
  }
  std::ofstream(dir / "cfg.json") << R"({"weights": {"alpha": 0.25}})";
  const auto over = run(base + " --config " + q(dir / "cfg.json") + " --lambda 1 1 0.5 --gamma 0");
  ASSERT_EQ(over.code, 0);
  EXPECT_NE(over.out.find("weights lambda=(1,1,0.5) alpha=0.25 beta=1 gamma=0"), std::string::npos);
  EXPECT_EQ(run(base + " --seed 5").out, run(base + " --seed 5 --threads 3").out);
  EXPECT_EQ(run(base + " --lambda 1 2").code, 1);
  std::ofstream(dir / "bad.json") << R"({"weights": {"omega": 1}})";
  EXPECT_EQ(run(base + " --config " + q(dir / "bad.json")).code, 2);
}

TEST(Cli, LossWritesGradients) {
  test::TempDir dir("cli_grad");
  SynthOptions opt;
  opt.scenes = 1;
  opt.width = 48;
  opt.height = 36;
  opt.pred_scale = 0.9;
  const auto m = write_synthetic_dataset(dir.path(), opt);
  const auto& r = m.records[0];
  const auto res = run("loss --pred " + q(r.pred) + " --gt " + q(r.gt) + " --rgb " + q(r.rgb) +
                       " --sigma " + q(r.uncertainty) + " --grad --grad-out " + q(dir / "g"));
  ASSERT_EQ(res.code, 0);
  EXPECT_NE(res.out.find("grad z_log"), std::string::npos);
  const auto g = read_scalar_grid(dir / "g" / "grad_z_log.dkf");
  EXPECT_EQ(g.width(), 48);
}

TEST(Cli, BenchWritesCsv) {
  test::TempDir dir("cli_bench");
  const auto r = run("bench --sizes 8 --counts 0 16 --threads 1 --repeats 1 --grid 64 --out " +
                     q(dir / "b.csv"));
  ASSERT_EQ(r.code, 0);
  const auto csv = slurp(dir / "b.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, 3u);
}
