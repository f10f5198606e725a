#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "lsistab/io.hpp"

#ifndef LSISTAB_CLI
#error "LSISTAB_CLI must name the built command-line tool"
#endif

using namespace lsistab;

namespace {

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(LSISTAB_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lsistab_test_cli";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string body(const std::filesystem::path& p) { return strip_metadata(read_text_file(p.string())); }

const std::string kGamma = R"({"dim":1,"components":[{"w":1,"mean":[0],"cov":[[1]]}]})";
const std::string kBimodal =
    R"({"dim":1,"components":[{"w":0.5,"mean":[-1],"cov":[[0.5]]},{"w":0.5,"mean":[1],"cov":[[0.5]]}]})";

}  // namespace

TEST(Cli, VerifyBoundsOnGaussian) {
  const auto out = scratch("gamma.json");
  const RunResult r = run("verify-bounds --strict --measure " + quoted(kGamma) + " --out " + out.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("reports hold"), std::string::npos);
  const json doc = json::parse(read_text_file(out.string()));
  for (const auto& rep : doc.at("result").at("reports")) EXPECT_TRUE(rep.at("holds").get<bool>()) << rep.at("name");
}

TEST(Cli, ValidationErrorsExitOne) {
  RunResult r = run("verify-bounds --measure " + quoted("{\"dim\":1,\n\"components\":[}"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("<inline>:2:"), std::string::npos) << r.out;
  r = run("verify-bounds --measure " + quoted(R"({"dim":1,"components":[{"w":1,"mean":[0]}]})"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("measure.components[0].cov"), std::string::npos) << r.out;
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("--no-such-flag").code, 1);
  EXPECT_EQ(run("simulate-follmer --measure " + quoted(kGamma) + " --paths 0").code, 1);
  EXPECT_EQ(run("counterexample-sweep --family other").code, 1);
  EXPECT_EQ(run("transport").code, 1);
}

TEST(Cli, ConfigFileMatchesFlags) {
  const auto cfg = scratch("run.json");
  {
    std::ofstream f(cfg);
    f << R"({"command": "probe-question1", "seed": 7, "support": 2, "measure": )" << kBimodal
      << R"(, "budgets": {"samples": 256}})";
  }
  const auto a = scratch("cfg_a.json"), b = scratch("cfg_b.json");
  ASSERT_EQ(run("--config " + cfg.string() + " --out " + a.string()).code, 0);
  ASSERT_EQ(run("probe-question1 --seed 7 --support 2 --samples 256 --measure " + quoted(kBimodal) + " --out " + b.string()).code, 0);
  EXPECT_EQ(body(a), body(b));
  // flags override the file
  const auto c = scratch("cfg_c.json");
  ASSERT_EQ(run("--config " + cfg.string() + " --seed 8 --out " + c.string()).code, 0);
  EXPECT_NE(body(a), body(c));
}

TEST(Cli, FormatBothWritesTwoFiles) {
  const auto stem = scratch("sweep");
  ASSERT_EQ(run("counterexample-sweep --family isotropic --k 400,900 --format both --out " + stem.string()).code, 0);
  const std::string csv = read_text_file(stem.string() + ".csv");
  EXPECT_EQ(csv.rfind("# {", 0), 0u);
  EXPECT_NE(csv.find("\nk,n_k,a,b,sigma,t,mean,variance,deficit_upper,w_lower_p1,w2_lower,tail_ok,"), std::string::npos);
  const json doc = json::parse(read_text_file(stem.string() + ".json"));
  EXPECT_EQ(doc.at("result").at("rows").size(), 2u);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const std::vector<std::string> commands = {
      "verify-bounds --measure " + quoted(kBimodal),
      "simulate-follmer --paths 400 --steps 32 --measure " + quoted(kBimodal),
      "decompose --theorem dim --paths 300 --steps 32 --samples 128 --measure " + quoted(kBimodal),
      "decompose --theorem uncor --paths 300 --steps 32 --samples 128 --measure " + quoted(kBimodal),
      "transport --samples 300 --measure " + quoted(R"({"family":"isotropic","k":400})"),
      "counterexample-sweep --family isotropic --k 400 --monte-carlo --samples 128",
      "probe-question1 --support 2 --samples 256 --measure " + quoted(kBimodal),
  };
  int i = 0;
  for (const auto& cmd : commands) {
    const auto a = scratch("det_a" + std::to_string(i)), b = scratch("det_b" + std::to_string(i));
    ++i;
    ASSERT_EQ(run(cmd + " --format both --threads 1 --out " + a.string()).code, 0) << cmd;
    ASSERT_EQ(run(cmd + " --format both --threads 4 --out " + b.string()).code, 0) << cmd;
    for (const char* ext : {".json", ".csv"}) {
      const std::string pa = a.string() + ext, pb = b.string() + ext;
      EXPECT_EQ(body(pa), body(pb)) << cmd << ext;
    }
  }
}
