#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "nubox/io.hpp"
#include "nubox/report.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(NUBOX_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("nubox_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    // toy net: output relu(x1 - x2)
    nubox::write_file(path("toy.json"), R"({"version":1,"activation":"relu","sizes":[2,1,1],
        "layers":[{"weight":[[1,-1]],"bias":[0]},{"weight":[[1]],"bias":[0]}]})");
    // two-class linear model z = (x, -x)
    nubox::write_file(path("lin.json"), R"({"version":1,"activation":"relu","sizes":[1,2],
        "layers":[{"weight":[[1],[-1]],"bias":[0,0]}]})");
    nubox::write_file(path("pts.csv"), "0,0.5\n1,0.5\n0,2\n");
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& f) const { return (dir_ / f).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, BoundsAllAlgorithms) {
  const CliResult s = run("bounds --model " + path("toy.json") + " --input 0.5,0.5 --eps 0.1,0.1 --algo quad");
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("lower -0.1"), std::string::npos) << s.out;
  for (const char* algo : {"simple", "combined", "general"}) {
    const CliResult r = run("bounds --model " + path("toy.json") + " --input 0.5,0.5 --eps 0.1,0.1 --algo " + algo);
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("lower 0\n"), std::string::npos) << algo << ": " << r.out;
  }
}

TEST_F(Cli, InputErrorsExitThree) {
  EXPECT_EQ(run("bounds --model " + path("toy.json") + " --input 0.5 --eps 0.1").code, 3);
  EXPECT_EQ(run("bounds --model " + path("toy.json") + " --input a,b --eps 0.1,0.1").code, 3);
  EXPECT_EQ(run("bounds --model " + path("missing.json") + " --input 0,0 --eps 0,0").code, 3);
  nubox::write_file(path("bad.json"), "{");
  EXPECT_EQ(run("certify --model " + path("bad.json") + " --data " + path("pts.csv")).code, 3);
  EXPECT_EQ(run("nosuchcommand").code, 3);
}

TEST_F(Cli, CertifyPointsAndExitCodes) {
  const std::string base = "certify --model " + path("lin.json") + " --data " + path("pts.csv") + " --delta 0";
  EXPECT_EQ(run(base + " --point 0 --mode uniform --out " + path("u.csv")).code, 0);
  const auto rows = nubox::parse_report(nubox::read_file(path("u.csv")));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].gamma_uniform, 0.5, 1e-6);
  EXPECT_EQ(run(base + " --point 1").code, 2);
  EXPECT_EQ(run(base + " --point 7").code, 3);

  const CliResult all = run(base + " --mode nonuniform --workers 2");
  EXPECT_EQ(all.code, 0);
  const auto rep = nubox::parse_report(all.out);
  ASSERT_EQ(rep.size(), 3u);
  EXPECT_TRUE(rep[0].feasible);
  EXPECT_FALSE(rep[1].feasible);
  EXPECT_EQ(rep[2].index, 2u);

  nubox::write_file(path("cfg.json"), R"({"outer_iters": 2, "inner_steps": 5})");
  EXPECT_EQ(run(base + " --point 0 --config " + path("cfg.json")).code, 0);
  nubox::write_file(path("cfg2.json"), R"({"outer": 2})");
  EXPECT_EQ(run(base + " --point 0 --config " + path("cfg2.json")).code, 3);
}

TEST_F(Cli, MapAndSimilarity) {
  nubox::write_file(path("r.csv"), nubox::format_report({{4, 0, true, 0.1, 0.1, 1, {0, 0.1, 0.2, 0.1}},
                                                         {5, 1, true, 0.1, 0.1, 1, {0.1, 0.1, 0.1, 0.1}}},
                                                        4));
  EXPECT_EQ(run("map --eps-file " + path("r.csv") + " --row 4 --shape 2x2 --out " + path("m.pgm")).code, 0);
  EXPECT_EQ(nubox::read_file(path("m.pgm")), "P2\n2 2\n255\n255 128\n0 128\n");
  EXPECT_TRUE(fs::exists(path("m.pgm.csv")));
  EXPECT_EQ(run("map --eps-file " + path("r.csv") + " --row 9 --shape 2x2 --out " + path("m.pgm")).code, 3);
  EXPECT_EQ(run("map --eps-file " + path("r.csv") + " --row 4 --shape 3x2 --out " + path("m.pgm")).code, 3);
  const CliResult s = run("similarity --eps-file " + path("r.csv"));
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("pairs 1"), std::string::npos);
}

TEST_F(Cli, GradcheckAndOracle) {
  const CliResult g = run("gradcheck --model " + path("toy.json") + " --input 0.5,0.4 --eps 0.2,0.3 --h 1e-6");
  EXPECT_EQ(g.code, 0);
  EXPECT_NE(g.out.find("max_rel_error"), std::string::npos);
  const CliResult o = run("oracle --model " + path("toy.json") + " --input 0.5,0.5 --eps 0.1,0.1 --tol 1e-4");
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("converged 1"), std::string::npos) << o.out;
}

TEST_F(Cli, TrainAndDemo) {
  nubox::write_file(path("d.csv"), "0,-0.5,0\n1,0.5,0\n0,-0.7,0.1\n1,0.6,-0.2\n");
  const std::string m = path("t.json");
  EXPECT_EQ(run("train --data " + path("d.csv") + " --arch 2,4,2 --epochs 50 --out " + m).code, 0);
  EXPECT_TRUE(std::holds_alternative<nubox::Network>(nubox::load_model_file(m)));
  EXPECT_EQ(run("train --data " + path("d.csv") + " --arch 2,4,2 --epochs 2 --pgd-tau 0.1 --pgd-iters 3 --out " + m)
                .code,
            0);
  EXPECT_EQ(run("train --data " + path("d.csv") + " --arch 3,4,2 --out " + m).code, 3);

  const CliResult d = run("demo2d --seed 1 --epochs 2 --cert-points 4 --workers 1 --out " + path("demo"));
  EXPECT_EQ(d.code, 0);
  for (const char* f : {"train.csv", "test.csv", "normal_model.json", "robust_model.json", "normal_report.csv",
                        "robust_report.csv", "normal_rects.csv", "robust_rects.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "demo" / f)) << f;
  }
  EXPECT_EQ(nubox::parse_report(nubox::read_file(path("demo/normal_report.csv"))).size(), 4u);
}
