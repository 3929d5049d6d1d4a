#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <gtest/gtest.h>

namespace {

struct Result {
  int status;
  std::string out;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + FRACSDE_CLI_PATH + "\" " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return {-1, {}};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int raw = pclose(p);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    const std::size_t end = s.find('\n', start);
    out.push_back(s.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  for (;;) {
    const std::size_t c = line.find(',', start);
    f.push_back(line.substr(start, c - start));
    if (c == std::string::npos) return f;
    start = c + 1;
  }
}

}  // namespace

TEST(Cli, TemporalStudyWritesOneRowPerLevel) {
  const Result r = run_cli("temporal --alpha 0.5 --hurst 0.75 --m -1 --K 16 --h 16 --grids 8,16,32,64 "
                           "--trajectories 4 --seed 1");
  ASSERT_EQ(r.status, 0);
  const auto l = split_lines(r.out);
  ASSERT_EQ(l.size(), 5u);
  EXPECT_EQ(l[0], "H,alpha,m,level,grid,error,rate,mean_rate,predicted_rate,seed");
  int with_rate = 0;
  for (std::size_t i = 1; i < l.size(); ++i) {
    const auto f = split_fields(l[i]);
    ASSERT_EQ(f.size(), 10u);
    if (!f[6].empty()) ++with_rate;
    EXPECT_EQ(f[9], "1");
  }
  EXPECT_EQ(with_rate, 3);
}

TEST(Cli, DeterministicMeshLadderIsSecondOrder) {
  const Result r = run_cli("deterministic --alpha 0.5 --grids-h 8,16,32 --n-time 256 --oracle-modes 400");
  ASSERT_EQ(r.status, 0);
  const auto l = split_lines(r.out);
  ASSERT_EQ(l.size(), 4u);
  EXPECT_NEAR(std::stod(split_fields(l[1])[7]), 2.0, 0.15);
}

TEST(Cli, SampleNoiseIsReproducible) {
  const std::string args = "sample-noise --hurst 0.7 --n 1024 --seed 5";
  const Result a = run_cli(args), b = run_cli(args);
  ASSERT_EQ(a.status, 0);
  const auto l = split_lines(a.out);
  ASSERT_EQ(l.size(), 1025u);
  EXPECT_EQ(l[0], "step_index,increment");
  EXPECT_EQ(split_fields(l[1])[0], "1");
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(run_cli("sample-noise --hurst 0.7 --n 1024 --seed 6").out, a.out);
}

TEST(Cli, PredictRates) {
  const Result r = run_cli("predict-rates --alpha 0.3 --hurst 0.6 --m 0");
  ASSERT_EQ(r.status, 0);
  const auto l = split_lines(r.out);
  ASSERT_EQ(l.size(), 2u);
  const auto f = split_fields(l[1]);
  EXPECT_NEAR(std::stod(f[4]), 0.525, 1e-9);
  EXPECT_NEAR(std::stod(f[5]), 1.5, 1e-9);
}

TEST(Cli, ErrorsExitNonzero) {
  EXPECT_NE(run_cli("temporal --bogus 1").status, 0);
  EXPECT_NE(run_cli("temporal --grids 8,24 --seed 1 --trajectories 2 --K 4 --h 8").status, 0);
  EXPECT_NE(run_cli("temporal --grids 8,16 --trajectories 2 --K 4 --h 8").status, 0);
  EXPECT_NE(run_cli("deterministic --grids 8,16 --grids-h 8,16").status, 0);
  EXPECT_NE(run_cli("sample-noise --hurst 1.5 --n 8").status, 0);
  EXPECT_NE(run_cli("").status, 0);
}

TEST(Cli, ConfigFileWithOverride) {
  const auto path = std::filesystem::temp_directory_path() / "fracsde_cli_test.cfg";
  {
    std::ofstream cfg(path);
    cfg << "# small study\nalpha = 0.5\nhurst = 0.75\nm = -1\nK = 8\nh = 8\ngrids = 8,16\n"
           "trajectories = 3\nseed = 3\n";
  }
  const Result base = run_cli("temporal --config " + path.string());
  ASSERT_EQ(base.status, 0);
  const auto l = split_lines(base.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(split_fields(l[1])[9], "3");
  const Result over = run_cli("temporal --config " + path.string() + " --seed 4");
  ASSERT_EQ(over.status, 0);
  EXPECT_EQ(split_fields(split_lines(over.out)[1])[9], "4");
  std::filesystem::remove(path);
}
