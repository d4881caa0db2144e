//
// Copyright 2026 The RACE Sketch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// End-to-end runs of the race binary.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("race_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  // Exit status of `race <args>`; stdout lands in out.txt, stderr in err.txt.
  int Run(const std::string& args) const {
    const std::string cmd = std::string(RACE_CLI_PATH) + " " + args + " > " + Path("out.txt") +
                            " 2> " + Path("err.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Read(const std::string& name) const {
    std::ifstream in(Path(name), std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  void Write(const std::string& name, const std::string& text) const {
    std::ofstream(Path(name)) << text;
  }

  void WriteGaussian(const std::string& name, std::size_t n, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::ofstream out(Path(name));
    out.precision(17);
    for (std::size_t i = 0; i < n; ++i) out << g(rng) << ',' << g(rng) << ',' << g(rng) << '\n';
  }

  fs::path dir_;
};

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST_F(CliTest, BuildThenQueryPrintsOneRowPerQuery) {
  WriteGaussian("data.csv", 500, 1);
  Write("q.csv", "0,0,0\n1,0,0\n");
  ASSERT_EQ(Run("build --input " + Path("data.csv") + " --output " + Path("s.race") +
                " --rows 50 --range 64"),
            0)
      << Read("err.txt");
  EXPECT_TRUE(fs::exists(Path("s.race.manifest.json")));
  ASSERT_EQ(Run("query --sketch " + Path("s.race") + " --queries " + Path("q.csv")), 0);
  const auto lines = Lines(Read("out.txt"));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "query_id,f_hat,n_hat,kde");
  EXPECT_EQ(lines[1].substr(0, 2), "0,");
  EXPECT_NE(lines[1].find(",500,"), std::string::npos);
}

TEST_F(CliTest, ManifestEchoesResolvedFlags) {
  WriteGaussian("data.csv", 50, 2);
  ASSERT_EQ(Run("build --input " + Path("data.csv") + " --output " + Path("s.race") +
                " --rows 7"),
            0);
  const std::string m = Read("s.race.manifest.json");
  EXPECT_NE(m.find("\"command\": \"build\""), std::string::npos);
  EXPECT_NE(m.find("\"--rows\": 7"), std::string::npos);
  EXPECT_NE(m.find("\"--range\": 500"), std::string::npos);
  EXPECT_NE(m.find("\"--header\": false"), std::string::npos);
}

TEST_F(CliTest, ThreadedAndChunkedBuildsAreByteIdentical) {
  WriteGaussian("data.csv", 300, 3);
  const std::string base = "build --input " + Path("data.csv") + " --rows 20 --range 32";
  ASSERT_EQ(Run(base + " --output " + Path("a.race")), 0);
  ASSERT_EQ(Run(base + " --output " + Path("b.race") + " --threads 3 --chunk 17"), 0);
  EXPECT_EQ(Read("a.race"), Read("b.race"));
}

TEST_F(CliTest, MergeOfSplitMatchesWholeBuild) {
  WriteGaussian("a.csv", 200, 4);
  WriteGaussian("b.csv", 150, 5);
  Write("ab.csv", Read("a.csv") + Read("b.csv"));
  const std::string opts = " --rows 30 --range 40 --lsh euclidean";
  ASSERT_EQ(Run("build --input " + Path("a.csv") + " --output " + Path("a.race") + opts), 0);
  ASSERT_EQ(Run("build --input " + Path("b.csv") + " --output " + Path("b.race") + opts), 0);
  ASSERT_EQ(Run("build --input " + Path("ab.csv") + " --output " + Path("ab.race") + opts), 0);
  ASSERT_EQ(Run("merge --inputs " + Path("a.race") + " " + Path("b.race") + " --output " +
                Path("m.race")),
            0);
  EXPECT_EQ(Read("m.race"), Read("ab.race"));
}

TEST_F(CliTest, SecondReleaseAgainstSameBudgetIsRefused) {
  WriteGaussian("data.csv", 100, 6);
  ASSERT_EQ(Run("build --input " + Path("data.csv") + " --output " + Path("s.race") +
                " --rows 10 --range 16"),
            0);
  const std::string release =
      "privatize --sketch " + Path("s.race") + " --epsilon 2 --budget " + Path("budget.json");
  ASSERT_EQ(Run(release + " --output " + Path("p1.race")), 0);
  EXPECT_EQ(Run(release + " --output " + Path("p2.race")), 4);
  EXPECT_FALSE(fs::exists(Path("p2.race")));
  EXPECT_NE(Read("err.txt").find("double-release"), std::string::npos);
}

TEST_F(CliTest, PrivatizedSketchesAreFrozen) {
  WriteGaussian("data.csv", 100, 7);
  ASSERT_EQ(Run("build --input " + Path("data.csv") + " --output " + Path("s.race") +
                " --rows 10 --range 16"),
            0);
  ASSERT_EQ(Run("privatize --sketch " + Path("s.race") + " --epsilon 1 --output " +
                Path("p.race")),
            0);
  EXPECT_EQ(Run("privatize --sketch " + Path("p.race") + " --epsilon 1 --output " +
                Path("pp.race")),
            4);
  EXPECT_EQ(Run("merge --inputs " + Path("s.race") + " " + Path("p.race") + " --output " +
                Path("m.race")),
            4);
}

TEST_F(CliTest, DeterministicNoiseSeedWarnsAndReproduces) {
  WriteGaussian("data.csv", 100, 8);
  ASSERT_EQ(Run("build --input " + Path("data.csv") + " --output " + Path("s.race") +
                " --rows 10 --range 16"),
            0);
  const std::string release = "privatize --sketch " + Path("s.race") + " --epsilon 1 --seed 9";
  ASSERT_EQ(Run(release + " --output " + Path("p1.race")), 0);
  EXPECT_NE(Read("err.txt").find("NOT private"), std::string::npos);
  ASSERT_EQ(Run(release + " --output " + Path("p2.race")), 0);
  EXPECT_EQ(Read("p1.race"), Read("p2.race"));
}

TEST_F(CliTest, ExitCodes) {
  Write("bad.csv", "1,2\n3,oops\n");
  Write("ragged.csv", "1,2\n3\n");
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("build --input " + Path("bad.csv")), 2);  // missing --output
  EXPECT_EQ(Run("build --input " + Path("bad.csv") + " --output " + Path("s.race")), 3);
  EXPECT_NE(Read("err.txt").find("row 2, column 2"), std::string::npos);
  EXPECT_EQ(Run("build --input " + Path("ragged.csv") + " --output " + Path("s.race")), 3);
  EXPECT_EQ(Run("build --input " + Path("missing.csv") + " --output " + Path("s.race")), 3);
  Write("junk.race", "not a sketch at all");
  EXPECT_EQ(Run("info --sketch " + Path("junk.race")), 3);
  Write("good.csv", "1,2\n3,4\n");
  EXPECT_EQ(Run("build --input " + Path("good.csv") + " --output " + Path("s.race") +
                " --rows 0"),
            2);
  ASSERT_EQ(Run("build --input " + Path("good.csv") + " --output " + Path("s.race") +
                " --rows 5 --range 8"),
            0);
  EXPECT_EQ(Run("query --sketch " + Path("s.race") + " --queries " + Path("good.csv")), 2)
      << "5 rows cannot form 19 groups";
  Write("q3.csv", "1,2,3\n");
  EXPECT_EQ(Run("query --sketch " + Path("s.race") + " --queries " + Path("q3.csv") +
                " --estimator mean"),
            3);
}

TEST_F(CliTest, RegressRecoversSlope) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  {
    std::ofstream out(Path("reg.csv"));
    out.precision(17);
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng);
      out << x << ',' << 2.0 * x << '\n';
    }
  }
  ASSERT_EQ(Run("regress --input " + Path("reg.csv") + " --output " + Path("model.json") +
                " --epsilon 1e6 --noise-seed 1"),
            0)
      << Read("err.txt");
  const std::string printed = Read("out.txt");
  const auto at = printed.find("\"theta\":[");
  ASSERT_NE(at, std::string::npos) << printed;
  const double slope = std::stod(printed.substr(at + 9));
  EXPECT_NEAR(slope, 2.0, 0.2);
  EXPECT_TRUE(fs::exists(Path("model.race")));
}

TEST_F(CliTest, ClassifyTrainAndPredict) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.5);
  {
    std::ofstream out(Path("train.csv"));
    for (int i = 0; i < 1000; ++i) {
      const int c = i % 2;
      out << (c ? 1.0 : -1.0) + g(rng) << ',' << g(rng) << ',' << (c ? "pos" : "neg") << '\n';
    }
  }
  Write("q.csv", "-1,0\n1,0\n");
  ASSERT_EQ(Run("classify-train --input " + Path("train.csv") + " --output " +
                Path("model.json") + " --epsilon 10 --lsh euclidean --rows 200 --range 64"),
            0)
      << Read("err.txt");
  ASSERT_EQ(Run("classify-predict --model " + Path("model.json") + " --queries " + Path("q.csv")),
            0)
      << Read("err.txt");
  const auto lines = Lines(Read("out.txt"));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "query_id,label,kde_neg,kde_pos");
  EXPECT_EQ(lines[1].substr(0, 6), "0,neg,");
  EXPECT_EQ(lines[2].substr(0, 6), "1,pos,");
}

TEST_F(CliTest, ModeClimbsTowardTheData) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(3.0, 0.3);
  {
    std::ofstream out(Path("data.csv"));
    for (int i = 0; i < 2000; ++i) out << g(rng) << ',' << g(rng) << '\n';
  }
  ASSERT_EQ(Run("build --input " + Path("data.csv") + " --output " + Path("s.race") +
                " --lsh euclidean --bandwidth 2 --depth 2 --rows 200 --range 100"),
            0);
  ASSERT_EQ(Run("mode --sketch " + Path("s.race") + " --init 1.5,1.5"), 0) << Read("err.txt");
  const std::string out = Read("out.txt");
  EXPECT_NE(out.find("\"point\""), std::string::npos);
  const auto k = out.find("\"kde\": ");
  const auto k0 = out.find("\"initial_kde\": ");
  ASSERT_NE(k, std::string::npos);
  ASSERT_NE(k0, std::string::npos);
  EXPECT_GT(std::stod(out.substr(k + 7)), std::stod(out.substr(k0 + 15)));
}

TEST_F(CliTest, BenchReportsBothSizes) {
  ASSERT_EQ(Run("bench --sizes 1000 2000 --dim 4 --rows 20 --range 32 --repeats 1 --queries 5"),
            0);
  const auto lines = Lines(Read("out.txt"));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[1].substr(0, 5), "1000,");
  EXPECT_EQ(lines[2].substr(0, 5), "2000,");
}

TEST_F(CliTest, BenchBuildTimeScalesLinearly) {
  ASSERT_EQ(Run("bench --sizes 50000 100000 --repeats 3 --queries 10"), 0);
  const auto lines = Lines(Read("out.txt"));
  ASSERT_EQ(lines.size(), 3u);
  const double ratio = std::stod(lines[2].substr(lines[2].rfind(',') + 1));
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 3.0);
}

TEST_F(CliTest, InfoReportsShape) {
  WriteGaussian("data.csv", 40, 13);
  ASSERT_EQ(Run("build --input " + Path("data.csv") + " --output " + Path("s.race") +
                " --rows 12 --range 20 --lsh euclidean --bandwidth 0.5"),
            0);
  ASSERT_EQ(Run("info --sketch " + Path("s.race")), 0);
  const std::string out = Read("out.txt");
  EXPECT_NE(out.find("\"rows\": 12"), std::string::npos);
  EXPECT_NE(out.find("\"range\": 20"), std::string::npos);
  EXPECT_NE(out.find("\"inserted\": 40"), std::string::npos);
  EXPECT_NE(out.find("\"lsh\": \"euclidean\""), std::string::npos);
  EXPECT_NE(Read("err.txt").find("\"command\": \"info\""), std::string::npos);
}

}  // namespace
