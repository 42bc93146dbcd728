#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "stokesdmk/pointgen.hpp"

using namespace stokesdmk;

TEST_CASE("uniform cube points stay in the box and reproduce by seed") {
  std::vector<double> a = generate_points(PointDistribution::uniform_cube, 5000, 3, 42);
  std::vector<double> b = generate_points(PointDistribution::uniform_cube, 5000, 3, 42);
  REQUIRE(a.size() == 15000);
  CHECK(a == b);
  for (double v : a) {
    CHECK(v >= -0.5);
    CHECK(v <= 0.5);
  }
  std::vector<double> c = generate_points(PointDistribution::uniform_cube, 5000, 3, 43);
  CHECK(a != c);

  /* 2D stream differs from 3D and respects the box too */
  std::vector<double> d2 = generate_points(PointDistribution::uniform_cube, 100, 2, 42);
  REQUIRE(d2.size() == 200);
  for (double v : d2) CHECK(std::fabs(v) <= 0.5);
}

TEST_CASE("perturbed circle and sphere live in the jittered radial band") {
  std::vector<double> sph = generate_points(PointDistribution::perturbed_sphere, 1000, 3, 7);
  for (int i = 0; i < 1000; ++i) {
    double r = std::sqrt(sph[i * 3] * sph[i * 3] + sph[i * 3 + 1] * sph[i * 3 + 1] +
                         sph[i * 3 + 2] * sph[i * 3 + 2]);
    CHECK(r >= 0.3);
    CHECK(r <= 0.4);
  }
  std::vector<double> cir = generate_points(PointDistribution::perturbed_circle, 1000, 2, 7);
  double rmin = 1.0, rmax = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double r = std::sqrt(cir[i * 2] * cir[i * 2] + cir[i * 2 + 1] * cir[i * 2 + 1]);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    CHECK(r >= 0.3);
    CHECK(r <= 0.4);
  }
  /* the jitter actually spreads the radii across the band */
  CHECK(rmax - rmin > 0.05);
}

TEST_CASE("corner cluster hugs one corner inside the box") {
  for (int dim : {2, 3}) {
    std::vector<double> pts = generate_points(PointDistribution::corner_cluster, 100, dim, 5);
    for (int i = 0; i < 100; ++i) {
      double s2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        double v = pts[size_t(i) * dim + a];
        CHECK(v >= -0.5);
        CHECK(v <= 0.5);
        double d = v - (-0.5);
        s2 += d * d;
      }
      CHECK(std::sqrt(s2) <= 0x1.0p-5);
    }
  }
}

TEST_CASE("distribution names parse and mismatched dimensions throw") {
  CHECK(parse_distribution("uniform-cube") == PointDistribution::uniform_cube);
  CHECK(parse_distribution("perturbed-circle") == PointDistribution::perturbed_circle);
  CHECK(parse_distribution("perturbed-sphere") == PointDistribution::perturbed_sphere);
  CHECK(parse_distribution("corner-cluster") == PointDistribution::corner_cluster);
  CHECK_THROWS_AS(parse_distribution("lattice"), std::invalid_argument);
  CHECK(distribution_name(PointDistribution::perturbed_sphere) == "perturbed-sphere");

  CHECK_THROWS_AS(generate_points(PointDistribution::perturbed_circle, 10, 3, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_points(PointDistribution::perturbed_sphere, 10, 2, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_points(PointDistribution::uniform_cube, 10, 4, 1),
                  std::invalid_argument);
}

#ifdef CLI_BINARY

namespace {

struct CliResult {
  int exit_code = -1;
  std::vector<std::string> lines; /* CSV lines, comments stripped */
};

CliResult run_cli(const std::string& args, const std::string& csv_path) {
  std::string cmd = std::string(CLI_BINARY) + " " + args;
  if (!csv_path.empty()) cmd += " --out " + csv_path;
  cmd += " 2> /dev/null";
  int rc = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = rc < 0 ? rc : WEXITSTATUS(rc);
  if (!csv_path.empty()) {
    std::ifstream in(csv_path);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') res.lines.push_back(line);
  }
  return res;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

TEST_CASE("accuracy run meets its target and reports per-pass timings") {
  std::string csv = "cli_acc.csv";
  CliResult r = run_cli("--kernel stokeslet --dim 3 --eps 1e-3 --n 800 --seed 9", csv);
  CHECK(r.exit_code == 0);
  /* header row + one row per pass + total */
  REQUIRE(r.lines.size() == 7);
  CHECK(r.lines[0] ==
        "kernel,dim,mode,window,eps,N,pass,seconds,rel_l2,c,p,N1,N_per,n_s");
  double total_seconds = -1.0, rel = -1.0, sum = 0.0;
  bool saw[5] = {false, false, false, false, false};
  const char* names[5] = {"tree", "upward", "root", "downward", "residual"};
  for (size_t i = 1; i < r.lines.size(); ++i) {
    auto f = split_csv(r.lines[i]);
    REQUIRE(f.size() == 14);
    CHECK(f[0] == "stokeslet");
    CHECK(f[5] == "800");
    rel = std::stod(f[8]);
    for (int k = 0; k < 5; ++k)
      if (f[6] == names[k]) {
        saw[k] = true;
        sum += std::stod(f[7]);
      }
    if (f[6] == "total") total_seconds = std::stod(f[7]);
  }
  for (int k = 0; k < 5; ++k) CHECK(saw[k]);
  CHECK(rel <= 1e-3);
  CHECK(rel >= 0.0);
  CHECK(total_seconds == doctest::Approx(sum).epsilon(1e-9));
  std::remove(csv.c_str());
}

TEST_CASE("zero strengths give a zero field and a zero error") {
  std::string csv = "cli_zero.csv";
  CliResult r = run_cli(
      "--kernel stresslet --dim 3 --eps 1e-3 --n 500 --zero-strengths --seed 2", csv);
  CHECK(r.exit_code == 0);
  REQUIRE(r.lines.size() == 7);
  auto f = split_csv(r.lines[6]);
  CHECK(f[6] == "total");
  CHECK(std::stod(f[8]) == 0.0);
  std::remove(csv.c_str());
}

TEST_CASE("oversized accuracy runs are refused by the oracle guard") {
  CliResult r = run_cli("--kernel stokeslet --dim 3 --eps 1e-3 --n 60000", "");
  CHECK(r.exit_code == 2);
}

TEST_CASE("scaling mode emits one row per pass per N") {
  std::string csv = "cli_scaling.csv";
  CliResult r =
      run_cli("--kernel stokeslet --dim 3 --eps 1e-3 --seed 4 --scaling 400,800", csv);
  CHECK(r.exit_code == 0);
  REQUIRE(r.lines.size() == 1 + 2 * 6);
  int n400 = 0, n800 = 0;
  for (size_t i = 1; i < r.lines.size(); ++i) {
    auto f = split_csv(r.lines[i]);
    REQUIRE(f.size() == 14);
    if (f[5] == "400") ++n400;
    if (f[5] == "800") ++n800;
    CHECK(f[8] == ""); /* no oracle in scaling mode */
  }
  CHECK(n400 == 6);
  CHECK(n800 == 6);

  /* descending lists are rejected */
  CliResult bad = run_cli("--kernel stokeslet --dim 3 --scaling 800,400", "");
  CHECK(bad.exit_code == 2);
  std::remove(csv.c_str());
}

TEST_CASE("split tables round-trip through the cache directory") {
  std::string dir = "cli_cache";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  setenv("STOKESDMK_CACHE_DIR", dir.c_str(), 1);
  std::string csv1 = "cli_c1.csv", csv2 = "cli_c2.csv";
  CliResult r1 = run_cli("--kernel stokeslet --dim 2 --eps 1e-3 --n 300 --seed 6", csv1);
  CHECK(r1.exit_code == 0);
  /* the run must have left a table file behind */
  int has_tables =
      std::system(("ls " + dir + "/*.tables > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(has_tables) == 0);
  CliResult r2 = run_cli("--kernel stokeslet --dim 2 --eps 1e-3 --n 300 --seed 6", csv2);
  CHECK(r2.exit_code == 0);
  CHECK(r1.lines.size() == r2.lines.size());
  /* identical rel_l2 whether tables were built or imported */
  auto f1 = split_csv(r1.lines[6]);
  auto f2 = split_csv(r2.lines[6]);
  CHECK(f1[8] == f2[8]);
  unsetenv("STOKESDMK_CACHE_DIR");
  std::system(("rm -rf " + dir).c_str());
  std::remove(csv1.c_str());
  std::remove(csv2.c_str());
}

#endif /* CLI_BINARY */
