#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "geobmo/io.hpp"
#include "geobmo/qhyper.hpp"
#include "geobmo/whitney.hpp"

using namespace geobmo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("geobmo_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Runs the CLI, returns its exit status; stdout and stderr go to log.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(GEOBMO_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("decompose smoke run") {
  const auto dir = scratch("decompose");
  REQUIRE(run("decompose --domain disk:1 --resolution 1/256 --out " + dir.string(), dir / "log") == 0);
  REQUIRE(fs::exists(dir / "decompose.csv"));
  REQUIRE(fs::exists(dir / "decompose.svg"));
  const auto t = read_csv_file((dir / "decompose.csv").string());
  CHECK(t.kind == "cubes");
  CHECK(t.meta.at("depth") == "10");
  const Domain d = make_domain(shapes::Disk{1.0});
  const auto dec = build_whitney(d, 10);
  std::map<std::string, std::size_t> count;
  for (std::size_t r = 0; r < t.rows.size(); ++r) ++count[t.text(r, "tag")];
  CHECK(count["E"] == dec.count(CubeTag::E));
  CHECK(count["E'"] == dec.count(CubeTag::E_prime));
  CHECK(count["frontier"] == dec.frontier().size());
  for (std::size_t r = 0; r < t.rows.size(); r += 97) {
    CHECK(t.number(r, "resolution") == 1.0 / 256);
    CHECK(t.number(r, "err_bound") == doctest::Approx(t.number(r, "dist_hi") - t.number(r, "dist_lo")));
  }
  CHECK(slurp(dir / "decompose.svg").find("url(#hatch)") != std::string::npos);
}

TEST_CASE("classify output is deterministic") {
  const auto dir = scratch("classify");
  const std::string args = "classify --domain slit_disk --delta 0.5 --budget 30 --seed 7 --out " + dir.string();
  REQUIRE(run(args, dir / "log1") == 0);
  const auto first = slurp(dir / "classify_pairs.csv");
  const auto sweeps = slurp(dir / "classify_sweeps.csv");
  REQUIRE(run(args, dir / "log2") == 0);
  CHECK(slurp(dir / "classify_pairs.csv") == first);
  CHECK(slurp(dir / "classify_sweeps.csv") == sweeps);
  CHECK(slurp(dir / "classify.txt").find("verdict: evidence-against") != std::string::npos);
  const auto t = read_csv_file((dir / "classify_pairs.csv").string());
  CHECK(t.rows.size() > 30);
}

TEST_CASE("geodesic and the output directory variable") {
  const auto dir = scratch("geodesic");
  const std::string cmd = "GEOBMO_OUT=" + dir.string() + " " + GEOBMO_CLI +
                          " geodesic --domain half_plane --from 0,1 --to 0,4 --resolution 1/64 > " +
                          (dir / "log").string() + " 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto t = read_csv_file((dir / "geodesic.csv").string());
  REQUIRE(t.rows.size() == 1);
  CHECK(t.number(0, "value") == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  CHECK(t.number(0, "err_bound") < 1e-4);
  const auto path = read_csv_file((dir / "geodesic_path.csv").string());
  CHECK(path.rows.size() >= 2);
}

TEST_CASE("usage errors") {
  const auto dir = scratch("usage");
  CHECK(run("decompose --domain nope --out " + dir.string(), dir / "log") == 2);
  CHECK(slurp(dir / "log").find("usage error") != std::string::npos);
  CHECK(run("decompose --domain disk:1 --resolution 1/3 --out " + dir.string(), dir / "log") == 2);
  CHECK(slurp(dir / "log").find("dyadic") != std::string::npos);
  CHECK(run("norm --domain disk:1 --out " + dir.string(), dir / "log") == 2);  // --lambda missing
  CHECK(run("norm --domain disk:1 --lambda 0.5 --function bogus:1 --out " + dir.string(), dir / "log") == 2);
  CHECK(run("frobnicate", dir / "log") == 2);
  // module failure: the source point is outside the domain
  CHECK(run("norm --domain disk:1 --lambda 0.5 --function k:3,3 --out " + dir.string(), dir / "log") == 1);
  CHECK(slurp(dir / "log").find("norm failed") != std::string::npos);
}

TEST_CASE("extend output feeds norm") {
  const auto dir = scratch("extend");
  REQUIRE(run("extend --domain disk:1 --function k:0.2,0.1 --resolution 1/32 --epsilon 0.9 --delta 0.5 "
              "--lambda 0.1 --best-effort --out " + dir.string(), dir / "log") == 0);
  CHECK(slurp(dir / "log").find("warning: lambda") != std::string::npos);
  const auto grid = dir / "extend_grid.csv";
  REQUIRE(fs::exists(grid));
  const auto assignment = read_csv_file((dir / "extend_assignment.csv").string());
  CHECK(assignment.kind == "assignment");
  // the restriction of the extension to the disk is the input function
  REQUIRE(run("norm --domain disk:1 --resolution 1/32 --lambda 0.25 --function " + grid.string() +
              " --name from_grid --out " + dir.string(), dir / "log") == 0);
  REQUIRE(run("norm --domain disk:1 --resolution 1/32 --lambda 0.25 --function k:0.2,0.1 --name direct --out " +
              dir.string(), dir / "log") == 0);
  const auto a = read_csv_file((dir / "from_grid.csv").string());
  const auto b = read_csv_file((dir / "direct.csv").string());
  CHECK(a.number(0, "value") == b.number(0, "value"));
}

TEST_CASE("report aggregates the per-experiment tables") {
  const auto dir = scratch("report");
  const std::string out = " --out " + dir.string();
  REQUIRE(run("decompose --domain l_shape --resolution 1/64" + out, dir / "log") == 0);
  REQUIRE(run("norm --domain disk:1 --lambda 1/4 --function k:0.5,0" + out, dir / "log") == 0);
  REQUIRE(run("extend --experiment counterexample --windows 4,8 --resolution 1/8 --lambda 2" + out, dir / "log") == 0);
  REQUIRE(run("report" + out, dir / "log") == 0);
  const auto rep = read_csv_file((dir / "report.csv").string());
  std::map<std::string, double> got;
  for (std::size_t r = 0; r < rep.rows.size(); ++r)
    got[rep.text(r, "file") + "/" + rep.text(r, "metric")] = rep.number(r, "value");

  // recompute from the tables
  const auto cubes = read_csv_file((dir / "decompose.csv").string());
  std::map<std::string, double> tags;
  for (std::size_t r = 0; r < cubes.rows.size(); ++r) tags[cubes.text(r, "tag")] += 1;
  CHECK(got["decompose.csv/rows"] == static_cast<double>(cubes.rows.size()));
  CHECK(got["decompose.csv/count_E"] == tags["E"]);
  CHECK(got["decompose.csv/count_E'"] == tags["E'"]);
  const auto norm = read_csv_file((dir / "norm.csv").string());
  CHECK(got["norm.csv/bmo_lambda"] == norm.number(0, "value"));
  const auto ce = read_csv_file((dir / "extend_counterexample.csv").string());
  REQUIRE(ce.rows.size() == 2);
  CHECK(got["extend_counterexample.csv/ratio@4"] == ce.number(0, "ratio"));
  CHECK(got["extend_counterexample.csv/ratio@8"] == ce.number(1, "ratio"));
  CHECK(got["extend_counterexample.csv/strictly_increasing"] ==
        (ce.number(1, "ratio") > ce.number(0, "ratio") ? 1.0 : 0.0));
  for (const auto& [key, v] : got) CHECK_MESSAGE(key.find("report.csv") == std::string::npos, key);
}
