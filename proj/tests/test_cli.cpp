#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crstokes/cli.hpp"
#include "crstokes/mesh.hpp"

using namespace crstokes;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> owned{"crstokes"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : owned) argv.push_back(s.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli({"run", "--theta", "1.5", "--out", "/tmp/crstokes-bad"}) == 2);
  CHECK(run_cli({"run", "--case", "no-such-case", "--out", "/tmp/crstokes-bad"}) == 2);
  CHECK(run_cli({"bogus-subcommand"}) == 2);
  CHECK(run_cli({"run", "--tol", "-1", "--out", "/tmp/crstokes-bad"}) == 2);
  CHECK(run_cli({"rates", "--case", "ocp-lshape", "--out", "/tmp/crstokes-bad"}) == 2);
  CHECK(run_cli({"run", "--case", "stokes-square", "--out", "/tmp/crstokes-bad"}) == 2);
}

TEST_CASE("run writes the artifact files") {
  TempDir dir("crstokes-cli-run");
  CHECK(run_cli({"run", "--case", "ocp-square", "--theta", "0.4", "--max-dofs", "400",
                 "--max-iters", "8", "--no-errors", "--out", dir.str()}) == 0);
  for (const char* f : {"trace.csv", "indicators.csv", "solution.csv", "mesh.txt"}) {
    INFO(f);
    CHECK(fs::exists(dir.path / f));
  }
  const std::string trace = slurp(dir.path / "trace.csv");
  CHECK(trace.rfind("# crstokes-", 0) == 0);  // config comment first
  CHECK(trace.find("level,nelem,ndof,eta,mu,osc,delta_next") != std::string::npos);

  // the mesh snapshot reads back
  std::ifstream ms(dir.path / "mesh.txt");
  auto mesh = read_mesh(ms);
  CHECK(mesh->num_triangles() > 8);
  CHECK(check_conformity(*mesh).empty());
}

TEST_CASE("byte-identical outputs across reruns") {
  TempDir a("crstokes-cli-det-a"), b("crstokes-cli-det-b");
  auto args = [&](const TempDir& d) {
    return std::vector<std::string>{"run",        "--case",    "ocp-square", "--theta", "0.35",
                                    "--max-dofs", "500",       "--max-iters", "10",
                                    "--out",      d.str()};
  };
  CHECK(run_cli(args(a)) == 0);
  CHECK(run_cli(args(b)) == 0);
  CHECK(slurp(a.path / "trace.csv") == slurp(b.path / "trace.csv"));
  CHECK(slurp(a.path / "indicators.csv") == slurp(b.path / "indicators.csv"));
  CHECK(slurp(a.path / "solution.csv") == slurp(b.path / "solution.csv"));
  CHECK(slurp(a.path / "mesh.txt") == slurp(b.path / "mesh.txt"));
}

TEST_CASE("rates subcommand writes rates.csv with slopes") {
  TempDir dir("crstokes-cli-rates");
  CHECK(run_cli({"rates", "--case", "stokes-square", "--levels", "4", "--initial-n", "4", "--out",
                 dir.str()}) == 0);
  const std::string rates = slurp(dir.path / "rates.csv");
  CHECK(rates.find("# rates:") != std::string::npos);
  CHECK(rates.find("energy_y=") != std::string::npos);
}

TEST_CASE("config file provides defaults, flags win") {
  TempDir dir("crstokes-cli-cfg");
  const fs::path cfg = dir.path / "run.cfg";
  {
    std::ofstream os(cfg);
    os << "case=ocp-square\nmax-dofs=300\nmax-iters=6\ntheta=0.9\nno-errors=true\n";
  }
  const std::string out = dir.str("out");
  CHECK(run_cli({"run", "--config", cfg.string(), "--theta", "0.45", "--out",
                 out}) == 0);
  const std::string trace = slurp(fs::path(out) / "trace.csv");
  CHECK(trace.find("theta=0.45") != std::string::npos);  // flag beats config file
  CHECK(trace.find("max-dofs=300") != std::string::npos);
}

TEST_CASE("equivalence subcommand emits json and passes the band check") {
  TempDir dir("crstokes-cli-eqv");
  CHECK(run_cli({"equivalence", "--case", "ocp-square", "--levels", "3", "--out",
                 dir.str()}) == 0);
  const std::string j = slurp(dir.path / "equivalence.json");
  CHECK(j.find("ratio_lr") != std::string::npos);
  CHECK(j.find("\"config\"") != std::string::npos);
}

TEST_CASE("axioms subcommand emits json") {
  TempDir dir("crstokes-cli-ax");
  CHECK(run_cli({"axioms", "--case", "ocp-square", "--theta", "0.3", "--max-dofs", "1500",
                 "--max-iters", "20", "--no-errors", "--out", dir.str()}) == 0);
  const std::string j = slurp(dir.path / "axioms.json");
  CHECK(j.find("lambda3") != std::string::npos);
  CHECK(j.find("A4-quasi-orthogonality") != std::string::npos);
  CHECK(j.find("discrete-jump-control") != std::string::npos);
}
