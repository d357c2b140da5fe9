#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "rbound/density.hpp"
#include "rbound/grid.hpp"
#include "rbound/sampling.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

fs::path scratch_dir() {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("rbound_cli_" + std::to_string(::getpid()) +
                                   "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out_file = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string(RBOUND_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(out_file);
  std::stringstream ss;
  ss << is.rdbuf();
  r.out = ss.str();
  return r;
}

std::string file_contents(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("cli: bounds on the squares fixture matches the hand oracle") {
  const fs::path dir = scratch_dir();
  const RunResult r = run_cli("bounds --dist squares --norm linf --eps 0.05 --out " +
                              dir.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("zeta_cor2    0.539894228") != std::string::npos);
  REQUIRE(fs::exists(dir / "bounds.csv"));
}

TEST_CASE("cli: sweep writes one row per epsilon with provenance") {
  const fs::path dir = scratch_dir();
  const RunResult r = run_cli(
      "sweep --dist squares --norm linf --eps 0,0.05,0.1,0.15 --out " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const std::string csv = file_contents(dir / "sweep.csv");
  REQUIRE(csv.find("# robust-bound") != std::string::npos);
  REQUIRE(csv.find("epsilon,norm,tau_unc,resolution,") != std::string::npos);
  int rows = 0;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'e') ++rows;
  REQUIRE(rows == 4);
}

TEST_CASE("cli: identical command and seed give byte-identical output") {
  const fs::path dir1 = scratch_dir();
  const fs::path dir2 = scratch_dir();
  const std::string args =
      "sweep --dist squares --norm l2 --eps 0,0.08 --seed 7 --out ";
  REQUIRE(run_cli(args + dir1.string()).exit_code == 0);
  REQUIRE(run_cli(args + dir2.string()).exit_code == 0);
  std::string a = file_contents(dir1 / "sweep.csv");
  std::string b = file_contents(dir2 / "sweep.csv");
  // provenance embeds the out dir; strip comment lines before comparing
  auto strip = [](const std::string& s) {
    std::stringstream ss(s), out;
    std::string line;
    while (std::getline(ss, line))
      if (line.empty() || line[0] != '#') out << line << "\n";
    return out.str();
  };
  REQUIRE(strip(a) == strip(b));
  REQUIRE(!strip(a).empty());
}

TEST_CASE("cli: density emits grids, meta, and samples") {
  const fs::path dir = scratch_dir();
  const RunResult r = run_cli(
      "density --dist squares --emit-samples 200 --seed 3 --out " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(dir / "density.meta"));
  REQUIRE(fs::exists(dir / "class_0.csv"));
  REQUIRE(fs::exists(dir / "class_1.csv"));
  const rbound::Grid2D g = rbound::read_grid_csv(dir / "class_0.csv");
  REQUIRE(rbound::integrate(g) == Catch::Approx(1.0).margin(1e-9));
  const rbound::SampleSet s = rbound::read_samples_csv(dir / "samples.csv");
  REQUIRE(s.size() == 200);
  const std::string meta = file_contents(dir / "density.meta");
  REQUIRE(meta.find("classes=2") != std::string::npos);
  REQUIRE(meta.find("prior_0=0.5") != std::string::npos);
}

TEST_CASE("cli: kde bayes-error consumes a sample csv") {
  const fs::path dir = scratch_dir();
  auto rng = rbound::make_rng(11);
  const rbound::SampleSet s = rbound::sample_moons(
      400, rbound::MoonsParams{0.3, 64}, rng);
  rbound::write_samples_csv(dir / "samples.csv", s);
  const RunResult r = run_cli(
      "bayes-error --dist kde --samples " + (dir / "samples.csv").string() +
      " --grid -2,-1.75,0.0390625,0.03125,128,128");
  REQUIRE(r.exit_code == 0);
  const double beta = std::stod(r.out);
  REQUIRE(beta > 0.0);
  REQUIRE(beta < 0.5);
}

TEST_CASE("cli: render produces an svg with a recorded scale") {
  const fs::path dir = scratch_dir();
  REQUIRE(run_cli("density --dist squares --grid -0.5,-0.5,0.015625,0.015625,"
                  "160,128 --out " +
                  dir.string())
              .exit_code == 0);
  const RunResult r = run_cli("render --grid-file " +
                              (dir / "class_0.csv").string() + " --out-file " +
                              (dir / "c0.svg").string() + " --vmin 0 --vmax 2");
  REQUIRE(r.exit_code == 0);
  const std::string svg = file_contents(dir / "c0.svg");
  REQUIRE(svg.find("<svg") != std::string::npos);
  REQUIRE(svg.find("vmin=0 vmax=2") != std::string::npos);
}

TEST_CASE("cli: correctness alg2 with bayes predictions") {
  const fs::path dir = scratch_dir();
  REQUIRE(run_cli("density --dist squares --emit-samples 300 --seed 5 --out " +
                  dir.string())
              .exit_code == 0);
  const RunResult r = run_cli(
      "correctness alg2 --eval-samples " + (dir / "samples.csv").string() +
      " --predict-bayes --dist squares --theta 0");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("alpha") != std::string::npos);
  // theta = 0 alpha is the plain Bayes-prediction accuracy: well above 0.5
  const double alpha = std::stod(r.out.substr(r.out.find("alpha") + 5));
  REQUIRE(alpha > 0.6);
  REQUIRE(alpha <= 1.0);
}

TEST_CASE("cli: correctness product with zero samples is exactly 1") {
  const RunResult r = run_cli(
      "correctness product --dist squares --norm linf --eps 0.05 "
      "--n-samples 0 --trials 10");
  REQUIRE(r.exit_code == 0);
  REQUIRE(std::stod(r.out) == 1.0);
}

TEST_CASE("cli: config file seeds defaults, flags override") {
  const fs::path dir = scratch_dir();
  std::ofstream cfg(dir / "run.cfg");
  cfg << "dist=squares\n"
      << "eps=0.05\n"
      << "norm=linf\n";
  cfg.close();
  // config's eps=0.05 is overridden by --eps 0.1 on the command line
  const RunResult r = run_cli("bounds --config " + (dir / "run.cfg").string() +
                              " --eps 0.1 --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("epsilon      0.1\n") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
  // usage: unknown subcommand / missing required option
  REQUIRE(run_cli("no-such-command").exit_code == 2);
  REQUIRE(run_cli("sweep --dist squares --norm linf").exit_code == 2);
  REQUIRE(run_cli("bounds --dist nosuch --eps 0.1").exit_code == 2);
  // numeric: density support pressed against the grid border leaks
  REQUIRE(run_cli("bounds --dist squares --norm linf --eps 0.1 "
                  "--grid 0,0,0.015625,0.015625,96,64")
              .exit_code == 3);
  // io: missing input file
  REQUIRE(run_cli("bayes-error --dist kde --samples /nonexistent.csv")
              .exit_code == 4);
  // success path sanity
  REQUIRE(run_cli("--help").exit_code == 0);
}
