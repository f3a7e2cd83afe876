#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "unidecon/io.hpp"

namespace fs = std::filesystem;
using namespace unidecon;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("unidecon_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(UNIDECON_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sample writes a deterministic CSV with a manifest") {
  Workspace ws;
  const auto a = ws.path("a.csv");
  const auto b = ws.path("b.csv");
  REQUIRE(run("sample --model fixed --f0 truncexp:0:2 --n 100 --seed 7 -o " + a) == 0);
  REQUIRE(run("sample --model fixed --f0 truncexp:0:2 --n 100 --seed 7 -o " + b) == 0);
  const auto table = read_csv(a);
  CHECK(table.header == std::vector<std::string>{"s"});
  CHECK(table.rows.size() == 100);
  CHECK(sha256_hex(read_file(a)) == sha256_hex(read_file(b)));
  const auto manifest = nlohmann::json::parse(read_file(a + ".manifest.json"));
  CHECK(manifest["command"] == "sample");
  CHECK(manifest["master_seed"] == 7);
  CHECK(manifest["outputs"][a] == sha256_hex(read_file(a)));
  CHECK(manifest["config"]["n"] == 100);
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("wall_clock_seconds"));
}

TEST_CASE("seed from the environment") {
  Workspace ws;
  REQUIRE(run("sample --f0 uniform:0:2 --n 20 -o " + ws.path("env.csv"), "UNIDECON_SEED=7") == 0);
  REQUIRE(run("sample --f0 uniform:0:2 --n 20 --seed 7 -o " + ws.path("flag.csv")) == 0);
  CHECK(read_file(ws.path("env.csv")) == read_file(ws.path("flag.csv")));
}

TEST_CASE("usage errors") {
  Workspace ws;
  CHECK(run("sample --f0 truncexp:0:2 --n 0 -o " + ws.path("x.csv")) == 1);
  CHECK(run("sample --f0 nothing:1 --n 5 -o " + ws.path("x.csv")) == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("") == 1);
  CHECK(run("sample --model mixed --f0 truncexp:0:2 --n 5 -o " + ws.path("x.csv")) == 1);
}

TEST_CASE("transform modes") {
  Workspace ws;
  const auto s = ws.path("s.csv");
  REQUIRE(run("sample --f0 truncexp:0:2 --n 50 --seed 1 -o " + s) == 0);
  REQUIRE(run("transform -i " + s + " -o " + ws.path("cs.csv") + " --mode cs") == 0);
  CHECK(read_csv(ws.path("cs.csv")).header == std::vector<std::string>{"y", "delta"});
  REQUIRE(run("transform -i " + s + " -o " + ws.path("ic.csv") + " --mode icm --m 2") == 0);
  const auto ic = read_csv(ws.path("ic.csv"));
  CHECK(ic.header == std::vector<std::string>{"y1", "bucket"});
  CHECK(ic.rows.size() == 50);

  const auto m = ws.path("m.csv");
  REQUIRE(run("sample --model mixed --f0 truncexp:0:2 --fe uniform:0.5:1.5 --n 30 --seed 2 -o " + m) == 0);
  CHECK(read_csv(m).header == std::vector<std::string>{"e", "s"});
  CHECK(run("transform -i " + m + " -o " + ws.path("bad.csv") + " --mode cs") == 1);
  CHECK(run("transform -i " + s + " -o " + ws.path("bad.csv") + " --mode icm --m 0") == 2);
}

TEST_CASE("malformed input is a data error naming the line") {
  Workspace ws;
  write_file(ws.path("bad.csv"), "s\n0.5\n1.5\noops\n");
  const std::string cmd = std::string(UNIDECON_CLI_PATH) + " estimate -i " + ws.path("bad.csv") + " -o " +
                          ws.path("e.csv") + " 2>" + ws.path("err.txt");
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(read_file(ws.path("err.txt")).find(":4") != std::string::npos);
  CHECK(run("transform -i " + ws.path("missing.csv") + " -o " + ws.path("x.csv")) == 2);
}

TEST_CASE("estimate routes and writes diagnostics") {
  Workspace ws;
  const auto unit = ws.path("unit.csv");
  REQUIRE(run("sample --f0 truncexp:0:1 --n 80 --seed 4 -o " + unit) == 0);
  REQUIRE(run("estimate -i " + unit + " -o " + ws.path("e1.csv")) == 0);
  auto diag = nlohmann::json::parse(read_file(ws.path("e1.csv.diagnostics.jsonl")));
  CHECK(diag["method"] == "pava");
  CHECK(diag["fenchel_satisfied"] == true);
  CHECK(read_csv(ws.path("e1.csv")).header == std::vector<std::string>{"point", "value"});

  const auto wide = ws.path("wide.csv");
  REQUIRE(run("sample --f0 truncexp:0:2 --n 80 --seed 4 -o " + wide) == 0);
  REQUIRE(run("estimate -i " + wide + " -o " + ws.path("e2.csv") + " --diagnostics " + ws.path("d2.jsonl")) == 0);
  diag = nlohmann::json::parse(read_file(ws.path("d2.jsonl")));
  CHECK(diag["method"] == "icm");
  CHECK(diag.contains("iterations"));
  CHECK(diag.contains("max_tail_sum"));
  CHECK(diag.contains("inner_product"));
  CHECK(diag.contains("loglik"));

  CHECK(run("estimate -i " + wide + " -o " + ws.path("e3.csv") + " --max-iter 1") == 3);
  CHECK(run("estimate -i " + wide + " -o " + ws.path("e3.csv") + " --max-iter 1 --allow-unconverged") == 0);
  // The current-status route is not the restricted MLE once S exceeds 2.
  CHECK(run("estimate -i " + wide + " -o " + ws.path("e4.csv") + " --force-cs") == 3);
  REQUIRE(run("estimate -i " + wide + " -o " + ws.path("e4.csv") + " --force-cs --allow-unconverged") == 0);
  CHECK(nlohmann::json::parse(read_file(ws.path("e4.csv.diagnostics.jsonl")))["method"] == "pava");
}

TEST_CASE("functionals") {
  Workspace ws;
  const auto s = ws.path("s.csv");
  REQUIRE(run("sample --f0 truncexp:0:2 --n 300 --seed 9 -o " + s) == 0);
  REQUIRE(run("functionals -i " + s + " -o " + ws.path("f.csv") + " --functional mean --f0 truncexp:0:2") == 0);
  const auto f = read_csv(ws.path("f.csv"));
  CHECK(f.header == std::vector<std::string>{"estimate", "plugin_variance", "theory_variance"});
  REQUIRE(f.rows.size() == 1);
  CHECK(f.rows[0][2] == doctest::Approx(0.357915).epsilon(1e-5));
  REQUIRE(run("functionals -i " + s + " -o " + ws.path("d.csv") + " --density 1 0.3 --f0 truncexp:0:2") == 0);
  REQUIRE(run("functionals -i " + s + " -o " + ws.path("c.csv") + " --cdf 1 0.3") == 0);
  CHECK(run("functionals -i " + s + " -o " + ws.path("x.csv") + " --density 1 0.3 --cdf 1 0.3") == 1);
}

TEST_CASE("simulate with config file and overrides") {
  Workspace ws;
  write_file(ws.path("sim.cfg"), "# reduced simulation setup\nmodel=fixed\nf0=truncexp:0:2\nn=150\nreplications=12\nseed=5\n");
  const auto out = ws.path("sim.csv");
  REQUIRE(run("simulate --config " + ws.path("sim.cfg") + " -o " + out) == 0);
  const auto t = read_csv(out);
  CHECK(t.header == std::vector<std::string>{"t", "empirical", "theory_conjecture", "theory_mixed", "failures"});
  CHECK(t.rows.size() == 19);
  REQUIRE(run("simulate --config " + ws.path("sim.cfg") + " -o " + ws.path("sim4.csv") + " --threads 4") == 0);
  CHECK(read_file(out) == read_file(ws.path("sim4.csv")));
  REQUIRE(run("simulate --config " + ws.path("sim.cfg") + " -o " + ws.path("o.csv") + " --n 100 --grid 0.5,1.5") == 0);
  CHECK(read_csv(ws.path("o.csv")).rows.size() == 2);
  const auto manifest = nlohmann::json::parse(read_file(ws.path("o.csv.manifest.json")));
  CHECK(manifest["config"]["n"] == 100);
  CHECK(manifest["config"]["replications"] == 12);
  write_file(ws.path("bad.cfg"), "nonsense=1\n");
  CHECK(run("simulate --config " + ws.path("bad.cfg") + " -o " + out) == 1);
  CHECK(run("simulate -o " + out + " --grid 2.5") == 1);
}

TEST_CASE("diagnose-rates") {
  Workspace ws;
  const auto out = ws.path("r.csv");
  REQUIRE(run("diagnose-rates --f0 truncexp:0:2 --n-values 200,400 --replications 8 --seed 3 -o " + out) == 0);
  const auto text = read_file(out);
  CHECK(text.rfind("n,median_abs_An,median_abs_Bn\n", 0) == 0);
  CHECK(text.find("# fitted_slope_An=") != std::string::npos);
  CHECK(read_csv(out).rows.size() == 2);
}
