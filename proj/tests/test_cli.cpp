#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("momentum_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" MOMENTUM_CLI "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name) << text;
  return dir / name;
}

const char* kRun = R"({
  "seed": 3,
  "problem": {"kind": "matrix_factorization", "m": 3, "n": 3, "rank": 2},
  "params": {"alpha": "auto", "beta": 0.4, "gamma": 0.2, "delta": 1.0},
  "init": {"velocity": "random"},
  "stop": {"max_iters": 300, "grad_tol": 0}
})";

}  // namespace

TEST_CASE("identical config and seed give identical traces") {
  const auto dir = scratch("det");
  const auto cfg = write_config(dir, "run.json", kRun);
  REQUIRE(cli("run --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
  REQUIRE(cli("run --config " + cfg.string() + " --out " + (dir / "b").string() + " --workers 2") == 0);
  const auto a = slurp(dir / "a" / "trace.csv");
  CHECK(a.size() > 1000);
  CHECK(a == slurp(dir / "b" / "trace.csv"));
  CHECK(a.find('\r') == std::string::npos);
  REQUIRE(cli("run --config " + cfg.string() + " --out " + (dir / "c").string() + " --seed 4") == 0);
  CHECK(a != slurp(dir / "c" / "trace.csv"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  const auto cfg = write_config(dir, "run.json", kRun);
  CHECK(cli("run --config " + (dir / "missing.json").string()) == 1);
  CHECK(cli("run") == 1);
  CHECK(cli("bogus --config " + cfg.string()) == 1);
  CHECK(cli("--help") == 0);

  const auto quad = write_config(dir, "quad.json", R"({
    "problem": {"kind": "quadratic", "dim": 2},
    "params": {"alpha": 0.1, "beta": 0.5},
    "lipschitz": {"mode": "analytic"},
    "init": {"x0": [1.0, -0.5]},
    "stop": {"max_iters": 200}
  })");
  CHECK(cli("run --quiet --config " + quad.string() + " --out " + (dir / "ok").string()) == 0);
  // 100 times the safe step diverges, which fails the descent check.
  CHECK(cli("run --config " + quad.string() + " --alpha 30 --out " + (dir / "bad").string()) == 2);
  const auto report = nlohmann::json::parse(slurp(dir / "bad" / "report.json"));
  CHECK(report["pass"] == false);
  CHECK(report["stop"] == "diverged");

  const auto missing_file = write_config(dir, "mf.json",
      R"({"problem": {"file": "gone.json"}, "params": {"alpha": 0.1}})");
  CHECK(cli("run --config " + missing_file.string()) == 1);
}

TEST_CASE("output directory from the environment") {
  const auto dir = scratch("env");
  const auto cfg = write_config(dir, "run.json", kRun);
  CHECK(cli("run -q --config " + cfg.string(), "MOMENTUM_OUT_DIR='" + (dir / "env_out").string() + "'") == 0);
  CHECK(fs::exists(dir / "env_out" / "trace.csv"));
}

TEST_CASE("track, saddle and sweep commands") {
  const auto dir = scratch("cmds");
  const auto track = write_config(dir, "track.json", R"({
    "problem": {"kind": "quadratic", "dim": 1},
    "params": {"alpha": 0.1, "beta": 0.5, "preset": "heavy_ball"},
    "init": {"x0": [1.0]},
    "track": {"horizon": 1.0, "alphas": [0.1, 0.05, 0.025]}
  })");
  CHECK(cli("track --config " + track.string() + " --out " + (dir / "t").string()) == 0);
  const auto t = nlohmann::json::parse(slurp(dir / "t" / "tracking_report.json"));
  CHECK(t["slope"].get<double>() >= 0.9);
  const auto one = write_config(dir, "track1.json", R"({
    "problem": {"kind": "quadratic", "dim": 1},
    "params": {"alpha": 0.1},
    "track": {"alphas": [0.1]}
  })");
  CHECK(cli("track --config " + one.string() + " --out " + (dir / "t1").string()) == 1);

  const auto saddle = write_config(dir, "saddle.json", R"({
    "problem": {"kind": "indefinite_quadratic"},
    "params": {"alpha": "auto", "beta": 0.5},
    "lipschitz": {"mode": "analytic"},
    "saddle": {"trials": 20, "fixed_starts": [{"x0": [0.5, 0.0]}]}
  })");
  CHECK(cli("saddle --config " + saddle.string() + " --out " + (dir / "s").string()) == 0);
  const auto s = nlohmann::json::parse(slurp(dir / "s" / "saddle_report.json"));
  CHECK(s["escape"]["escape_fraction"] == 1.0);
  CHECK(s["fixed_starts"][0]["outcome"] == "at_saddle");

  const auto not_critical = write_config(dir, "nc.json", R"({
    "problem": {"kind": "quadratic", "dim": 2},
    "params": {"alpha": 0.1, "beta": 0.5},
    "saddle": {"point": [1.0, 0.0]}
  })");
  CHECK(cli("saddle --config " + not_critical.string() + " --out " + (dir / "nc").string()) == 1);
  const auto no_beta = write_config(dir, "nb.json", R"({
    "problem": {"kind": "indefinite_quadratic"},
    "params": {"alpha": 0.1, "beta": 0.0}
  })");
  CHECK(cli("saddle --config " + no_beta.string() + " --out " + (dir / "nb").string()) == 1);

  const auto sweep = write_config(dir, "sweep.json", R"({
    "problem": {"kind": "quartic", "dim": 2},
    "params": {"alpha": "auto", "beta": 0.0},
    "stop": {"max_iters": 100},
    "sweep": {"alpha_scale": [0.5, 1.0], "beta": [0.0, 0.5], "seeds": [1, 2, 3]}
  })");
  CHECK(cli("sweep --config " + sweep.string() + " --out " + (dir / "w").string() + " -j 2") == 0);
  const auto rows = slurp(dir / "w" / "sweep.csv");
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 2 + 12);
  CHECK(cli("sweep --config " + sweep.string() + " --out " + (dir / "w2").string()) == 0);
  CHECK(rows == slurp(dir / "w2" / "sweep.csv"));
}
