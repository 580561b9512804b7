#include <doctest.h>

#include <fstream>
#include <sstream>

#include "momentum/experiment.hpp"

using namespace momentum;
using namespace momentum::experiment;

namespace {

const char* kBase = R"({
  "seed": 5,
  "problem": {"kind": "quadratic", "dim": 3},
  "params": {"alpha": 0.1, "beta": 0.5, "gamma": 0.25, "delta": 1.0}
})";

std::string error_of(const std::string& text, const std::filesystem::path& dir = ".") {
  try {
    parse_config(text, dir);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("momentum_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal config and defaults") {
  const auto cfg = parse_config(kBase, ".");
  CHECK(cfg.seed == 5);
  CHECK(cfg.problem_kind == "quadratic");
  CHECK(cfg.alpha == 0.1);
  CHECK_FALSE(cfg.alpha_auto);
  CHECK(cfg.m == 1);
  CHECK(cfg.wants("descent"));
  CHECK_FALSE(cfg.wants("length"));
  CHECK(cfg.lipschitz.spread == 0.5);
  CHECK(cfg.hash.size() == 16);
  const auto p = build_problem(cfg);
  CHECK(p->dim() == 3);
}

TEST_CASE("hash and derived seeds follow the overrides") {
  const auto a = parse_config(kBase, ".");
  const auto b = parse_config(kBase, ".");
  CHECK(a.hash == b.hash);
  CHECK(a.init.seed == b.init.seed);
  const auto c = parse_config(kBase, ".", Overrides{6, std::nullopt});
  CHECK(c.hash != a.hash);
  CHECK(c.init.seed != a.init.seed);
  const auto d = parse_config(kBase, ".", Overrides{std::nullopt, 0.05});
  CHECK(d.alpha == 0.05);
  CHECK(d.hash != a.hash);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("malformed json reports line and column") {
  const std::string msg = error_of("{\n  \"seed\": 1,\n  \"problem\": {\"kind\": }\n}");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("field errors name the path") {
  CHECK(error_of(R"({"problem": {"kind": "quadratic"}, "params": {"alpha": 0.1, "betta": 0.5}})")
            .rfind("params.betta: unknown field", 0) == 0);
  CHECK(error_of(R"({"problem": {"kind": "quadratic"}, "params": {"alpha": 0.1, "beta": 1.5}})")
            .rfind("params.beta:", 0) == 0);
  CHECK(error_of(R"({"problem": {"kind": "cubic"}, "params": {"alpha": 0.1}})")
            .rfind("problem.kind:", 0) == 0);
  CHECK(error_of(R"({"problem": {"kind": "quadratic"}, "params": {"alpha": "big"}})")
            .rfind("params.alpha:", 0) == 0);
  CHECK(error_of(R"({"problem": {"kind": "quadratic"}, "params": {"alpha": 0.1, "gamma": 11}})")
            .rfind("params.gamma:", 0) == 0);
  CHECK(error_of(R"({"problem": {"kind": "quadratic"},
                     "params": {"alpha": 0.1, "beta": 0.5, "gamma": 0.1, "preset": "nesterov"}})")
            .rfind("params.gamma:", 0) == 0);
  CHECK(error_of(R"({"problem": {"kind": "quadratic"}, "params": {"alpha": 0.1}, "checks": ["speed"]})")
            .rfind("checks[0]:", 0) == 0);
  CHECK(error_of(R"({"problem": {"kind": "quadratic"}, "params": {"alpha": 0.1}, "sweep": {"beta": []}})")
            .rfind("sweep.beta: empty grid", 0) == 0);
  CHECK(error_of(R"({"params": {"alpha": 0.1}})").rfind("problem:", 0) == 0);
}

TEST_CASE("problem file is resolved next to the config") {
  const auto dir = scratch("file");
  std::ofstream(dir / "mf.json") << R"({"kind": "matrix_factorization", "target": [[1, 2], [3, 4], [5, 6]]})";
  const auto cfg = parse_config(R"({"problem": {"file": "mf.json", "rank": 1}, "params": {"alpha": "auto"}})", dir);
  CHECK(cfg.problem_kind == "matrix_factorization");
  CHECK(cfg.m == 4);
  CHECK(cfg.alpha_auto);
  CHECK(build_problem(cfg)->dim() == 5);

  const std::string msg = error_of(R"({"problem": {"file": "nope.json"}, "params": {"alpha": 0.1}})", dir);
  CHECK(msg.find("problem.file") == 0);
  CHECK(msg.find((dir / "nope.json").string()) != std::string::npos);
}

TEST_CASE("random problem instances are seeded") {
  const char* text = R"({"problem": {"kind": "matrix_sensing", "m": 3, "n": 3, "p": 6, "rank": 1},
                         "params": {"alpha": 0.01}})";
  const auto a = build_problem(parse_config(text, "."));
  const auto b = build_problem(parse_config(text, "."));
  const auto c = build_problem(parse_config(text, ".", Overrides{1, std::nullopt}));
  const Vector x = Vector::LinSpaced(6, -1.0, 1.0);
  CHECK(a->value(x) == b->value(x));
  CHECK(a->value(x) != c->value(x));
  CHECK(a->value(Vector::Zero(6)) > 0.0);

  const auto net = build_problem(parse_config(
      R"({"problem": {"kind": "linear_network", "widths": [2, 3, 3, 2], "samples": 5},
          "params": {"alpha": 0.01}})",
      "."));
  CHECK(net->dim() == 6 + 9 + 6);
}

TEST_CASE("start construction") {
  auto cfg = parse_config(R"({"problem": {"kind": "quadratic", "dim": 2},
                              "params": {"alpha": 0.1, "beta": 0.5, "delta": 2.0},
                              "init": {"box": 0.5, "velocity": "random"}})",
                          ".");
  const auto p = build_problem(cfg);
  const auto params = cfg.params_with(0.1);
  const auto s = make_start(cfg, *p, params, 17);
  CHECK(s.x0.norm() <= 0.5);
  CHECK((s.x0 - s.x_minus1).norm() <= 0.2);
  const auto again = make_start(cfg, *p, params, 17);
  CHECK(again.x0 == s.x0);
  CHECK(again.x_minus1 == s.x_minus1);

  cfg.init.velocity = "flow";
  const auto f = make_start(cfg, *p, params, 17);
  CHECK((f.x_minus1 - (1.0 + 0.2) * f.x0).norm() < 1e-15);

  cfg.init.x0 = Vector::Zero(3);
  CHECK_THROWS_AS(make_start(cfg, *p, params, 17), ConfigError);
}

TEST_CASE("run command writes its outputs") {
  const auto dir = scratch("run");
  const auto cfg = parse_config(R"({
    "problem": {"kind": "quartic", "dim": 2},
    "params": {"alpha": "auto", "beta": 0.3, "preset": "nesterov"},
    "init": {"x0": [0.8, -0.4]},
    "stop": {"max_iters": 500, "grad_tol": 0},
    "checks": ["descent", "gradient_bound", "step_bound", "rate", "replay", "kl_fit"]
  })",
                                ".");
  std::ostringstream log;
  CHECK(cmd_run(cfg, RunOptions{dir, 1, true}, log) == 0);
  CHECK(log.str().empty());
  std::ifstream in(dir / "trace.csv");
  std::string first, header;
  std::getline(in, first);
  std::getline(in, header);
  CHECK(first.rfind("# config_hash=" + cfg.hash, 0) == 0);
  CHECK(header == "k,f,grad_norm,step_norm,H_lambda,descent_slack,gradbound_slack");
  std::ifstream rep(dir / "report.json");
  const auto j = nlohmann::json::parse(rep);
  CHECK(j["pass"] == true);
  CHECK(j["metadata"]["config_hash"] == cfg.hash);
  CHECK(j["iterations"] == 500);
  CHECK(j["checks"]["descent"]["failed"] == 0);
  CHECK(j["fit"]["empirical"] == true);
  CHECK(std::filesystem::exists(dir / "certificate.json"));
}
