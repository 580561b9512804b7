#pragma once
// Declarative experiments: a JSON config describes the problem, parameters,
// initialization, stop rules and checks; the commands run it and write CSV and
// JSON outputs into an output directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentum/optimizer.hpp"
#include "momentum/problems.hpp"

namespace momentum::experiment {

// Config errors carry the offending field path, e.g. "params.beta: ...".
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct InitSpec {
  std::optional<Vector> x0;
  std::optional<Vector> x_minus1;
  double box = 1.0;  // x0 uniform in B(0, box) when not given
  std::uint64_t seed = 0;
  // x_{-1}: "zero" (x_{-1} = x_0), "random" (uniform in B(x_0, delta alpha)) or "flow".
  std::string velocity = "zero";
};

struct TrackSpec {
  double horizon = 1.0;
  std::vector<double> alphas;
  std::string velocity = "flow";
  double min_slope = 0.9;
};

struct SaddleSpec {
  std::optional<Vector> point;  // origin when empty
  std::size_t trials = 100;
  double radius = 1e-3;
  std::uint64_t seed = 0;
  double grad_tol = 1e-8;
  long max_iters = 100000;
  double region = 1e3;
  double lipschitz_radius = 0.0;  // 0: problem's suggested box
  // Extra deterministic starts, each {"x0": [...], "x_minus1": [...]}.
  std::vector<std::pair<Vector, Vector>> fixed_starts;
};

struct SweepSpec {
  std::vector<double> alpha;        // absolute step sizes
  std::vector<double> alpha_scale;  // multiples of the safe step
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::filesystem::path base_dir;
  std::string hash;
  std::uint64_t seed = 0;

  std::string problem_kind;
  nlohmann::json problem;  // problem section with any referenced file merged in
  std::uint64_t problem_seed = 0;

  bool alpha_auto = false;
  double alpha = 0.0;
  double alpha_fraction = 0.9;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  Preset preset = Preset::generic;

  LipschitzOptions lipschitz;
  double cert_radius = 0.0;  // 0: derived from the box and the start points
  int m = 1;

  InitSpec init;
  StopRules stop;
  std::vector<std::string> checks;
  TrackSpec track;
  SaddleSpec saddle;
  SweepSpec sweep;

  MomentumParams params_with(double alpha) const;
  bool wants(const std::string& check) const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
};

// Parses JSON text. `base_dir` resolves relative file references.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const Overrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

ProblemPtr build_problem(const ExperimentConfig& cfg);

struct Start {
  Vector x_minus1;
  Vector x0;
};

Start make_start(const ExperimentConfig& cfg, const Problem& p, const MomentumParams& params,
                 std::uint64_t seed);

std::string fnv1a_hex(const std::string& text);

struct RunOptions {
  std::filesystem::path out_dir;
  std::size_t workers = 1;
  bool quiet = false;
};

// Exit codes: 0 success, 1 config or runtime error, 2 a requested check failed.
int cmd_run(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_track(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_saddle(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);

// Output helpers.
std::string provenance_line(const ExperimentConfig& cfg);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace momentum::experiment
