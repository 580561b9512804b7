#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "momentum/experiment.hpp"
#include "momentum/gradient_flow.hpp"

namespace momentum::experiment {

using nlohmann::json;

namespace {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) fail(path + "." + key, "unknown field");
  }
}

const json* section(const json& root, const char* key) {
  auto it = root.find(key);
  if (it == root.end() || it->is_null()) return nullptr;
  return &*it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

double number_or(const json& parent, const char* key, const std::string& path, double fallback) {
  auto it = parent.find(key);
  if (it == parent.end() || it->is_null()) return fallback;
  if (it->is_string() && (*it == "inf" || *it == "infinity")) {
    return std::numeric_limits<double>::infinity();
  }
  return number(*it, path + "." + key);
}

long integer_or(const json& parent, const char* key, const std::string& path, long fallback) {
  auto it = parent.find(key);
  if (it == parent.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
  return it->get<long>();
}

std::uint64_t seed_or(const json& parent, const char* key, const std::string& path,
                      std::uint64_t fallback) {
  auto it = parent.find(key);
  if (it == parent.end() || it->is_null()) return fallback;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
    fail(path + "." + key, "expected a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

std::string string_or(const json& parent, const char* key, const std::string& path,
                      const std::string& fallback) {
  auto it = parent.find(key);
  if (it == parent.end() || it->is_null()) return fallback;
  if (!it->is_string()) fail(path + "." + key, "expected a string");
  return it->get<std::string>();
}

Vector vector_from(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

std::vector<double> numbers_from(const json& j, const std::string& path) {
  const Vector v = vector_from(j, path);
  return {v.data(), v.data() + v.size()};
}

Matrix matrix_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) fail(path + "[0]", "expected a non-empty row");
  const std::size_t cols = j[0].size();
  Matrix A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) fail(rp, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  return A;
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> normal;
  Matrix A(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) A(r, c) = scale * normal(rng);
  }
  return A;
}

Vector uniform_ball(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector u(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
  } while (u.norm() == 0.0);
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
  return (r / u.norm()) * u;
}

std::string read_file(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(field, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << what << ": line " << line << ", column " << col << ": malformed JSON";
    throw ConfigError(os.str());
  }
}

const std::set<std::string> kChecks = {"descent", "gradient_bound", "step_bound", "length",
                                       "rate",    "replay",         "kl_fit"};

int default_m(const std::string& kind) {
  if (kind == "matrix_factorization" || kind == "matrix_sensing" || kind == "linear_network") {
    return 4;
  }
  return 1;
}

}  // namespace

MomentumParams ExperimentConfig::params_with(double a) const {
  switch (preset) {
    case Preset::heavy_ball:
      return MomentumParams::heavy_ball(a, beta, delta);
    case Preset::nesterov:
      return MomentumParams::nesterov(a, beta, delta);
    case Preset::generic:
      break;
  }
  return MomentumParams::generic(a, beta, gamma, delta);
}

bool ExperimentConfig::wants(const std::string& check) const {
  return std::find(checks.begin(), checks.end(), check) != checks.end();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const Overrides& overrides) {
  json root = parse_json(text, "config");
  only_keys(root, "config",
            {"comment", "seed", "problem", "params", "lipschitz", "init", "stop", "checks",
             "certificate", "track", "saddle", "sweep"});
  if (overrides.seed) root["seed"] = *overrides.seed;
  if (overrides.alpha) {
    if (!root.contains("params") || !root["params"].is_object()) root["params"] = json::object();
    root["params"]["alpha"] = *overrides.alpha;
  }

  ExperimentConfig cfg;
  cfg.raw = root;
  cfg.base_dir = base_dir;
  cfg.hash = fnv1a_hex(root.dump());
  cfg.seed = seed_or(root, "seed", "config", 0);

  // problem
  const json* prob = section(root, "problem");
  if (!prob) fail("problem", "section is required");
  if (!prob->is_object()) fail("problem", "expected an object");
  json merged = *prob;
  if (auto it = prob->find("file"); it != prob->end()) {
    if (!it->is_string()) fail("problem.file", "expected a path string");
    std::filesystem::path path = it->get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    json data = parse_json(read_file(path, "problem.file"), path.string());
    if (!data.is_object()) fail("problem.file", "'" + path.string() + "' must hold a JSON object");
    for (const auto& [key, value] : data.items()) {
      if (!merged.contains(key)) merged[key] = value;
    }
    merged.erase("file");
  }
  only_keys(merged, "problem",
            {"kind", "dim", "rank", "target", "m", "n", "target_rank", "scale", "seed", "sensing",
             "measurements", "p", "widths", "inputs", "targets", "samples", "offset", "comment"});
  cfg.problem_kind = string_or(merged, "kind", "problem", "");
  if (cfg.problem_kind.empty()) fail("problem.kind", "is required");
  static const std::set<std::string> kinds = {"quadratic",      "indefinite_quadratic",
                                              "quartic",        "matrix_factorization",
                                              "matrix_sensing", "linear_network"};
  if (!kinds.count(cfg.problem_kind)) fail("problem.kind", "unknown kind '" + cfg.problem_kind + "'");
  cfg.problem = merged;
  cfg.problem_seed = seed_or(merged, "seed", "problem", derive_seed(cfg.seed, 1));

  // params
  const json* prm = section(root, "params");
  if (!prm) fail("params", "section is required");
  only_keys(*prm, "params", {"alpha", "alpha_fraction", "beta", "gamma", "delta", "preset"});
  cfg.preset = [&] {
    try {
      return parse_preset(string_or(*prm, "preset", "params", "generic"));
    } catch (const DomainError& e) {
      fail("params.preset", e.what());
    }
  }();
  auto alpha_it = prm->find("alpha");
  if (alpha_it == prm->end()) fail("params.alpha", "is required (a number or \"auto\")");
  if (alpha_it->is_string()) {
    if (*alpha_it != "auto") fail("params.alpha", "expected a number or \"auto\"");
    cfg.alpha_auto = true;
  } else {
    cfg.alpha = number(*alpha_it, "params.alpha");
    if (!(cfg.alpha > 0.0)) fail("params.alpha", "must be positive");
  }
  cfg.alpha_fraction = number_or(*prm, "alpha_fraction", "params", 0.9);
  if (!(cfg.alpha_fraction > 0.0)) fail("params.alpha_fraction", "must be positive");
  cfg.beta = number_or(*prm, "beta", "params", 0.0);
  if (!(std::abs(cfg.beta) < 1.0)) fail("params.beta", "must lie in (-1, 1)");
  const bool has_gamma = prm->contains("gamma");
  cfg.gamma = number_or(*prm, "gamma", "params", 0.0);
  if (cfg.preset == Preset::heavy_ball) {
    if (has_gamma && cfg.gamma != 0.0) fail("params.gamma", "heavy_ball preset requires gamma = 0");
    cfg.gamma = 0.0;
  } else if (cfg.preset == Preset::nesterov) {
    if (has_gamma && cfg.gamma != cfg.beta) fail("params.gamma", "nesterov preset requires gamma = beta");
    cfg.gamma = cfg.beta;
  }
  if (std::abs(cfg.gamma) > 10.0) fail("params.gamma", "|gamma| is capped at 10");
  cfg.delta = number_or(*prm, "delta", "params", 0.0);
  if (cfg.delta < 0.0) fail("params.delta", "must be >= 0");

  // lipschitz
  cfg.lipschitz.spread = std::max(std::abs(cfg.beta), std::abs(cfg.gamma));
  cfg.lipschitz.seed = derive_seed(cfg.seed, 3);
  if (const json* lip = section(root, "lipschitz")) {
    only_keys(*lip, "lipschitz", {"mode", "seed", "safety", "pairs_per_level", "power_steps"});
    const std::string mode = string_or(*lip, "mode", "lipschitz", "sampled");
    if (mode == "sampled") {
      cfg.lipschitz.mode = LipschitzMode::sampled;
    } else if (mode == "analytic") {
      cfg.lipschitz.mode = LipschitzMode::analytic;
    } else {
      fail("lipschitz.mode", "expected \"sampled\" or \"analytic\"");
    }
    cfg.lipschitz.seed = seed_or(*lip, "seed", "lipschitz", cfg.lipschitz.seed);
    cfg.lipschitz.safety = number_or(*lip, "safety", "lipschitz", 2.0);
    if (cfg.lipschitz.safety < 1.0) fail("lipschitz.safety", "must be >= 1");
    cfg.lipschitz.pairs_per_level =
        static_cast<int>(integer_or(*lip, "pairs_per_level", "lipschitz", 16));
    if (cfg.lipschitz.pairs_per_level < 1) fail("lipschitz.pairs_per_level", "must be >= 1");
    cfg.lipschitz.power_steps = static_cast<int>(integer_or(*lip, "power_steps", "lipschitz", 3));
    if (cfg.lipschitz.power_steps < 0) fail("lipschitz.power_steps", "must be >= 0");
  }

  // certificate
  cfg.m = default_m(cfg.problem_kind);
  if (const json* cert = section(root, "certificate")) {
    only_keys(*cert, "certificate", {"m", "radius"});
    cfg.m = static_cast<int>(integer_or(*cert, "m", "certificate", cfg.m));
    if (cfg.m < 1) fail("certificate.m", "must be >= 1");
    cfg.cert_radius = number_or(*cert, "radius", "certificate", 0.0);
    if (cfg.cert_radius < 0.0) fail("certificate.radius", "must be >= 0");
  }

  // init
  cfg.init.seed = derive_seed(cfg.seed, 2);
  if (const json* init = section(root, "init")) {
    only_keys(*init, "init", {"x0", "x_minus1", "box", "seed", "velocity"});
    if (init->contains("x0") && !(*init)["x0"].is_null()) {
      cfg.init.x0 = vector_from((*init)["x0"], "init.x0");
    }
    if (init->contains("x_minus1") && !(*init)["x_minus1"].is_null()) {
      cfg.init.x_minus1 = vector_from((*init)["x_minus1"], "init.x_minus1");
    }
    cfg.init.box = number_or(*init, "box", "init", 1.0);
    if (!(cfg.init.box > 0.0)) fail("init.box", "must be positive");
    cfg.init.seed = seed_or(*init, "seed", "init", cfg.init.seed);
    cfg.init.velocity = string_or(*init, "velocity", "init", "zero");
    if (cfg.init.velocity != "zero" && cfg.init.velocity != "random" &&
        cfg.init.velocity != "flow") {
      fail("init.velocity", "expected \"zero\", \"random\" or \"flow\"");
    }
  }

  // stop
  if (const json* stop = section(root, "stop")) {
    only_keys(*stop, "stop", {"max_iters", "grad_tol", "box_radius"});
    cfg.stop.max_iters = integer_or(*stop, "max_iters", "stop", cfg.stop.max_iters);
    if (cfg.stop.max_iters < 0) fail("stop.max_iters", "must be >= 0");
    cfg.stop.grad_tol = number_or(*stop, "grad_tol", "stop", cfg.stop.grad_tol);
    if (cfg.stop.grad_tol < 0.0) fail("stop.grad_tol", "must be >= 0");
    cfg.stop.box_radius = number_or(*stop, "box_radius", "stop", cfg.stop.box_radius);
    if (!(cfg.stop.box_radius > 0.0)) fail("stop.box_radius", "must be positive");
  }

  // checks
  cfg.checks = {"descent", "gradient_bound", "rate", "replay"};
  if (const json* checks = section(root, "checks")) {
    if (!checks->is_array()) fail("checks", "expected an array of check names");
    cfg.checks.clear();
    for (std::size_t i = 0; i < checks->size(); ++i) {
      const auto& c = (*checks)[i];
      const std::string path = "checks[" + std::to_string(i) + "]";
      if (!c.is_string()) fail(path, "expected a string");
      if (!kChecks.count(c.get<std::string>())) fail(path, "unknown check '" + c.get<std::string>() + "'");
      cfg.checks.push_back(c.get<std::string>());
    }
  }

  // track
  if (const json* track = section(root, "track")) {
    only_keys(*track, "track", {"horizon", "alphas", "velocity", "min_slope"});
    cfg.track.horizon = number_or(*track, "horizon", "track", 1.0);
    if (!(cfg.track.horizon > 0.0)) fail("track.horizon", "must be positive");
    if (track->contains("alphas")) cfg.track.alphas = numbers_from((*track)["alphas"], "track.alphas");
    for (std::size_t i = 0; i < cfg.track.alphas.size(); ++i) {
      if (!(cfg.track.alphas[i] > 0.0)) fail("track.alphas[" + std::to_string(i) + "]", "must be positive");
    }
    cfg.track.velocity = string_or(*track, "velocity", "track", "flow");
    if (cfg.track.velocity != "zero" && cfg.track.velocity != "flow") {
      fail("track.velocity", "expected \"zero\" or \"flow\"");
    }
    cfg.track.min_slope = number_or(*track, "min_slope", "track", 0.9);
  }

  // saddle
  cfg.saddle.seed = derive_seed(cfg.seed, 4);
  if (const json* sad = section(root, "saddle")) {
    only_keys(*sad, "saddle",
              {"point", "trials", "radius", "seed", "grad_tol", "max_iters", "region",
               "lipschitz_radius", "fixed_starts"});
    if (auto it = sad->find("point"); it != sad->end() && !it->is_null()) {
      if (it->is_string()) {
        if (*it != "origin") fail("saddle.point", "expected a vector or \"origin\"");
      } else {
        cfg.saddle.point = vector_from(*it, "saddle.point");
      }
    }
    const long trials = integer_or(*sad, "trials", "saddle", 100);
    if (trials < 0) fail("saddle.trials", "must be >= 0");
    cfg.saddle.trials = static_cast<std::size_t>(trials);
    cfg.saddle.radius = number_or(*sad, "radius", "saddle", 1e-3);
    if (!(cfg.saddle.radius > 0.0)) fail("saddle.radius", "must be positive");
    cfg.saddle.seed = seed_or(*sad, "seed", "saddle", cfg.saddle.seed);
    cfg.saddle.grad_tol = number_or(*sad, "grad_tol", "saddle", 1e-8);
    cfg.saddle.max_iters = integer_or(*sad, "max_iters", "saddle", 100000);
    cfg.saddle.region = number_or(*sad, "region", "saddle", 1e3);
    cfg.saddle.lipschitz_radius = number_or(*sad, "lipschitz_radius", "saddle", 0.0);
    if (auto it = sad->find("fixed_starts"); it != sad->end()) {
      if (!it->is_array()) fail("saddle.fixed_starts", "expected an array");
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string path = "saddle.fixed_starts[" + std::to_string(i) + "]";
        const auto& s = (*it)[i];
        only_keys(s, path, {"x0", "x_minus1"});
        if (!s.contains("x0")) fail(path + ".x0", "is required");
        const Vector x0 = vector_from(s["x0"], path + ".x0");
        const Vector xm1 = s.contains("x_minus1") ? vector_from(s["x_minus1"], path + ".x_minus1") : x0;
        cfg.saddle.fixed_starts.emplace_back(x0, xm1);
      }
    }
  }

  // sweep
  if (const json* sw = section(root, "sweep")) {
    only_keys(*sw, "sweep", {"alpha", "alpha_scale", "beta", "gamma", "seeds"});
    if (sw->contains("alpha")) cfg.sweep.alpha = numbers_from((*sw)["alpha"], "sweep.alpha");
    if (sw->contains("alpha_scale")) {
      cfg.sweep.alpha_scale = numbers_from((*sw)["alpha_scale"], "sweep.alpha_scale");
    }
    if (sw->contains("beta")) cfg.sweep.beta = numbers_from((*sw)["beta"], "sweep.beta");
    if (sw->contains("gamma")) cfg.sweep.gamma = numbers_from((*sw)["gamma"], "sweep.gamma");
    if (sw->contains("seeds")) {
      const auto& s = (*sw)["seeds"];
      if (!s.is_array()) fail("sweep.seeds", "expected an array of integers");
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i].is_number_integer() || s[i].get<long long>() < 0) {
          fail("sweep.seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
        }
        cfg.sweep.seeds.push_back(s[i].get<std::uint64_t>());
      }
    }
    for (const char* key : {"alpha", "alpha_scale", "beta", "gamma", "seeds"}) {
      if (sw->contains(key) && (*sw)[key].is_array() && (*sw)[key].empty()) {
        fail(std::string("sweep.") + key, "empty grid");
      }
    }
    if (!cfg.sweep.alpha.empty() && !cfg.sweep.alpha_scale.empty()) {
      fail("sweep", "give either alpha or alpha_scale, not both");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  const std::string text = read_file(path, "config");
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(text, base, overrides);
}

ProblemPtr build_problem(const ExperimentConfig& cfg) {
  const json& j = cfg.problem;
  const std::string& kind = cfg.problem_kind;
  std::mt19937_64 rng(cfg.problem_seed);
  const double scale = number_or(j, "scale", "problem", 1.0);
  ProblemPtr p;
  try {
    if (kind == "quadratic" || kind == "indefinite_quadratic" || kind == "quartic") {
      const long dim = integer_or(j, "dim", "problem", 0);
      if (dim < 0) fail("problem.dim", "must be >= 1");
      p = synthetic(kind, static_cast<std::size_t>(dim));
    } else if (kind == "matrix_factorization") {
      const long rank = integer_or(j, "rank", "problem", 0);
      if (rank < 1) fail("problem.rank", "must be >= 1");
      Matrix target;
      if (j.contains("target")) {
        target = matrix_from(j["target"], "problem.target");
      } else {
        const long m = integer_or(j, "m", "problem", 0), n = integer_or(j, "n", "problem", 0);
        if (m < 1 || n < 1) fail("problem", "give target or positive m and n");
        const long t = integer_or(j, "target_rank", "problem", std::min(m, n));
        if (t < 1) fail("problem.target_rank", "must be >= 1");
        target = gaussian(rng, m, t, scale) * gaussian(rng, n, t, 1.0).transpose() /
                 std::sqrt(static_cast<double>(t));
      }
      p = matrix_factorization(target, static_cast<int>(rank));
    } else if (kind == "matrix_sensing") {
      const long rank = integer_or(j, "rank", "problem", 0);
      if (rank < 1) fail("problem.rank", "must be >= 1");
      std::vector<Matrix> sensing;
      Vector b;
      if (j.contains("sensing")) {
        const auto& s = j["sensing"];
        if (!s.is_array()) fail("problem.sensing", "expected an array of matrices");
        for (std::size_t i = 0; i < s.size(); ++i) {
          sensing.push_back(matrix_from(s[i], "problem.sensing[" + std::to_string(i) + "]"));
        }
        if (!j.contains("measurements")) fail("problem.measurements", "is required with sensing");
        b = vector_from(j["measurements"], "problem.measurements");
      } else {
        const long m = integer_or(j, "m", "problem", 0), n = integer_or(j, "n", "problem", 0);
        const long count = integer_or(j, "p", "problem", 0);
        if (m < 1 || n < 1 || count < 1) fail("problem", "give sensing or positive m, n and p");
        const long t = integer_or(j, "target_rank", "problem", rank);
        const Matrix planted = gaussian(rng, m, t, scale) * gaussian(rng, n, t, 1.0).transpose();
        b.resize(count);
        for (long i = 0; i < count; ++i) {
          sensing.push_back(gaussian(rng, m, n, 1.0 / std::sqrt(static_cast<double>(count))));
          b[i] = sensing.back().cwiseProduct(planted).sum();
        }
      }
      p = matrix_sensing(std::move(sensing), b, static_cast<int>(rank));
    } else {
      if (!j.contains("widths")) fail("problem.widths", "is required");
      std::vector<int> widths;
      const auto& w = j["widths"];
      if (!w.is_array()) fail("problem.widths", "expected an array of integers");
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w[i].is_number_integer()) fail("problem.widths[" + std::to_string(i) + "]", "expected an integer");
        widths.push_back(w[i].get<int>());
      }
      Matrix inputs, targets;
      if (j.contains("inputs") || j.contains("targets")) {
        if (!j.contains("inputs") || !j.contains("targets")) {
          fail("problem", "inputs and targets go together");
        }
        inputs = matrix_from(j["inputs"], "problem.inputs");
        targets = matrix_from(j["targets"], "problem.targets");
      } else {
        const long samples = integer_or(j, "samples", "problem", 0);
        if (samples < 1) fail("problem.samples", "must be >= 1 for a random instance");
        if (widths.empty() || widths.front() < 1 || widths.back() < 1) {
          fail("problem.widths", "widths must be >= 1");
        }
        const double norm = 1.0 / std::sqrt(static_cast<double>(samples));
        inputs = gaussian(rng, widths.front(), samples, norm);
        targets = gaussian(rng, widths.back(), samples, scale * norm);
      }
      p = linear_network(inputs, targets, widths);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail("problem", e.what());
  }
  const double offset = number_or(j, "offset", "problem", 0.0);
  if (offset != 0.0) p = shifted(p, offset);
  return p;
}

Start make_start(const ExperimentConfig& cfg, const Problem& p, const MomentumParams& params,
                 std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(p.dim());
  std::mt19937_64 rng(seed);
  Start s;
  if (cfg.init.x0) {
    if (cfg.init.x0->size() != n) {
      fail("init.x0", "has length " + std::to_string(cfg.init.x0->size()) + ", problem dim is " +
                          std::to_string(n));
    }
    s.x0 = *cfg.init.x0;
  } else {
    s.x0 = uniform_ball(rng, n, cfg.init.box);
  }
  if (cfg.init.x_minus1) {
    if (cfg.init.x_minus1->size() != n) fail("init.x_minus1", "length does not match problem dim");
    s.x_minus1 = *cfg.init.x_minus1;
  } else if (cfg.init.velocity == "random") {
    s.x_minus1 = s.x0 + uniform_ball(rng, n, params.delta * params.alpha);
  } else if (cfg.init.velocity == "flow") {
    s.x_minus1 = flow_matched_start(p, s.x0, params);
  } else {
    s.x_minus1 = s.x0;
  }
  return s;
}

}  // namespace momentum::experiment
