#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "momentum/analysis.hpp"
#include "momentum/certificates.hpp"
#include "momentum/experiment.hpp"
#include "momentum/gradient_flow.hpp"
#include "momentum/kernels.hpp"
#include "momentum/saddle.hpp"

namespace momentum::experiment {

using nlohmann::json;

namespace {

constexpr double kReplayTol = 1e-12;
constexpr std::size_t kMaxSweepCells = 10000;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json metadata(const ExperimentConfig& cfg, const char* command) {
  return {{"command", command},
          {"timestamp", utc_timestamp()},
          {"config_hash", cfg.hash},
          {"seeds",
           {{"root", cfg.seed},
            {"problem", cfg.problem_seed},
            {"init", cfg.init.seed},
            {"lipschitz", cfg.lipschitz.seed},
            {"saddle", cfg.saddle.seed}}},
          {"backend", std::string(kernels::backend_name(kernels::active_backend()))}};
}

std::string fmt(double v) { return format_double(v); }

std::filesystem::path out_dir(const RunOptions& opt) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  if (const char* env = std::getenv("MOMENTUM_OUT_DIR"); env && *env) return env;
  return "out";
}

// Problem, start, Lipschitz bounds and certificate for one parameter choice.
struct Setup {
  MomentumParams params;
  Start start;
  LipschitzBounds bounds;
  Certificate cert;
  double cert_radius = 0.0;
};

Setup prepare(const ExperimentConfig& cfg, const Problem& p, std::optional<double> alpha,
              double beta, double gamma, std::uint64_t init_seed) {
  ExperimentConfig local = cfg;
  local.beta = beta;
  local.gamma = gamma;
  local.lipschitz.spread = std::max(std::abs(beta), std::abs(gamma));
  const Vector center = Vector::Zero(static_cast<Eigen::Index>(p.dim()));

  // The x_0 draw does not depend on alpha, so a provisional alpha is enough here.
  const MomentumParams probe = local.params_with(alpha.value_or(1.0));
  Start start = make_start(local, p, probe, init_seed);
  double radius = cfg.cert_radius;
  const bool auto_radius = radius <= 0.0;
  if (auto_radius) {
    radius = 2.0 * std::max({p.suggested_box(), start.x0.norm(),
                             cfg.init.x_minus1 ? start.x_minus1.norm() : 0.0});
  }

  Setup s;
  for (int attempt = 0;; ++attempt) {
    s.bounds = estimate_lipschitz(p, center, radius, local.lipschitz);
    const double a = alpha ? *alpha : cfg.alpha_fraction * safe_alpha(s.bounds.M, beta, gamma);
    s.params = local.params_with(a);
    s.start = make_start(local, p, s.params, init_seed);
    const double reach = std::max(s.start.x0.norm(), s.start.x_minus1.norm());
    if (!auto_radius || 2.0 * reach <= radius || attempt == 4) break;
    radius = 2.0 * reach;
  }
  s.cert_radius = radius;
  s.cert = make_certificate(s.bounds, s.params, cfg.m, center, radius);
  return s;
}

json check_summary(const CheckReport& r) {
  return {{"pass", r.ok()},
          {"steps", r.passed + r.failed + r.uncertified},
          {"passed", r.passed},
          {"failed", r.failed},
          {"uncertified", r.uncertified},
          {"min_slack", r.min_slack},
          {"first_failure", r.first_failure}};
}

std::map<long, double> slack_by_step(const CheckReport& r) {
  std::map<long, double> m;
  for (const auto& s : r.steps) m[s.k] = s.slack;
  return m;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
  }
  return sxy / sxx;
}

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const ProblemPtr p = build_problem(cfg);
    const Setup s = prepare(cfg, *p, cfg.alpha_auto ? std::nullopt : std::optional(cfg.alpha),
                            cfg.beta, cfg.gamma, cfg.init.seed);
    const Trace trace = run(*p, s.start.x_minus1, s.start.x0, s.params, cfg.stop);
    const Certificate& cert = s.cert;

    json checks = json::object();
    json notes = json::array();
    bool failed = false;
    if (!cert.alpha_admissible) {
      notes.push_back("alpha = " + fmt(s.params.alpha) + " exceeds the safe step " +
                      fmt(cert.alpha_bar) + "; the certificate does not apply");
    }
    if (trace.delta_violation) notes.push_back("||x_0 - x_{-1}|| exceeds delta * alpha");
    if (trace.stop == StopReason::diverged) {
      notes.push_back("iteration diverged after " + std::to_string(trace.last()) + " steps");
      failed = true;
    }

    std::map<long, double> descent_slack, grad_slack;
    if (cfg.wants("descent")) {
      const auto r = check_descent(trace, cert);
      descent_slack = slack_by_step(r);
      checks["descent"] = check_summary(r);
      failed |= !r.ok();
    }
    if (cfg.wants("gradient_bound")) {
      const auto r = check_gradient_bound(*p, trace, cert);
      grad_slack = slack_by_step(r.b_alpha);
      checks["gradient_bound"] = {{"pass", r.ok()},
                                  {"b_alpha", check_summary(r.b_alpha)},
                                  {"c2", check_summary(r.c2)}};
      failed |= !r.ok();
    }
    if (cfg.wants("step_bound")) {
      const auto r = check_step_bound(trace, cert);
      checks["step_bound"] = {{"pass", r.ok()},
                              {"velocity", check_summary(r.velocity)},
                              {"pair", check_summary(r.pair)},
                              {"geometric", check_summary(r.geometric)}};
      failed |= !r.ok();
    }
    if (cfg.wants("replay")) {
      const double res = replay_residual(*p, trace);
      const bool ok = res <= kReplayTol;
      checks["replay"] = {{"pass", ok}, {"residual", res}, {"tolerance", kReplayTol}};
      failed |= !ok;
    }

    const LengthMeasure length = measure_length(trace);
    json fit_json = nullptr;
    std::optional<Desingularizer> psi;
    if (cfg.wants("kl_fit") || cfg.wants("length")) {
      try {
        psi = fit_desingularizer(trace);
        fit_json = *psi;
      } catch (const DomainError& e) {
        notes.push_back(std::string("desingularizer fit skipped: ") + e.what());
      }
    }
    if (cfg.wants("length")) {
      if (psi) {
        const auto r = check_length_formula(trace, cert, *psi);
        checks["length"] = r;
        failed |= !r.pass;
      } else {
        checks["length"] = {{"pass", nullptr}, {"skipped", "no desingularizer"}};
      }
    }
    json rate_json = nullptr;
    if (cfg.wants("rate")) {
      const auto r = check_rate(trace, cert, length.total);
      rate_json = r;
      rate_json["length_source"] = "measured";
      checks["rate"] = {{"pass", r.pass}, {"sup", r.sup}, {"c_alpha", r.c_alpha}};
      failed |= !r.pass;
    }

    const auto dir = out_dir(opt);
    std::ostringstream csv;
    csv << provenance_line(cfg) << "\n";
    csv << "k,f,grad_norm,step_norm,H_lambda,descent_slack,gradbound_slack\n";
    for (long k = 0; k <= trace.last(); ++k) {
      const auto ku = static_cast<std::size_t>(k);
      csv << k << ',' << fmt(trace.f[ku]) << ',' << fmt(trace.grad_norm[ku]) << ',';
      if (ku < trace.step_norm.size()) csv << fmt(trace.step_norm[ku]);
      csv << ',' << fmt(lyapunov(trace.f[ku], trace.x(k), trace.x(k - 1), cert.lambda)) << ',';
      if (auto it = descent_slack.find(k); it != descent_slack.end()) csv << fmt(it->second);
      csv << ',';
      if (auto it = grad_slack.find(k); it != grad_slack.end()) csv << fmt(it->second);
      csv << '\n';
    }
    write_text(dir / "trace.csv", csv.str());
    write_json(dir / "certificate.json", cert);

    json report = {{"metadata", metadata(cfg, "run")},
                   {"problem", {{"kind", cfg.problem_kind}, {"name", p->name()}, {"dim", p->dim()}}},
                   {"params", s.params},
                   {"lipschitz",
                    {{"mode", cfg.lipschitz.mode == LipschitzMode::sampled ? "sampled" : "analytic"},
                     {"L", s.bounds.L},
                     {"M", s.bounds.M},
                     {"radius", s.bounds.radius}}},
                   {"stop", std::string(stop_reason_name(trace.stop))},
                   {"iterations", trace.last()},
                   {"final", {{"f", trace.f.back()}, {"grad_norm", trace.grad_norm.back()}}},
                   {"checks", checks},
                   {"length", {{"measured", length.total}}},
                   {"rate", rate_json},
                   {"fit", fit_json},
                   {"notes", notes},
                   {"pass", !failed}};
    write_json(dir / "report.json", report);

    if (!opt.quiet) {
      log << p->name() << ": " << stop_reason_name(trace.stop) << " after " << trace.last()
          << " steps, f = " << fmt(trace.f.back()) << ", |grad| = " << fmt(trace.grad_norm.back())
          << "\n";
      for (const auto& [name, c] : checks.items()) {
        const auto& pass = c["pass"];
        log << "  " << name << ": " << (pass.is_null() ? "skipped" : pass.get<bool>() ? "pass" : "FAIL")
            << "\n";
      }
      for (const auto& n : notes) log << "  note: " << n.get<std::string>() << "\n";
    }
    return failed ? 2 : 0;
  });
}

int cmd_track(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    if (cfg.track.alphas.size() < 2) {
      throw ConfigError("track.alphas: need at least two step sizes to fit a slope");
    }
    const ProblemPtr p = build_problem(cfg);
    ExperimentConfig local = cfg;
    local.init.velocity = cfg.track.velocity;
    const double T = cfg.track.horizon;

    std::vector<double> alphas, errors;
    json rows = json::array();
    std::ostringstream csv;
    csv << provenance_line(cfg) << "\n";
    csv << "alpha,steps,max_error,complete\n";
    for (double a : cfg.track.alphas) {
      const MomentumParams params = local.params_with(a);
      const Start start = make_start(local, *p, params, cfg.init.seed);
      const StopRules stop{static_cast<long>(std::floor(T / a + 1e-9)), 0.0,
                           std::numeric_limits<double>::infinity()};
      const Trace trace = run(*p, start.x_minus1, start.x0, params, stop);
      const TrackingReport r = tracking_error(*p, trace, T);
      csv << fmt(a) << ',' << r.errors.size() - 1 << ',' << fmt(r.max_error) << ','
          << (r.complete ? "true" : "false") << '\n';
      rows.push_back({{"alpha", a}, {"max_error", r.max_error}, {"complete", r.complete}});
      if (!r.complete) throw Error("track: alpha = " + fmt(a) + " did not reach the horizon");
      alphas.push_back(a);
      errors.push_back(r.max_error);
    }
    const bool positive = std::all_of(errors.begin(), errors.end(), [](double e) { return e > 0.0; });
    const double slope = positive ? log_log_slope(alphas, errors) : std::numeric_limits<double>::quiet_NaN();
    const bool pass = positive && slope >= cfg.track.min_slope;

    const auto dir = out_dir(opt);
    write_text(dir / "tracking.csv", csv.str());
    json report = {{"metadata", metadata(cfg, "track")},
                   {"problem", {{"kind", cfg.problem_kind}, {"name", p->name()}, {"dim", p->dim()}}},
                   {"params", local.params_with(cfg.track.alphas.front())},
                   {"horizon", T},
                   {"velocity", cfg.track.velocity},
                   {"runs", rows},
                   {"slope", positive ? json(slope) : json(nullptr)},
                   {"min_slope", cfg.track.min_slope},
                   {"pass", pass}};
    write_json(dir / "tracking_report.json", report);
    if (!opt.quiet) {
      for (std::size_t i = 0; i < alphas.size(); ++i) {
        log << "alpha = " << fmt(alphas[i]) << "  max error = " << fmt(errors[i]) << "\n";
      }
      log << "log-log slope = " << fmt(slope) << (pass ? " (pass)" : " (FAIL)") << "\n";
    }
    return pass ? 0 : 2;
  });
}

int cmd_saddle(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    if (cfg.beta == 0.0) {
      throw ConfigError("params.beta: the saddle experiment needs beta != 0");
    }
    const ProblemPtr p = build_problem(cfg);
    const auto n = static_cast<Eigen::Index>(p->dim());
    const Vector point = cfg.saddle.point.value_or(Vector::Zero(n));
    if (point.size() != n) {
      throw ConfigError("saddle.point: has length " + std::to_string(point.size()) +
                        ", problem dim is " + std::to_string(n));
    }
    const double lip_radius =
        cfg.saddle.lipschitz_radius > 0.0 ? cfg.saddle.lipschitz_radius : p->suggested_box();
    const LipschitzBounds bounds = estimate_lipschitz(*p, point, lip_radius, cfg.lipschitz);

    MomentumParams params;
    if (cfg.alpha_auto) {
      const MomentumParams probe = cfg.params_with(1.0);
      const double limit = std::min(safe_alpha(bounds.M, probe), saddle_safe_alpha(bounds.M, probe));
      params = cfg.params_with(cfg.alpha_fraction * limit);
    } else {
      params = cfg.params_with(cfg.alpha);
    }

    SaddleTolerances tols;
    tols.grad_tol = cfg.saddle.grad_tol;
    const CriticalPointAnalysis analysis = analyze_critical_point(*p, point, params, tols);

    json report = {{"metadata", metadata(cfg, "saddle")},
                   {"problem", {{"kind", cfg.problem_kind}, {"name", p->name()}, {"dim", p->dim()}}},
                   {"params", params},
                   {"lipschitz", {{"L", bounds.L}, {"M", bounds.M}, {"radius", bounds.radius}}},
                   {"safe_alpha", safe_alpha(bounds.M, params)},
                   {"saddle_safe_alpha", saddle_safe_alpha(bounds.M, params)},
                   {"rank_condition", rank_condition(bounds.M, params)},
                   {"analysis", analysis}};
    int code = 0;
    const StopRules stop{cfg.saddle.max_iters, cfg.saddle.grad_tol, cfg.saddle.region};
    if (analysis.classification == PointClass::strict_saddle && cfg.saddle.trials > 0) {
      EscapeOptions eo;
      eo.radius = cfg.saddle.radius;
      eo.trials = cfg.saddle.trials;
      eo.seed = cfg.saddle.seed;
      eo.M = bounds.M;
      eo.stop = stop;
      eo.workers = opt.workers;
      eo.tols = tols;
      const EscapeExperiment e = escape_experiment(*p, point, params, eo);
      report["escape"] = e;
      if (e.at_saddle > 0) code = 2;
      if (!opt.quiet) {
        log << "strict saddle: " << e.escaped << "/" << e.trials << " escaped, " << e.at_saddle
            << " at saddle, " << e.inconclusive << " inconclusive, " << e.diverged << " diverged\n";
      }
    } else if (!opt.quiet) {
      log << "critical point is " << point_class_name(analysis.classification)
          << "; no escape trials\n";
    }

    json fixed = json::array();
    const double at_radius = 10.0 * cfg.saddle.radius * 1e-3;
    for (const auto& [x0, xm1] : cfg.saddle.fixed_starts) {
      if (x0.size() != n || xm1.size() != n) {
        throw ConfigError("saddle.fixed_starts: start length does not match problem dim");
      }
      const TrialResult r = run_trial(*p, point, params, xm1, x0, stop, at_radius);
      fixed.push_back({{"x0", std::vector<double>(x0.data(), x0.data() + n)},
                       {"outcome", std::string(trial_outcome_name(r.outcome))},
                       {"final_distance", r.final_distance},
                       {"final_grad_norm", r.final_grad_norm},
                       {"final_f", r.final_f},
                       {"iterations", r.iterations}});
      if (!opt.quiet) log << "fixed start: " << trial_outcome_name(r.outcome) << "\n";
    }
    report["fixed_starts"] = fixed;
    write_json(out_dir(opt) / "saddle_report.json", report);
    return code;
  });
}

int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const ProblemPtr p = build_problem(cfg);
    const SweepSpec& sw = cfg.sweep;
    const bool scaled = !sw.alpha_scale.empty();
    std::vector<double> alphas = scaled ? sw.alpha_scale : sw.alpha;
    if (alphas.empty()) {
      if (cfg.alpha_auto) {
        alphas = {cfg.alpha_fraction};
      } else {
        alphas = {cfg.alpha};
      }
    }
    const bool relative = scaled || (sw.alpha.empty() && cfg.alpha_auto);
    const std::vector<double> betas = sw.beta.empty() ? std::vector<double>{cfg.beta} : sw.beta;
    std::vector<double> gammas = sw.gamma.empty() ? std::vector<double>{cfg.gamma} : sw.gamma;
    if (cfg.preset != Preset::generic) gammas = {0.0};
    const std::vector<std::uint64_t> seeds =
        sw.seeds.empty() ? std::vector<std::uint64_t>{cfg.init.seed} : sw.seeds;

    struct Cell {
      double a, beta, gamma;
      std::uint64_t seed;
    };
    std::vector<Cell> cells;
    const double total = static_cast<double>(alphas.size()) * betas.size() * gammas.size() * seeds.size();
    if (total == 0.0) throw ConfigError("sweep: the grid is empty");
    if (total > static_cast<double>(kMaxSweepCells)) {
      throw ConfigError("sweep: " + fmt(total) + " cells exceed the limit of " +
                        std::to_string(kMaxSweepCells));
    }
    for (double b : betas) {
      if (!(std::abs(b) < 1.0)) throw ConfigError("sweep.beta: values must lie in (-1, 1)");
      for (double g : gammas) {
        if (std::abs(g) > 10.0) throw ConfigError("sweep.gamma: |gamma| is capped at 10");
        for (double a : alphas) {
          if (!(a > 0.0)) throw ConfigError("sweep: step sizes must be positive");
          for (auto sd : seeds) cells.push_back({a, b, g, sd});
        }
      }
    }

    std::vector<std::string> rows(cells.size());
    std::vector<std::string> errors(cells.size());
    parallel_for(cells.size(), opt.workers, [&](std::size_t i) {
      const Cell& c = cells[i];
      std::ostringstream row;
      try {
        ExperimentConfig local = cfg;
        const double gamma = cfg.preset == Preset::nesterov ? c.beta : c.gamma;
        std::optional<double> alpha;
        if (!relative) alpha = c.a;
        local.alpha_fraction = c.a;
        const Setup s = prepare(local, *p, alpha, c.beta, gamma, c.seed);
        const Trace trace = run(*p, s.start.x_minus1, s.start.x0, s.params, cfg.stop);
        const auto d = check_descent(trace, s.cert);
        const double min_grad = *std::min_element(trace.grad_norm.begin(), trace.grad_norm.end());
        row << fmt(s.params.alpha) << ',' << fmt(s.params.beta) << ',' << fmt(s.params.gamma) << ','
            << c.seed << ',' << fmt(s.cert.alpha_bar) << ',' << (s.cert.alpha_admissible ? 1 : 0)
            << ',' << stop_reason_name(trace.stop) << ',' << trace.last() << ','
            << fmt(trace.f.back()) << ',' << fmt(trace.grad_norm.back()) << ',' << fmt(min_grad)
            << ',' << d.failed << ',' << fmt(d.min_slack) << ','
            << fmt(measure_length(trace).total);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      rows[i] = row.str();
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i].empty()) throw Error("sweep cell " + std::to_string(i) + ": " + errors[i]);
    }

    std::ostringstream csv;
    csv << provenance_line(cfg) << "\n";
    csv << "alpha,beta,gamma,seed,alpha_bar,admissible,stop,iterations,final_f,final_grad_norm,"
           "min_grad_norm,descent_failures,descent_min_slack,length\n";
    for (const auto& r : rows) csv << r << '\n';
    write_text(out_dir(opt) / "sweep.csv", csv.str());
    if (!opt.quiet) log << "sweep: " << cells.size() << " cells\n";
    return 0;
  });
}

}  // namespace momentum::experiment
