#include "momentum/optimizer.hpp"

#include <cmath>
#include <ostream>

#include "momentum/kernels.hpp"

namespace momentum {

std::string_view preset_name(Preset preset) {
  switch (preset) {
    case Preset::generic:
      return "generic";
    case Preset::heavy_ball:
      return "heavy_ball";
    case Preset::nesterov:
      return "nesterov";
  }
  return "generic";
}

Preset parse_preset(std::string_view name) {
  if (name == "generic") return Preset::generic;
  if (name == "heavy_ball") return Preset::heavy_ball;
  if (name == "nesterov") return Preset::nesterov;
  throw DomainError("unknown preset '" + std::string(name) + "'");
}

MomentumParams MomentumParams::generic(double alpha, double beta, double gamma, double delta) {
  return {alpha, beta, gamma, delta, Preset::generic};
}

MomentumParams MomentumParams::heavy_ball(double alpha, double beta, double delta) {
  return {alpha, beta, 0.0, delta, Preset::heavy_ball};
}

MomentumParams MomentumParams::nesterov(double alpha, double beta, double delta) {
  return {alpha, beta, beta, delta, Preset::nesterov};
}

void MomentumParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive");
  if (!(std::abs(beta) < 1.0)) throw DomainError("beta must lie in (-1, 1)");
  if (!std::isfinite(gamma)) throw DomainError("gamma must be finite");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("delta must be >= 0");
  if (preset == Preset::heavy_ball && gamma != 0.0) {
    throw DomainError("heavy_ball preset requires gamma = 0");
  }
  if (preset == Preset::nesterov && gamma != beta) {
    throw DomainError("nesterov preset requires gamma = beta");
  }
}

StepResult step(const Problem& p, const Vector& x_prev, const Vector& x_curr,
                const MomentumParams& params) {
  const auto n = static_cast<Eigen::Index>(p.dim());
  if (x_prev.size() != n || x_curr.size() != n) {
    throw DimensionError("step: iterate length does not match problem dimension");
  }
  StepResult out;
  out.y_beta.resize(n);
  out.y_gamma.resize(n);
  out.x_next.resize(n);
  kernels::extrapolate(view(x_curr), view(x_prev), params.beta, params.gamma, view(out.y_beta),
                       view(out.y_gamma));
  out.grad_y_gamma = p.gradient(out.y_gamma);
  kernels::descend(view(out.y_beta), view(out.grad_y_gamma), params.alpha, view(out.x_next));
  out.finite = out.x_next.allFinite();
  return out;
}

double safe_alpha(double M, double beta, double gamma) {
  if (!(M > 0.0) || !std::isfinite(M)) throw DomainError("safe_alpha: M must be positive");
  const double first = 1.0 / M;
  const double denom = beta * beta + 2.0 * std::abs(beta - gamma);
  if (denom == 0.0) return first;
  return std::min(first, (1.0 - beta * beta) / (2.0 * denom * M));
}

double safe_alpha(double M, const MomentumParams& params) {
  return safe_alpha(M, params.beta, params.gamma);
}

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::max_iters:
      return "max_iters";
    case StopReason::grad_tol:
      return "grad_tol";
    case StopReason::diverged:
      return "diverged";
    case StopReason::left_box:
      return "left_box";
  }
  return "max_iters";
}

StopReason parse_stop_reason(std::string_view name) {
  if (name == "max_iters") return StopReason::max_iters;
  if (name == "grad_tol") return StopReason::grad_tol;
  if (name == "diverged") return StopReason::diverged;
  if (name == "left_box") return StopReason::left_box;
  throw DomainError("unknown stop reason '" + std::string(name) + "'");
}

Trace run(const Problem& p, const Vector& x_minus1, const Vector& x0, const MomentumParams& params,
          const StopRules& stop) {
  params.validate();
  if (stop.grad_tol < 0.0) throw DomainError("grad_tol must be >= 0");
  if (stop.max_iters < 0) throw DomainError("max_iters must be >= 0");
  const auto n = static_cast<Eigen::Index>(p.dim());
  if (x_minus1.size() != n || x0.size() != n) {
    throw DimensionError("run: initial points do not match problem dimension");
  }

  Trace t;
  t.params = params;
  t.points = {x_minus1, x0};
  t.delta_violation =
      kernels::distance(view(x0), view(x_minus1)) > params.delta * params.alpha * (1.0 + 1e-12);

  Vector g = p.gradient(x0);
  double fx = p.value(x0);
  if (!std::isfinite(fx) || !g.allFinite()) {
    t.stop = StopReason::diverged;
    return t;
  }
  t.f.push_back(fx);
  t.grad_norm.push_back(g.norm());

  for (long k = 0;; ++k) {
    if (t.grad_norm.back() < stop.grad_tol) {
      t.stop = StopReason::grad_tol;
      break;
    }
    if (k >= stop.max_iters) {
      t.stop = StopReason::max_iters;
      break;
    }
    const Vector& xk = t.points.back();
    const Vector& xprev = t.points[t.points.size() - 2];
    StepResult s = step(p, xprev, xk, params);
    if (!s.finite) {
      t.stop = StopReason::diverged;
      break;
    }
    Vector g_next = p.gradient(s.x_next);
    const double f_next = p.value(s.x_next);
    if (!std::isfinite(f_next) || !g_next.allFinite()) {
      t.stop = StopReason::diverged;
      break;
    }
    t.step_norm.push_back(kernels::distance(view(s.x_next), view(xk)));
    t.y_beta.push_back(std::move(s.y_beta));
    t.y_gamma.push_back(std::move(s.y_gamma));
    t.f.push_back(f_next);
    t.grad_norm.push_back(g_next.norm());
    t.points.push_back(std::move(s.x_next));
    if (kernels::distance(view(t.points.back()), view(x0)) > stop.box_radius) {
      t.stop = StopReason::left_box;
      break;
    }
  }
  return t;
}

double replay_residual(const Problem& p, const Trace& trace) {
  const auto& prm = trace.params;
  double worst = 0.0;
  for (long k = 0; k < trace.last(); ++k) {
    const Vector& xk = trace.x(k);
    const Vector v = xk - trace.x(k - 1);
    const Vector g = p.gradient(xk + prm.gamma * v);
    const Vector r = trace.x(k + 1) - xk - prm.beta * v + prm.alpha * g;
    const double scale = trace.x(k + 1).norm() + xk.norm() + std::abs(prm.beta) * v.norm() +
                         prm.alpha * g.norm();
    if (scale > 0.0) worst = std::max(worst, r.norm() / scale);
  }
  return worst;
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "k,f,grad_norm,step_norm\n";
  for (std::size_t k = 0; k < trace.f.size(); ++k) {
    os << k << ',' << format_double(trace.f[k]) << ',' << format_double(trace.grad_norm[k]) << ',';
    if (k < trace.step_norm.size()) os << format_double(trace.step_norm[k]);
    os << '\n';
  }
}

namespace {

nlohmann::json vectors_to_json(const std::vector<Vector>& vs) {
  auto arr = nlohmann::json::array();
  for (const auto& v : vs) arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return arr;
}

std::vector<Vector> vectors_from_json(const nlohmann::json& j) {
  std::vector<Vector> out;
  for (const auto& row : j) {
    const auto values = row.get<std::vector<double>>();
    out.emplace_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const MomentumParams& params) {
  j = {{"alpha", params.alpha},
       {"beta", params.beta},
       {"gamma", params.gamma},
       {"delta", params.delta},
       {"preset", std::string(preset_name(params.preset))}};
}

void from_json(const nlohmann::json& j, MomentumParams& params) {
  params.alpha = j.at("alpha").get<double>();
  params.beta = j.at("beta").get<double>();
  params.gamma = j.at("gamma").get<double>();
  params.delta = j.value("delta", 0.0);
  params.preset = parse_preset(j.value("preset", std::string("generic")));
}

void to_json(nlohmann::json& j, const Trace& trace) {
  j = {{"params", trace.params},
       {"stop", std::string(stop_reason_name(trace.stop))},
       {"delta_violation", trace.delta_violation},
       {"points", vectors_to_json(trace.points)},
       {"f", trace.f},
       {"grad_norm", trace.grad_norm},
       {"step_norm", trace.step_norm},
       {"y_beta", vectors_to_json(trace.y_beta)},
       {"y_gamma", vectors_to_json(trace.y_gamma)}};
}

void from_json(const nlohmann::json& j, Trace& trace) {
  trace.params = j.at("params").get<MomentumParams>();
  trace.stop = parse_stop_reason(j.at("stop").get<std::string>());
  trace.delta_violation = j.value("delta_violation", false);
  trace.points = vectors_from_json(j.at("points"));
  trace.f = j.at("f").get<std::vector<double>>();
  trace.grad_norm = j.at("grad_norm").get<std::vector<double>>();
  trace.step_norm = j.at("step_norm").get<std::vector<double>>();
  trace.y_beta = vectors_from_json(j.at("y_beta"));
  trace.y_gamma = vectors_from_json(j.at("y_gamma"));
  if (trace.points.size() < 2 || trace.f.size() + 1 != trace.points.size() ||
      trace.grad_norm.size() != trace.f.size() || trace.step_norm.size() + 1 != trace.f.size() ||
      trace.y_beta.size() != trace.step_norm.size() || trace.y_gamma.size() != trace.step_norm.size()) {
    throw DimensionError("trace JSON has inconsistent array lengths");
  }
}

}  // namespace momentum
