#include "momentum/certificates.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "momentum/kernels.hpp"

namespace momentum {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kRelTol = 1e-9;

bool inside(const Vector& x, const Certificate& cert) {
  return kernels::distance(view(x), view(cert.center)) <= cert.radius * (1.0 + 1e-12);
}

// Index of the first iterate x_j (j >= -1) outside the certified ball, or last() + 1.
long first_exit(const Trace& trace, const Certificate& cert) {
  for (long j = -1; j <= trace.last(); ++j) {
    if (!inside(trace.x(j), cert)) return j;
  }
  return trace.last() + 1;
}

CheckReport make_report(std::string name) {
  CheckReport r;
  r.name = std::move(name);
  r.min_slack = std::numeric_limits<double>::infinity();
  return r;
}

void finish(CheckReport& r) {
  if (r.passed + r.failed == 0) r.min_slack = 0.0;
}

}  // namespace

double lyapunov(double fx, const Vector& x, const Vector& y, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("lyapunov: lambda must be positive");
  return fx + lambda * kernels::squared_distance(view(x), view(y));
}

double lyapunov(const Problem& p, const Vector& x, const Vector& y, double lambda) {
  return lyapunov(p.value(x), x, y, lambda);
}

Vector lyapunov_gradient(const Vector& grad_fx, const Vector& x, const Vector& y, double lambda) {
  const auto n = x.size();
  Vector g(2 * n);
  g.head(n) = grad_fx + 2.0 * lambda * (x - y);
  g.tail(n) = 2.0 * lambda * (y - x);
  return g;
}

LyapunovInterval lyapunov_interval_unchecked(double M, const MomentumParams& prm) {
  const double a = prm.alpha;
  const double b2 = prm.beta * prm.beta;
  const double gap = std::abs(prm.beta - prm.gamma);
  LyapunovInterval iv;
  iv.lambda_minus = (1.0 / (2.0 * a) + M / 2.0) * b2 + gap * M / 2.0;
  iv.lambda_plus = 1.0 / (2.0 * a) - gap * M / 2.0;
  iv.lambda_mid = (b2 + 1.0 + M * b2 * a) / (4.0 * a);
  iv.c1 = std::min(iv.lambda_mid - iv.lambda_minus, iv.lambda_plus - iv.lambda_mid);
  return iv;
}

LyapunovInterval lyapunov_interval(double M, const MomentumParams& prm) {
  prm.validate();
  if (!(M > 0.0)) throw DomainError("lyapunov_interval: M must be positive");
  const double first = 1.0 / M;
  if (prm.alpha > first) {
    std::ostringstream os;
    os << "alpha = " << prm.alpha << " exceeds 1/M = " << first;
    throw DomainError(os.str());
  }
  const double denom = prm.beta * prm.beta + 2.0 * std::abs(prm.beta - prm.gamma);
  if (denom > 0.0) {
    const double second = (1.0 - prm.beta * prm.beta) / (2.0 * denom * M);
    if (prm.alpha > second) {
      std::ostringstream os;
      os << "alpha = " << prm.alpha << " exceeds (1 - beta^2) / (2 (beta^2 + 2|beta - gamma|) M) = "
         << second;
      throw DomainError(os.str());
    }
  }
  return lyapunov_interval_unchecked(M, prm);
}

double gradient_bound_b(double M, const MomentumParams& prm) {
  return kSqrt2 * std::max(1.0 / prm.alpha,
                           std::abs(prm.beta) / prm.alpha + M * std::abs(prm.gamma));
}

double gradient_bound_c2(double M, const MomentumParams& prm, double lambda) {
  return kSqrt2 * std::max(1.0 / prm.alpha, std::abs(prm.beta) / prm.alpha +
                                                M * (std::abs(prm.gamma) + 1.0) + 4.0 * lambda);
}

double step_bound_delta1(double L, const MomentumParams& prm) {
  return prm.delta + L / (1.0 - prm.beta);
}

LengthConstants length_constants(double M, double L, const MomentumParams& prm, int m) {
  if (m < 1) throw DomainError("length_constants: m must be >= 1");
  const double b = std::abs(prm.beta);
  const double b2 = prm.beta * prm.beta;
  LengthConstants lc;
  lc.c3 = 8.0 * kSqrt2 * (2.0 + std::abs(prm.gamma) + 3.0 * b) / (1.0 - b2);
  lc.zeta = 2.0 * kSqrt2 * (prm.delta + L / (1.0 - prm.beta));
  lc.eta = 2.0 * m * prm.delta * prm.delta * (b2 + 1.0 + M * b2) / 4.0;
  lc.kappa = 2.0 * m * lc.zeta;
  return lc;
}

Certificate make_certificate(const LipschitzBounds& bounds, const MomentumParams& params, int m,
                             const Vector& center, double radius) {
  params.validate();
  if (!(radius > 0.0)) throw DomainError("make_certificate: radius must be positive");
  Certificate c;
  c.M = bounds.M;
  c.L = bounds.L;
  c.params = params;
  c.m = m;
  c.center = center;
  c.radius = radius;
  c.lipschitz_radius = bounds.radius;
  c.alpha_bar = safe_alpha(bounds.M, params);
  c.alpha_admissible = params.alpha <= c.alpha_bar;
  const auto iv = lyapunov_interval_unchecked(bounds.M, params);
  c.lambda_minus = iv.lambda_minus;
  c.lambda_plus = iv.lambda_plus;
  c.lambda = iv.lambda_mid;
  c.c1 = iv.c1;
  c.c2 = gradient_bound_c2(bounds.M, params, c.lambda);
  const auto lc = length_constants(bounds.M, bounds.L, params, m);
  c.c3 = lc.c3;
  c.zeta = lc.zeta;
  c.eta = lc.eta;
  c.kappa = lc.kappa;
  c.b_alpha = gradient_bound_b(bounds.M, params);
  c.delta1 = step_bound_delta1(bounds.L, params);
  return c;
}

std::string_view step_status_name(StepStatus status) {
  switch (status) {
    case StepStatus::pass:
      return "pass";
    case StepStatus::fail:
      return "fail";
    case StepStatus::uncertified:
      return "uncertified";
  }
  return "pass";
}

void CheckReport::add(long k, double slack, bool pass, bool certified) {
  StepStatus status = StepStatus::uncertified;
  if (certified) status = pass ? StepStatus::pass : StepStatus::fail;
  steps.push_back({k, slack, status});
  switch (status) {
    case StepStatus::pass:
      ++passed;
      break;
    case StepStatus::fail:
      ++failed;
      if (first_failure < 0) first_failure = k;
      break;
    case StepStatus::uncertified:
      ++uncertified;
      break;
  }
  if (certified) min_slack = std::min(min_slack, slack);
}

CheckReport check_descent(const Trace& trace, const Certificate& cert) {
  CheckReport r = make_report("descent");
  const long exit = first_exit(trace, cert);
  const double lambda = cert.lambda;
  for (long k = 0; k < trace.last(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double d_prev = kernels::squared_distance(view(trace.x(k)), view(trace.x(k - 1)));
    const double d_next = kernels::squared_distance(view(trace.x(k + 1)), view(trace.x(k)));
    const double h_now = trace.f[ku] + lambda * d_prev;
    const double h_next = trace.f[ku + 1] + lambda * d_next;
    const double slack = h_now - h_next - cert.c1 * (d_next + d_prev);
    r.add(k, slack, slack >= -kRelTol * (1.0 + std::abs(h_now)), k + 1 < exit);
  }
  finish(r);
  return r;
}

GradientBoundReport check_gradient_bound(const Problem& p, const Trace& trace,
                                         const Certificate& cert) {
  GradientBoundReport r{make_report("gradient_bound_b_alpha"), make_report("gradient_bound_c2")};
  const long exit = first_exit(trace, cert);
  const double lambda = cert.lambda;
  if (trace.last() < 1) {
    finish(r.b_alpha);
    finish(r.c2);
    return r;
  }
  Vector g_now = p.gradient(trace.x(0));
  for (long k = 0; k < trace.last(); ++k) {
    const Vector g_next = p.gradient(trace.x(k + 1));
    const double d_prev = kernels::squared_distance(view(trace.x(k)), view(trace.x(k - 1)));
    const double d_next = kernels::squared_distance(view(trace.x(k + 1)), view(trace.x(k)));
    const double dz = std::sqrt(d_prev + d_next);
    const bool certified = k + 1 < exit;

    const double gn = g_now.norm();
    const double slack_b = cert.b_alpha * dz - gn;
    r.b_alpha.add(k, slack_b, slack_b >= -kRelTol * (1.0 + gn), certified);

    const double h_now = lyapunov_gradient(g_now, trace.x(k), trace.x(k - 1), lambda).norm();
    const double h_next = lyapunov_gradient(g_next, trace.x(k + 1), trace.x(k), lambda).norm();
    const double worst = std::max(h_now, h_next);
    const double slack_c = cert.c2 * dz - worst;
    r.c2.add(k, slack_c, slack_c >= -kRelTol * (1.0 + worst), certified);

    g_now = g_next;
  }
  finish(r.b_alpha);
  finish(r.c2);
  return r;
}

StepBoundReport check_step_bound(const Trace& trace, const Certificate& cert) {
  StepBoundReport r{make_report("velocity"), make_report("pair_velocity"),
                    make_report("geometric_velocity")};
  const long exit = first_exit(trace, cert);
  const auto& prm = trace.params;
  const double cap = cert.delta1 * prm.alpha;
  // Certification needs x_{-1}, ..., x_{k-1} in the ball.
  for (long k = 0; k <= trace.last(); ++k) {
    const double v = kernels::distance(view(trace.x(k)), view(trace.x(k - 1)));
    const double slack = cap - v;
    r.velocity.add(k, slack, slack >= -kRelTol * (1.0 + cap), k <= exit);
  }
  for (long k = 1; k <= trace.last(); ++k) {
    const double dz = std::sqrt(kernels::squared_distance(view(trace.x(k)), view(trace.x(k - 1))) +
                                kernels::squared_distance(view(trace.x(k - 1)), view(trace.x(k - 2))));
    const double slack = kSqrt2 * cap - dz;
    r.pair.add(k, slack, slack >= -kRelTol * (1.0 + cap), k <= exit);
  }
  const double drift = cert.L / (1.0 - prm.beta);
  double beta_pow = std::abs(prm.beta);
  for (long k = 0; k < trace.last(); ++k) {
    const double bound = (prm.delta * beta_pow + drift) * prm.alpha;
    const double slack = bound - trace.step_norm[static_cast<std::size_t>(k)];
    r.geometric.add(k, slack, slack >= -kRelTol * (1.0 + bound), k + 1 <= exit);
    beta_pow *= std::abs(prm.beta);
  }
  finish(r.velocity);
  finish(r.pair);
  finish(r.geometric);
  return r;
}

LengthReport check_length_formula(const Trace& trace, const Certificate& cert,
                                  const Desingularizer& psi, bool rescale) {
  psi.validate();
  LengthReport r;
  r.rescaled = rescale;
  for (double s : trace.step_norm) r.length += s;
  r.gap = trace.f.front() - trace.f.back();
  const double alpha = trace.params.alpha;
  const double t = std::max(0.0, r.gap + cert.eta * alpha);
  const double m2 = 2.0 * cert.m;
  r.bound = m2 * cert.c3 * psi(t / m2) + cert.kappa * alpha;
  r.direct_bound = psi(t) + cert.kappa * alpha;
  r.ratio = r.bound > 0.0 ? r.length / r.bound : 0.0;
  r.direct_ratio = r.direct_bound > 0.0 ? r.length / r.direct_bound : 0.0;
  r.pass = r.length <= (rescale ? r.bound : r.direct_bound);
  return r;
}

void to_json(nlohmann::json& j, const Certificate& c) {
  j = {{"M", c.M},
       {"L", c.L},
       {"params", c.params},
       {"m", c.m},
       {"radius", c.radius},
       {"lipschitz_radius", c.lipschitz_radius},
       {"alpha_bar", c.alpha_bar},
       {"alpha_admissible", c.alpha_admissible},
       {"lambda_minus", c.lambda_minus},
       {"lambda_plus", c.lambda_plus},
       {"lambda", c.lambda},
       {"c1", c.c1},
       {"c2", c.c2},
       {"c3", c.c3},
       {"zeta", c.zeta},
       {"eta", c.eta},
       {"kappa", c.kappa},
       {"b_alpha", c.b_alpha},
       {"delta1", c.delta1}};
}

void to_json(nlohmann::json& j, const CheckReport& r) {
  auto steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"k", s.k}, {"slack", s.slack}, {"status", std::string(step_status_name(s.status))}});
  }
  j = {{"name", r.name},
       {"passed", r.passed},
       {"failed", r.failed},
       {"uncertified", r.uncertified},
       {"min_slack", r.min_slack},
       {"first_failure", r.first_failure},
       {"steps", std::move(steps)}};
}

void to_json(nlohmann::json& j, const LengthReport& r) {
  j = {{"length", r.length},     {"gap", r.gap},
       {"bound", r.bound},       {"ratio", r.ratio},
       {"direct_bound", r.direct_bound}, {"direct_ratio", r.direct_ratio},
       {"rescaled", r.rescaled}, {"pass", r.pass}};
}

}  // namespace momentum
