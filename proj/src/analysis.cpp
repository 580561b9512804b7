#include "momentum/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace momentum {

Desingularizer fit_desingularizer(const std::vector<double>& f, const std::vector<double>& grad_norm,
                                  const FitOptions& options) {
  if (f.size() != grad_norm.size()) {
    throw DimensionError("fit_desingularizer: value and gradient series differ in length");
  }
  if (f.empty()) throw DomainError("fit_desingularizer: no samples");
  double f_star = 0.0;
  if (options.f_star) {
    f_star = *options.f_star;
  } else {
    const std::size_t tail = std::min<std::size_t>(10, f.size());
    f_star = *std::min_element(f.end() - static_cast<std::ptrdiff_t>(tail), f.end());
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::vector<double> lx, ly;
  double gap_min = std::numeric_limits<double>::infinity(), gap_max = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double gap = f[i] - f_star;
    const double floor = std::max(1e-13, 100.0 * eps * (1.0 + std::abs(f[i])));
    if (!(gap > floor) || gap > options.gap_max || !(grad_norm[i] > 0.0)) continue;
    if (!std::isfinite(gap) || !std::isfinite(grad_norm[i])) continue;
    lx.push_back(std::log(gap));
    ly.push_back(std::log(grad_norm[i]));
    gap_min = std::min(gap_min, gap);
    gap_max = std::max(gap_max, gap);
  }
  if (lx.size() < options.min_samples) {
    std::ostringstream os;
    os << "fit_desingularizer: " << lx.size() << " usable samples above the noise floor, need "
       << options.min_samples;
    throw DomainError(os.str());
  }

  const auto n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_desingularizer: all samples share one gap value");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  Desingularizer d;
  d.theta = std::clamp(1.0 - slope, 1e-6, 1.0);
  d.c = std::exp(-intercept) / d.theta;
  d.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  d.samples = lx.size();
  d.gap_min = gap_min;
  d.gap_max = gap_max;
  d.f_star = f_star;
  d.source = "fit";
  // psi'(gap) ||grad f|| >= 1 on every sample once inflated.
  double inflation = 1.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double lhs = std::log(d.c * d.theta) + (d.theta - 1.0) * lx[i] + ly[i];
    inflation = std::max(inflation, std::exp(-lhs));
  }
  d.inflation = inflation;
  return d;
}

Desingularizer fit_desingularizer(const Trace& trace, const FitOptions& options) {
  auto d = fit_desingularizer(trace.f, trace.grad_norm, options);
  d.source = "trace";
  return d;
}

Desingularizer fit_desingularizer(const FlowTrajectory& flow, const FitOptions& options) {
  std::vector<double> g(flow.f.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = flow.grad_norm(i);
  auto d = fit_desingularizer(flow.f, g, options);
  d.source = "flow";
  return d;
}

LengthMeasure measure_length(const Trace& trace) {
  LengthMeasure m;
  m.partial.reserve(trace.step_norm.size());
  for (double s : trace.step_norm) {
    m.total += s;
    m.partial.push_back(m.total);
  }
  return m;
}

RateReport check_rate(const Trace& trace, const Certificate& cert, double length_c) {
  if (!(length_c >= 0.0)) throw DomainError("check_rate: length must be >= 0");
  RateReport r;
  r.length_c = length_c;
  r.c_alpha = cert.b_alpha * (trace.params.delta * trace.params.alpha + 2.0 * length_c);
  double running_min = std::numeric_limits<double>::infinity();
  double running_sum = 0.0;
  for (std::size_t k = 0; k < trace.grad_norm.size(); ++k) {
    running_min = std::min(running_min, trace.grad_norm[k]);
    running_sum += trace.grad_norm[k];
    const double prod = static_cast<double>(k + 1) * running_min;
    r.products.push_back(prod);
    r.sup = std::max(r.sup, prod);
    if (prod > running_sum * (1.0 + 1e-12)) ++r.telescoping_failures;
  }
  r.pass = r.sup <= r.c_alpha * (1.0 + 1e-9);
  return r;
}

void to_json(nlohmann::json& j, const Desingularizer& d) {
  j = {{"form", "c * t^theta"},
       {"c", d.c},
       {"theta", d.theta},
       {"inflation", d.inflation},
       {"r_squared", d.r_squared},
       {"samples", d.samples},
       {"gap_min", d.gap_min},
       {"gap_max", d.gap_max},
       {"f_star", d.f_star},
       {"source", d.source},
       {"empirical", d.source != "analytic"}};
}

void to_json(nlohmann::json& j, const RateReport& r) {
  j = {{"length_c", r.length_c},
       {"c_alpha", r.c_alpha},
       {"sup", r.sup},
       {"pass", r.pass},
       {"telescoping_failures", r.telescoping_failures}};
}

}  // namespace momentum
