#pragma once
// Post-hoc trace analytics: empirical desingularizer fits, the O(1/k) rate
// check on the smallest gradient seen so far, and path lengths.

#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "momentum/certificates.hpp"
#include "momentum/desingularizer.hpp"
#include "momentum/gradient_flow.hpp"
#include "momentum/optimizer.hpp"

namespace momentum {

struct FitOptions {
  // Limiting value; defaults to the smallest of the last 10 values.
  std::optional<double> f_star;
  double gap_max = std::numeric_limits<double>::infinity();
  std::size_t min_samples = 20;
};

// Fits ||grad f|| = (c theta)^{-1} (f - f*)^{1 - theta} in log-log form.
// Samples with f - f* below max(1e-13, 100 eps (1 + |f|)) are dropped. Throws
// DomainError when fewer than min_samples remain.
Desingularizer fit_desingularizer(const std::vector<double>& f, const std::vector<double>& grad_norm,
                                  const FitOptions& options = {});
Desingularizer fit_desingularizer(const Trace& trace, const FitOptions& options = {});
Desingularizer fit_desingularizer(const FlowTrajectory& flow, const FitOptions& options = {});

struct LengthMeasure {
  double total = 0.0;
  std::vector<double> partial;  // partial[k] = sum_{i <= k} ||x_{i+1} - x_i||
};

LengthMeasure measure_length(const Trace& trace);

struct RateReport {
  std::vector<double> products;  // (k + 1) min_{i <= k} ||grad f(x_i)||
  double length_c = 0.0;
  double c_alpha = 0.0;          // b_alpha (delta_0 alpha + 2 c)
  double sup = 0.0;
  bool pass = false;
  // (k + 1) min_{i <= k} ||grad f(x_i)|| <= sum_{i <= k} ||grad f(x_i)||
  long telescoping_failures = 0;
};

RateReport check_rate(const Trace& trace, const Certificate& cert, double length_c);

void to_json(nlohmann::json& j, const Desingularizer& psi);
void to_json(nlohmann::json& j, const RateReport& report);

}  // namespace momentum
