#pragma once
// Constant-momentum gradient method
//
//   x_{k+1} = x_k + beta (x_k - x_{k-1}) - alpha grad f(x_k + gamma (x_k - x_{k-1}))
//
// evaluated in three stages: y_beta = x_k + beta (x_k - x_{k-1}),
// y_gamma = x_k + gamma (x_k - x_{k-1}), x_{k+1} = y_beta - alpha grad f(y_gamma).

#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "momentum/common.hpp"
#include "momentum/problems.hpp"

namespace momentum {

enum class Preset { generic, heavy_ball, nesterov };

std::string_view preset_name(Preset preset);
Preset parse_preset(std::string_view name);

struct MomentumParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  // Initial-velocity bound: ||x_0 - x_{-1}|| <= delta * alpha.
  double delta = 0.0;
  Preset preset = Preset::generic;

  static MomentumParams generic(double alpha, double beta, double gamma, double delta = 0.0);
  static MomentumParams heavy_ball(double alpha, double beta, double delta = 0.0);  // gamma = 0
  static MomentumParams nesterov(double alpha, double beta, double delta = 0.0);    // gamma = beta

  // alpha > 0, |beta| < 1, delta >= 0, finite gamma, preset consistent with gamma.
  void validate() const;
};

struct StepResult {
  Vector x_next;
  Vector y_beta;
  Vector y_gamma;
  Vector grad_y_gamma;
  bool finite = true;
};

StepResult step(const Problem& p, const Vector& x_prev, const Vector& x_curr,
                const MomentumParams& params);

// min{1/M, (1 - beta^2) / (2 (beta^2 + 2|beta - gamma|) M)}; 1/M when beta = gamma = 0.
double safe_alpha(double M, const MomentumParams& params);
double safe_alpha(double M, double beta, double gamma);

struct StopRules {
  long max_iters = 10000;
  double grad_tol = 1e-10;
  // Stop once an iterate leaves B(x_0, box_radius).
  double box_radius = std::numeric_limits<double>::infinity();
};

enum class StopReason { max_iters, grad_tol, diverged, left_box };

std::string_view stop_reason_name(StopReason reason);
StopReason parse_stop_reason(std::string_view name);

struct Trace {
  // points[0] = x_{-1}, points[k + 1] = x_k for k = 0..K.
  std::vector<Vector> points;
  std::vector<double> f;          // f(x_k), k = 0..K
  std::vector<double> grad_norm;  // ||grad f(x_k)||, k = 0..K
  std::vector<double> step_norm;  // ||x_{k+1} - x_k||, k = 0..K-1
  std::vector<Vector> y_beta;     // k = 0..K-1
  std::vector<Vector> y_gamma;    // k = 0..K-1
  MomentumParams params;
  StopReason stop = StopReason::max_iters;
  bool delta_violation = false;

  // Index K of the last iterate.
  long last() const { return static_cast<long>(points.size()) - 2; }
  const Vector& x(long k) const { return points.at(static_cast<std::size_t>(k + 1)); }
};

Trace run(const Problem& p, const Vector& x_minus1, const Vector& x0, const MomentumParams& params,
          const StopRules& stop = {});

// Largest relative residual of the update rule over all stored steps, with
// the gradient re-evaluated at y_gamma.
double replay_residual(const Problem& p, const Trace& trace);

// k,f,grad_norm,step_norm with an empty step_norm on the final row.
void write_trace_csv(std::ostream& os, const Trace& trace);

void to_json(nlohmann::json& j, const MomentumParams& params);
void from_json(const nlohmann::json& j, MomentumParams& params);
void to_json(nlohmann::json& j, const Trace& trace);
void from_json(const nlohmann::json& j, Trace& trace);

}  // namespace momentum
