#pragma once
// Closed-form constants for the momentum method and per-step checks of the
// inequalities they certify.
//
//   H_lambda(x, y) = f(x) + lambda ||x - y||^2,   z_k = (x_k, x_{k-1})

#include <string>
#include <vector>

#include <json.hpp>

#include "momentum/desingularizer.hpp"
#include "momentum/optimizer.hpp"
#include "momentum/problems.hpp"

namespace momentum {

double lyapunov(const Problem& p, const Vector& x, const Vector& y, double lambda);
double lyapunov(double fx, const Vector& x, const Vector& y, double lambda);

// (grad f(x) + 2 lambda (x - y), 2 lambda (y - x)), stacked.
Vector lyapunov_gradient(const Vector& grad_fx, const Vector& x, const Vector& y, double lambda);

struct LyapunovInterval {
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double lambda_mid = 0.0;
  double c1 = 0.0;  // min{lambda_mid - lambda_minus, lambda_plus - lambda_mid}
};

// Requires alpha <= safe_alpha(M, params); the error names the bound that fails.
LyapunovInterval lyapunov_interval(double M, const MomentumParams& params);
// Same formulas with no step-size check; c1 may come out negative.
LyapunovInterval lyapunov_interval_unchecked(double M, const MomentumParams& params);

// sqrt(2) max{1/alpha, |beta|/alpha + M |gamma|}
double gradient_bound_b(double M, const MomentumParams& params);
// sqrt(2) max{1/alpha, |beta|/alpha + M (|gamma| + 1) + 4 lambda}
double gradient_bound_c2(double M, const MomentumParams& params, double lambda);

// delta_0 + L / (1 - beta), with delta_0 = params.delta and L a gradient-norm
// bound of f (not of f / (1 - beta)).
double step_bound_delta1(double L, const MomentumParams& params);

struct LengthConstants {
  double c3 = 0.0;
  double zeta = 0.0;
  double eta = 0.0;
  double kappa = 0.0;
};

// c3 = 8 sqrt(2) (2 + |gamma| + 3 |beta|) / (1 - beta^2)
// zeta = 2 sqrt(2) (delta + L / (1 - beta))
// eta = 2 m delta^2 (beta^2 + 1 + M beta^2) / 4,  kappa = 2 m zeta
LengthConstants length_constants(double M, double L, const MomentumParams& params, int m);

struct Certificate {
  double M = 0.0;
  double L = 0.0;
  MomentumParams params;
  int m = 1;

  // Iterates are certified while they stay in B(center, radius). M and L hold
  // on B(center, lipschitz_radius) which contains the enlarged set.
  Vector center;
  double radius = 0.0;
  double lipschitz_radius = 0.0;

  double alpha_bar = 0.0;
  bool alpha_admissible = false;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double lambda = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double zeta = 0.0;
  double eta = 0.0;
  double kappa = 0.0;
  double b_alpha = 0.0;
  double delta1 = 0.0;
};

Certificate make_certificate(const LipschitzBounds& bounds, const MomentumParams& params, int m,
                             const Vector& center, double radius);

enum class StepStatus { pass, fail, uncertified };

std::string_view step_status_name(StepStatus status);

struct StepCheck {
  long k = 0;
  double slack = 0.0;
  StepStatus status = StepStatus::pass;
};

struct CheckReport {
  std::string name;
  std::vector<StepCheck> steps;
  long passed = 0;
  long failed = 0;
  long uncertified = 0;
  double min_slack = 0.0;
  long first_failure = -1;

  bool ok() const { return failed == 0; }
  void add(long k, double slack, bool pass, bool certified);
};

// H_lambda(z_k) - H_lambda(z_{k+1}) - c1 (||x_{k+1} - x_k||^2 + ||x_k - x_{k-1}||^2)
// for k = 0..K-1, passing at >= -1e-9 (1 + |H_lambda(z_k)|).
CheckReport check_descent(const Trace& trace, const Certificate& cert);

struct GradientBoundReport {
  CheckReport b_alpha;  // ||grad f(x_k)|| <= b_alpha ||z_{k+1} - z_k||
  CheckReport c2;       // max{||grad H(z_k)||, ||grad H(z_{k+1})||} <= c2 ||z_{k+1} - z_k||
  bool ok() const { return b_alpha.ok() && c2.ok(); }
};

GradientBoundReport check_gradient_bound(const Problem& p, const Trace& trace,
                                         const Certificate& cert);

struct StepBoundReport {
  CheckReport velocity;   // ||x_k - x_{k-1}|| <= delta1 alpha, k = 0..K
  CheckReport pair;       // ||z_k - z_{k-1}|| <= sqrt(2) delta1 alpha, k = 1..K
  CheckReport geometric;  // ||x_{k+1} - x_k|| <= (delta_0 |beta|^{k+1} + L / (1 - beta)) alpha
  bool ok() const { return velocity.ok() && pair.ok() && geometric.ok(); }
};

StepBoundReport check_step_bound(const Trace& trace, const Certificate& cert);

struct LengthReport {
  double length = 0.0;
  double gap = 0.0;  // f(x_0) - f(x_K)
  // psi_H(t) = 2 c3 m psi(t / (2 m)), the rescaling that carries psi over to H_lambda.
  double bound = 0.0;
  double ratio = 0.0;
  // The same inequality with psi used as given.
  double direct_bound = 0.0;
  double direct_ratio = 0.0;
  bool rescaled = true;
  bool pass = false;
};

LengthReport check_length_formula(const Trace& trace, const Certificate& cert,
                                  const Desingularizer& psi, bool rescale = true);

void to_json(nlohmann::json& j, const Certificate& cert);
void to_json(nlohmann::json& j, const CheckReport& report);
void to_json(nlohmann::json& j, const LengthReport& report);

}  // namespace momentum
