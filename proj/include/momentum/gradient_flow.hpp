#pragma once
// Rescaled gradient flow x'(t) = -grad f(x(t)) / (1 - beta) and how closely
// the momentum iterates follow it.

#include <iosfwd>
#include <limits>
#include <string_view>
#include <vector>

#include "momentum/optimizer.hpp"
#include "momentum/problems.hpp"

namespace momentum {

struct FlowOptions {
  double horizon = std::numeric_limits<double>::infinity();
  // Stop once ||grad f|| < grad_tol; 0 disables.
  double grad_tol = 0.0;
  double rtol = 1e-10;
  double atol = 1e-12;
  long max_steps = 2'000'000;
  // Accepted steps are clipped to land on each of these times exactly.
  std::vector<double> output_times;
};

enum class FlowStop { grad_tol, horizon, failed };

std::string_view flow_stop_name(FlowStop stop);

struct FlowTrajectory {
  double beta = 0.0;
  // One entry per accepted step, starting at t = 0.
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> velocities;  // x'(t_i)
  std::vector<double> f;
  std::vector<double> arc_length;  // running chord sum
  FlowStop terminated = FlowStop::horizon;
  std::string failure;

  double end_time() const { return times.back(); }
  double length() const { return arc_length.back(); }
  // Cubic Hermite interpolation between accepted steps; t must lie in [0, end_time()].
  Vector at(double t) const;
  double grad_norm(std::size_t i) const { return (1.0 - beta) * velocities[i].norm(); }
};

// Embedded Runge-Kutta 5(4) (Dormand-Prince) with step control on the mixed
// error norm atol + rtol |x|. Needs a finite horizon or a positive grad_tol.
FlowTrajectory integrate_flow(const Problem& p, const Vector& x0, double beta,
                              const FlowOptions& options);

// Relative defect of f(x(0)) - f(x(T)) = (1 - beta) int_0^T ||x'||^2 dt, with
// the integral from 3-point Gauss quadrature on every step.
double energy_defect(const Problem& p, const FlowTrajectory& flow);

struct LengthEstimate {
  double sigma = 0.0;              // max over samples
  std::vector<double> lengths;     // per sample
  std::vector<bool> reached_tol;   // false: horizon ran out, length is a lower bound
  bool lower_bound_only = false;
};

LengthEstimate trajectory_length(const Problem& p, const std::vector<Vector>& samples, double beta,
                                 double grad_tol, double horizon = 1e4, std::size_t workers = 1);

struct TrackingReport {
  double alpha = 0.0;
  double horizon = 0.0;
  std::vector<double> errors;  // ||x_k - x(k alpha)||, k = 0..floor(T / alpha)
  double max_error = 0.0;
  // False when the trace stopped before floor(T / alpha).
  bool complete = true;
};

TrackingReport tracking_error(const Problem& p, const Trace& trace, double horizon);

// x_{-1} = x_0 + alpha grad f(x_0) / (1 - beta): the initial velocity of the
// rescaled flow, so that the iterates start tangent to it.
Vector flow_matched_start(const Problem& p, const Vector& x0, const MomentumParams& params);

struct TrackingConstants {
  // ||P^{-1} z|| between p1 ||z|| and p2 ||z||, ||P^{-1} X P|| <= p3 ||X||, with
  // P the unit-column eigenvector matrix of [[1 + beta, -beta], [1, 0]].
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double eig_one = 1.0;
  double eig_beta = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  double alpha_bar = 0.0;
};

// M and L are Lipschitz constants of grad f / (1 - beta) and f / (1 - beta).
// Requires epsilon in (0, delta + 1].
TrackingConstants tracking_constants(double M, double L, const MomentumParams& params, double T,
                                     double delta, double epsilon);

// t,f,grad_norm,arc_length
void write_flow_csv(std::ostream& os, const FlowTrajectory& flow);

}  // namespace momentum
