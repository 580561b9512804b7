#include "momentum/gradient_flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "momentum/kernels.hpp"

namespace momentum {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

class Field {
 public:
  Field(const Problem& p, double beta) : p_(p), scale_(-1.0 / (1.0 - beta)) {}
  Vector operator()(const Vector& x) const { return scale_ * p_.gradient(x); }

 private:
  const Problem& p_;
  double scale_;
};

double error_norm(const Vector& err, const Vector& x, const Vector& x_new, double atol,
                  double rtol) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(x[i]), std::abs(x_new[i]));
    const double r = err[i] / sc;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
}

double initial_step(const Vector& x, const Vector& k1, double atol, double rtol) {
  const Vector zero = Vector::Zero(x.size());
  const double d0 = error_norm(x, x, zero, atol, rtol);
  const double d1 = error_norm(k1, x, zero, atol, rtol);
  if (d0 < 1e-5 || d1 < 1e-5) return 1e-6;
  return 0.01 * d0 / d1;
}

}  // namespace

std::string_view flow_stop_name(FlowStop stop) {
  switch (stop) {
    case FlowStop::grad_tol:
      return "grad_tol";
    case FlowStop::horizon:
      return "horizon";
    case FlowStop::failed:
      return "failed";
  }
  return "horizon";
}

Vector FlowTrajectory::at(double t) const {
  if (times.empty()) throw Error("empty flow trajectory");
  if (t < 0.0 || t > times.back()) throw DomainError("flow time outside the integrated range");
  auto it = std::lower_bound(times.begin(), times.end(), t);
  auto i = static_cast<std::size_t>(it - times.begin());
  if (i < times.size() && times[i] == t) return states[i];
  const std::size_t j = i - 1;
  const double h = times[i] - times[j];
  const double s = (t - times[j]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
               h11 = s3 - s2;
  return h00 * states[j] + (h10 * h) * velocities[j] + h01 * states[i] + (h11 * h) * velocities[i];
}

FlowTrajectory integrate_flow(const Problem& p, const Vector& x0, double beta,
                              const FlowOptions& opt) {
  if (!(std::abs(beta) < 1.0)) throw DomainError("integrate_flow: beta must lie in (-1, 1)");
  if (!(opt.horizon > 0.0)) throw DomainError("integrate_flow: horizon must be positive");
  if (!std::isfinite(opt.horizon) && !(opt.grad_tol > 0.0)) {
    throw DomainError("integrate_flow: need a finite horizon or a positive grad_tol");
  }
  if (static_cast<std::size_t>(x0.size()) != p.dim()) {
    throw DimensionError("integrate_flow: start point has wrong length");
  }
  std::vector<double> targets = opt.output_times;
  std::sort(targets.begin(), targets.end());
  if (std::isfinite(opt.horizon)) targets.push_back(opt.horizon);
  std::size_t next_target = 0;
  while (next_target < targets.size() && targets[next_target] <= 0.0) ++next_target;

  const Field field(p, beta);
  FlowTrajectory traj;
  traj.beta = beta;
  Vector x = x0;
  Vector k1 = field(x);
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(x);
  traj.velocities.push_back(k1);
  traj.f.push_back(p.value(x));
  traj.arc_length.push_back(0.0);
  if (!k1.allFinite() || !std::isfinite(traj.f.back())) {
    traj.terminated = FlowStop::failed;
    traj.failure = "non-finite gradient at the start point";
    return traj;
  }
  auto below_tol = [&](const Vector& v) {
    return opt.grad_tol > 0.0 && (1.0 - beta) * v.norm() < opt.grad_tol;
  };
  if (below_tol(k1)) {
    traj.terminated = FlowStop::grad_tol;
    return traj;
  }

  double h = initial_step(x, k1, opt.atol, opt.rtol);
  for (long steps = 0;; ++steps) {
    if (steps >= opt.max_steps) {
      traj.terminated = FlowStop::failed;
      traj.failure = "step budget exhausted";
      return traj;
    }
    const double horizon_left = opt.horizon - t;
    if (horizon_left <= 0.0) {
      traj.terminated = FlowStop::horizon;
      return traj;
    }
    const double h_try = h;
    bool clipped = false;
    double target = 0.0;
    if (next_target < targets.size() && t + h >= targets[next_target]) {
      target = targets[next_target];
      h = target - t;
      clipped = true;
    }

    const Vector k2 = field(x + h * (a21 * k1));
    const Vector k3 = field(x + h * (a31 * k1 + a32 * k2));
    const Vector k4 = field(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = field(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = field(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vector x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = field(x_new);
    if (!x_new.allFinite() || !k7.allFinite()) {
      if (h < 1e-300) {
        traj.terminated = FlowStop::failed;
        traj.failure = "non-finite state";
        return traj;
      }
      h *= 0.1;
      continue;
    }
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, x, x_new, opt.atol, opt.rtol);
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    if (en > 1.0) {
      h *= std::min(factor, 0.9);
      continue;
    }

    t = clipped ? target : t + h;
    if (clipped) ++next_target;
    traj.arc_length.push_back(traj.arc_length.back() + kernels::distance(view(x_new), view(x)));
    x = x_new;
    k1 = k7;
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.velocities.push_back(k1);
    traj.f.push_back(p.value(x));
    if (below_tol(k1)) {
      traj.terminated = FlowStop::grad_tol;
      return traj;
    }
    h = clipped ? std::max(h_try, h * factor) : h * factor;
  }
}

double energy_defect(const Problem& p, const FlowTrajectory& flow) {
  static const double nodes[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double inv = 1.0 / (1.0 - flow.beta);
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < flow.times.size(); ++i) {
    const double t0 = flow.times[i], t1 = flow.times[i + 1];
    const double half = 0.5 * (t1 - t0), mid = 0.5 * (t0 + t1);
    for (int q = 0; q < 3; ++q) {
      const Vector g = p.gradient(flow.at(mid + half * nodes[q]));
      integral += half * weights[q] * g.squaredNorm() * inv;
    }
  }
  const double drop = flow.f.front() - flow.f.back();
  const double scale = std::max(std::abs(drop), std::abs(integral));
  return scale == 0.0 ? 0.0 : std::abs(drop - integral) / scale;
}

LengthEstimate trajectory_length(const Problem& p, const std::vector<Vector>& samples, double beta,
                                 double grad_tol, double horizon, std::size_t workers) {
  if (!(grad_tol > 0.0)) throw DomainError("trajectory_length: grad_tol must be positive");
  LengthEstimate est;
  est.lengths.assign(samples.size(), 0.0);
  std::vector<char> reached(samples.size(), 0);
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    FlowOptions opt;
    opt.grad_tol = grad_tol;
    opt.horizon = horizon;
    const auto flow = integrate_flow(p, samples[i], beta, opt);
    if (flow.terminated == FlowStop::failed) throw Error("trajectory_length: " + flow.failure);
    est.lengths[i] = flow.length();
    reached[i] = flow.terminated == FlowStop::grad_tol;
  });
  est.reached_tol.assign(reached.begin(), reached.end());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    est.sigma = std::max(est.sigma, est.lengths[i]);
    if (!reached[i]) est.lower_bound_only = true;
  }
  return est;
}

TrackingReport tracking_error(const Problem& p, const Trace& trace, double horizon) {
  const auto& prm = trace.params;
  if (!(horizon > 0.0)) throw DomainError("tracking_error: horizon must be positive");
  if (!(std::abs(prm.beta) < 1.0)) throw DomainError("tracking_error: beta must lie in (-1, 1)");
  TrackingReport r;
  r.alpha = prm.alpha;
  r.horizon = horizon;
  long K = static_cast<long>(std::floor(horizon / prm.alpha + 1e-9));
  if (K > trace.last()) {
    r.complete = false;
    K = trace.last();
  }
  if (K < 1) {
    r.errors.push_back(0.0);
    return r;
  }
  FlowOptions opt;
  opt.horizon = static_cast<double>(K) * prm.alpha;
  for (long k = 1; k < K; ++k) opt.output_times.push_back(static_cast<double>(k) * prm.alpha);
  const auto flow = integrate_flow(p, trace.x(0), prm.beta, opt);
  if (flow.terminated == FlowStop::failed) throw Error("tracking_error: " + flow.failure);
  for (long k = 0; k <= K; ++k) {
    const double t = k == K ? flow.end_time() : static_cast<double>(k) * prm.alpha;
    const double e = kernels::distance(view(trace.x(k)), view(flow.at(t)));
    r.errors.push_back(e);
    r.max_error = std::max(r.max_error, e);
  }
  return r;
}

Vector flow_matched_start(const Problem& p, const Vector& x0, const MomentumParams& params) {
  return x0 + (params.alpha / (1.0 - params.beta)) * p.gradient(x0);
}

TrackingConstants tracking_constants(double M, double L, const MomentumParams& prm, double T,
                                     double delta, double epsilon) {
  if (!(std::abs(prm.beta) < 1.0)) throw DomainError("tracking_constants: beta must lie in (-1, 1)");
  if (!(M > 0.0) || !(L > 0.0)) throw DomainError("tracking_constants: M and L must be positive");
  if (!(T > 0.0)) throw DomainError("tracking_constants: T must be positive");
  if (!(delta >= 0.0)) throw DomainError("tracking_constants: delta must be >= 0");
  if (!(epsilon > 0.0 && epsilon <= delta + 1.0)) {
    throw DomainError("tracking_constants: epsilon must lie in (0, delta + 1]");
  }
  const double b = prm.beta, g = prm.gamma;
  TrackingConstants tc;
  tc.eig_one = 1.0;
  tc.eig_beta = b;
  Eigen::Matrix2d P;
  P << 1.0, b, 1.0, 1.0;
  P.col(0).normalize();
  P.col(1).normalize();
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(P);
  const double smax = svd.singularValues()(0), smin = svd.singularValues()(1);
  // Distinct eigenvalues 1 and beta keep P invertible.
  if (!(smin > 0.0)) throw Error("tracking_constants: companion block is not diagonalizable");
  tc.p1 = 1.0 / smax;
  tc.p2 = 1.0 / smin;
  tc.p3 = smax / smin;
  tc.c4 = M * L * (0.5 + std::abs(b) / 2.0 + std::abs(g) - b * std::abs(g));
  tc.c5 = tc.p3 * M * std::sqrt(1.0 + 2.0 * g + 2.0 * g * g);
  const double ratio = tc.c4 / tc.c5;
  const double bracket =
      std::exp(tc.c5 * T) * (std::abs(b) * delta + 2.0 * L - L * b + ratio) - ratio;
  tc.alpha_bar = std::min(1.0, epsilon * tc.p1 / tc.p2 / bracket);
  return tc;
}

void write_flow_csv(std::ostream& os, const FlowTrajectory& flow) {
  os << "t,f,grad_norm,arc_length\n";
  for (std::size_t i = 0; i < flow.times.size(); ++i) {
    os << format_double(flow.times[i]) << ',' << format_double(flow.f[i]) << ','
       << format_double(flow.grad_norm(i)) << ',' << format_double(flow.arc_length[i]) << '\n';
  }
}

}  // namespace momentum
