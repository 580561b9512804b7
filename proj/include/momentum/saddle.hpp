#pragma once
// Linearization of the momentum map F(x_k, x_{k-1}) = (x_{k+1}, x_k) at fixed
// points (x, x) with grad f(x) = 0, and randomized escape runs near saddles.
//
// For a Hessian eigenvalue d the Jacobian contributes the two roots of
//   phi(l) = l^2 + [alpha (1 + gamma) d - (1 + beta)] l + beta - alpha gamma d.

#include <complex>
#include <cstdint>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "momentum/optimizer.hpp"
#include "momentum/problems.hpp"

namespace momentum {

struct CharacteristicRoots {
  std::complex<double> first;   // larger modulus
  std::complex<double> second;
  double max_modulus() const { return std::max(std::abs(first), std::abs(second)); }
  bool real() const { return first.imag() == 0.0 && second.imag() == 0.0; }
};

CharacteristicRoots characteristic_roots(double d, const MomentumParams& params);
std::complex<double> characteristic_poly(double d, const MomentumParams& params,
                                         std::complex<double> lambda);

// Assembled from dim() Hessian-vector products and symmetrized.
Matrix dense_hessian(const Problem& p, const Vector& x);

struct ExtremeEigenvalues {
  double min = 0.0;
  double max = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Lanczos with full reorthogonalization on the Hessian-vector product.
ExtremeEigenvalues extreme_eigenvalues(const Problem& p, const Vector& x, double tol = 1e-8,
                                       std::uint64_t seed = 0);

// [[(1 + beta) I - alpha (1 + gamma) H, -beta I + alpha gamma H], [I, 0]]
Matrix momentum_jacobian(const Matrix& hessian, const MomentumParams& params);

enum class PointClass { local_min_candidate, strict_saddle, degenerate };

std::string_view point_class_name(PointClass c);

struct SaddleTolerances {
  double grad_tol = 1e-8;
  // Eigenvalues below -eig_rel (1 + ||H||) count as negative.
  double eig_rel = 1e-8;
  std::size_t dense_limit = 400;
};

struct UnstableRoot {
  std::size_t index = 0;
  double root = 0.0;
};

struct CriticalPointAnalysis {
  Vector point;
  double grad_norm = 0.0;
  // Sorted ascending. Only {min, max} when the dimension exceeds dense_limit.
  std::vector<double> eigenvalues;
  bool full_spectrum = true;
  double hessian_norm = 0.0;
  double tol_eig = 0.0;
  PointClass classification = PointClass::degenerate;
  std::vector<CharacteristicRoots> roots;  // one per entry of eigenvalues
  double spectral_radius = 0.0;
  std::vector<UnstableRoot> unstable_roots;  // real roots > 1
};

// Throws DomainError when ||grad f(x)|| > grad_tol or the problem has no
// Hessian-vector product.
CriticalPointAnalysis analyze_critical_point(const Problem& p, const Vector& x,
                                             const MomentumParams& params,
                                             const SaddleTolerances& tols = {});

// |beta| / (1 + |gamma| M_tilde); beta = 0 is rejected.
double saddle_safe_alpha(double M_tilde, const MomentumParams& params);
// |beta| > alpha |gamma| M_tilde, which keeps beta I - alpha gamma H invertible.
bool rank_condition(double M_tilde, const MomentumParams& params);

enum class TrialOutcome { at_saddle, converged_elsewhere, left_region, inconclusive, diverged };

std::string_view trial_outcome_name(TrialOutcome outcome);

struct EscapeOptions {
  double radius = 1e-3;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  // Lipschitz modulus of grad f around the saddle, used for both step bounds.
  double M = 0.0;
  StopRules stop{100000, 1e-8, 1e3};
  std::size_t workers = 1;
  SaddleTolerances tols{};
};

struct TrialResult {
  std::size_t index = 0;
  TrialOutcome outcome = TrialOutcome::inconclusive;
  double final_distance = 0.0;
  double final_grad_norm = 0.0;
  double final_f = 0.0;
  long iterations = 0;
};

struct EscapeExperiment {
  Vector saddle;
  MomentumParams params;
  double radius = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double at_saddle_radius = 0.0;  // 10 * radius * 1e-3
  double alpha_limit = 0.0;       // min of both step-size bounds
  std::vector<TrialResult> outcomes;
  std::size_t escaped = 0;        // converged_elsewhere + left_region
  std::size_t at_saddle = 0;
  std::size_t inconclusive = 0;
  std::size_t diverged = 0;
  double escape_fraction = 0.0;
};

// Classifies a single run started from (x_minus1, x0).
TrialResult run_trial(const Problem& p, const Vector& saddle, const MomentumParams& params,
                      const Vector& x_minus1, const Vector& x0, const StopRules& stop,
                      double at_saddle_radius);

EscapeExperiment escape_experiment(const Problem& p, const Vector& saddle,
                                   const MomentumParams& params, const EscapeOptions& options);

void to_json(nlohmann::json& j, const CriticalPointAnalysis& a);
void to_json(nlohmann::json& j, const EscapeExperiment& e);

}  // namespace momentum
