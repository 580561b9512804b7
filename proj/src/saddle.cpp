#include "momentum/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "momentum/kernels.hpp"

namespace momentum {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vector uniform_in_ball(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector u(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
  } while (u.norm() == 0.0);
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
  return (r / u.norm()) * u;
}

}  // namespace

CharacteristicRoots characteristic_roots(double d, const MomentumParams& prm) {
  const double b = prm.alpha * (1.0 + prm.gamma) * d - (1.0 + prm.beta);
  const double c = prm.beta - prm.alpha * prm.gamma * d;
  const double disc = b * b - 4.0 * c;
  CharacteristicRoots r;
  if (disc >= 0.0) {
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) {
      r.first = r.second = 0.0;
    } else {
      r.first = q;
      r.second = c / q;
    }
  } else {
    const double re = -0.5 * b, im = 0.5 * std::sqrt(-disc);
    r.first = {re, im};
    r.second = {re, -im};
  }
  if (std::abs(r.second) > std::abs(r.first)) std::swap(r.first, r.second);
  return r;
}

std::complex<double> characteristic_poly(double d, const MomentumParams& prm,
                                         std::complex<double> l) {
  return l * l + (prm.alpha * (1.0 + prm.gamma) * d - (1.0 + prm.beta)) * l + prm.beta -
         prm.alpha * prm.gamma * d;
}

Matrix dense_hessian(const Problem& p, const Vector& x) {
  if (!p.has_hessian_vec()) throw DomainError("problem '" + p.name() + "' has no Hessian");
  const auto n = static_cast<Eigen::Index>(p.dim());
  Matrix H(n, n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e[i] = 1.0;
    H.col(i) = p.hessian_vec(x, e);
    e[i] = 0.0;
  }
  return 0.5 * (H + H.transpose());
}

ExtremeEigenvalues extreme_eigenvalues(const Problem& p, const Vector& x, double tol,
                                       std::uint64_t seed) {
  if (!p.has_hessian_vec()) throw DomainError("problem '" + p.name() + "' has no Hessian");
  const auto n = static_cast<Eigen::Index>(p.dim());
  const int max_iter = static_cast<int>(std::min<Eigen::Index>(n, 300));
  std::mt19937_64 rng(stream_seed(seed, 0));
  std::vector<Vector> basis;
  basis.push_back(uniform_in_ball(rng, n, 1.0).normalized());
  std::vector<double> alphas, betas;
  ExtremeEigenvalues out;
  for (int j = 0; j < max_iter; ++j) {
    Vector w = p.hessian_vec(x, basis.back());
    alphas.push_back(w.dot(basis.back()));
    for (const auto& q : basis) w -= w.dot(q) * q;
    for (const auto& q : basis) w -= w.dot(q) * q;
    const double beta = w.norm();

    const int m = j + 1;
    Matrix T = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alphas[static_cast<std::size_t>(i)];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = betas[static_cast<std::size_t>(i)];
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> es(T);
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();
    out.min = vals[0];
    out.max = vals[m - 1];
    out.iterations = m;
    const double scale = 1.0 + std::max(std::abs(out.min), std::abs(out.max));
    const double res_min = beta * std::abs(vecs(m - 1, 0));
    const double res_max = beta * std::abs(vecs(m - 1, m - 1));
    if ((res_min <= tol * scale && res_max <= tol * scale && m >= 2) || beta <= tol * scale) {
      out.converged = true;
      break;
    }
    betas.push_back(beta);
    basis.push_back(w / beta);
  }
  return out;
}

Matrix momentum_jacobian(const Matrix& H, const MomentumParams& prm) {
  const auto n = H.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix J = Matrix::Zero(2 * n, 2 * n);
  J.topLeftCorner(n, n) = (1.0 + prm.beta) * I - prm.alpha * (1.0 + prm.gamma) * H;
  J.topRightCorner(n, n) = -prm.beta * I + prm.alpha * prm.gamma * H;
  J.bottomLeftCorner(n, n) = I;
  return J;
}

std::string_view point_class_name(PointClass c) {
  switch (c) {
    case PointClass::local_min_candidate:
      return "local_min_candidate";
    case PointClass::strict_saddle:
      return "strict_saddle";
    case PointClass::degenerate:
      return "degenerate";
  }
  return "degenerate";
}

CriticalPointAnalysis analyze_critical_point(const Problem& p, const Vector& x,
                                             const MomentumParams& params,
                                             const SaddleTolerances& tols) {
  params.validate();
  CriticalPointAnalysis a;
  a.point = x;
  a.grad_norm = p.gradient(x).norm();
  if (a.grad_norm > tols.grad_tol) {
    std::ostringstream os;
    os << "not a critical point: ||grad f|| = " << a.grad_norm << " > " << tols.grad_tol;
    throw DomainError(os.str());
  }
  if (!p.has_hessian_vec()) throw DomainError("problem '" + p.name() + "' has no Hessian");

  if (p.dim() <= tols.dense_limit) {
    const Matrix H = dense_hessian(p, x);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    const auto& v = es.eigenvalues();
    a.eigenvalues.assign(v.data(), v.data() + v.size());
    a.full_spectrum = true;
  } else {
    const auto ext = extreme_eigenvalues(p, x, 1e-8);
    a.eigenvalues = {ext.min, ext.max};
    a.full_spectrum = false;
  }
  for (double d : a.eigenvalues) a.hessian_norm = std::max(a.hessian_norm, std::abs(d));
  a.tol_eig = tols.eig_rel * (1.0 + a.hessian_norm);
  const double dmin = a.eigenvalues.front();
  if (dmin < -a.tol_eig) {
    a.classification = PointClass::strict_saddle;
  } else if (dmin > a.tol_eig) {
    a.classification = PointClass::local_min_candidate;
  } else {
    a.classification = PointClass::degenerate;
  }
  for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) {
    const auto r = characteristic_roots(a.eigenvalues[i], params);
    a.roots.push_back(r);
    a.spectral_radius = std::max(a.spectral_radius, r.max_modulus());
    for (auto root : {r.first, r.second}) {
      if (root.imag() == 0.0 && root.real() > 1.0) a.unstable_roots.push_back({i, root.real()});
    }
  }
  return a;
}

double saddle_safe_alpha(double M_tilde, const MomentumParams& params) {
  if (params.beta == 0.0) {
    throw DomainError(
        "saddle analysis needs beta in (-1, 1) \\ {0}: the escape guarantee does not cover beta = 0");
  }
  if (!(M_tilde >= 0.0)) throw DomainError("saddle_safe_alpha: M_tilde must be >= 0");
  return std::abs(params.beta) / (1.0 + std::abs(params.gamma) * M_tilde);
}

bool rank_condition(double M_tilde, const MomentumParams& params) {
  return std::abs(params.beta) > params.alpha * std::abs(params.gamma) * M_tilde;
}

std::string_view trial_outcome_name(TrialOutcome outcome) {
  switch (outcome) {
    case TrialOutcome::at_saddle:
      return "at_saddle";
    case TrialOutcome::converged_elsewhere:
      return "converged_elsewhere";
    case TrialOutcome::left_region:
      return "left_region";
    case TrialOutcome::inconclusive:
      return "inconclusive";
    case TrialOutcome::diverged:
      return "diverged";
  }
  return "inconclusive";
}

TrialResult run_trial(const Problem& p, const Vector& saddle, const MomentumParams& params,
                      const Vector& x_minus1, const Vector& x0, const StopRules& stop,
                      double at_saddle_radius) {
  const Trace t = run(p, x_minus1, x0, params, stop);
  TrialResult r;
  r.iterations = t.last();
  const Vector& xf = t.points.back();
  r.final_distance = kernels::distance(view(xf), view(saddle));
  r.final_grad_norm = t.grad_norm.empty() ? 0.0 : t.grad_norm.back();
  r.final_f = t.f.empty() ? 0.0 : t.f.back();
  switch (t.stop) {
    case StopReason::diverged:
      r.outcome = TrialOutcome::diverged;
      break;
    case StopReason::left_box:
      r.outcome = TrialOutcome::left_region;
      break;
    case StopReason::max_iters:
      r.outcome = TrialOutcome::inconclusive;
      break;
    case StopReason::grad_tol:
      r.outcome = r.final_distance <= at_saddle_radius ? TrialOutcome::at_saddle
                                                       : TrialOutcome::converged_elsewhere;
      break;
  }
  return r;
}

EscapeExperiment escape_experiment(const Problem& p, const Vector& saddle,
                                   const MomentumParams& params, const EscapeOptions& opt) {
  params.validate();
  if (opt.trials < 1) throw DomainError("escape_experiment: need at least one trial");
  if (!(opt.radius > 0.0)) throw DomainError("escape_experiment: radius must be positive");
  const double alpha_saddle = saddle_safe_alpha(opt.M, params);
  const auto analysis = analyze_critical_point(p, saddle, params, opt.tols);
  if (analysis.classification != PointClass::strict_saddle) {
    throw DomainError("escape_experiment: point is " +
                      std::string(point_class_name(analysis.classification)) +
                      ", not a strict saddle");
  }

  EscapeExperiment e;
  e.saddle = saddle;
  e.params = params;
  e.radius = opt.radius;
  e.trials = opt.trials;
  e.seed = opt.seed;
  e.at_saddle_radius = 10.0 * opt.radius * 1e-3;
  e.alpha_limit = alpha_saddle;
  if (opt.M > 0.0) {
    e.alpha_limit = std::min(alpha_saddle, safe_alpha(opt.M, params));
    if (params.alpha > e.alpha_limit) {
      std::ostringstream os;
      os << "escape_experiment: alpha = " << params.alpha << " exceeds min(safe_alpha, "
         << "saddle_safe_alpha) = " << e.alpha_limit;
      throw DomainError(os.str());
    }
  }

  e.outcomes.resize(opt.trials);
  const auto n = static_cast<Eigen::Index>(p.dim());
  parallel_for(opt.trials, opt.workers, [&](std::size_t i) {
    std::mt19937_64 rng(stream_seed(opt.seed, i));
    const Vector x0 = saddle + uniform_in_ball(rng, n, opt.radius);
    const Vector xm1 = x0 + uniform_in_ball(rng, n, params.delta * params.alpha);
    TrialResult r = run_trial(p, saddle, params, xm1, x0, opt.stop, e.at_saddle_radius);
    r.index = i;
    e.outcomes[i] = r;
  });
  for (const auto& r : e.outcomes) {
    switch (r.outcome) {
      case TrialOutcome::at_saddle:
        ++e.at_saddle;
        break;
      case TrialOutcome::converged_elsewhere:
      case TrialOutcome::left_region:
        ++e.escaped;
        break;
      case TrialOutcome::inconclusive:
        ++e.inconclusive;
        break;
      case TrialOutcome::diverged:
        ++e.diverged;
        break;
    }
  }
  e.escape_fraction = static_cast<double>(e.escaped) / static_cast<double>(opt.trials);
  return e;
}

void to_json(nlohmann::json& j, const CriticalPointAnalysis& a) {
  auto roots = nlohmann::json::array();
  for (std::size_t i = 0; i < a.roots.size(); ++i) {
    const auto& r = a.roots[i];
    roots.push_back({{"d", a.eigenvalues[i]},
                     {"root1", {r.first.real(), r.first.imag()}},
                     {"root2", {r.second.real(), r.second.imag()}},
                     {"max_modulus", r.max_modulus()}});
  }
  auto unstable = nlohmann::json::array();
  for (const auto& u : a.unstable_roots) unstable.push_back({{"index", u.index}, {"root", u.root}});
  j = {{"point", std::vector<double>(a.point.data(), a.point.data() + a.point.size())},
       {"grad_norm", a.grad_norm},
       {"eigenvalues", a.eigenvalues},
       {"full_spectrum", a.full_spectrum},
       {"hessian_norm", a.hessian_norm},
       {"tol_eig", a.tol_eig},
       {"classification", std::string(point_class_name(a.classification))},
       {"spectral_radius", a.spectral_radius},
       {"roots", std::move(roots)},
       {"unstable_roots", std::move(unstable)}};
}

void to_json(nlohmann::json& j, const EscapeExperiment& e) {
  auto rows = nlohmann::json::array();
  for (const auto& r : e.outcomes) {
    rows.push_back({{"trial", r.index},
                    {"outcome", std::string(trial_outcome_name(r.outcome))},
                    {"final_distance", r.final_distance},
                    {"final_grad_norm", r.final_grad_norm},
                    {"final_f", r.final_f},
                    {"iterations", r.iterations}});
  }
  j = {{"saddle", std::vector<double>(e.saddle.data(), e.saddle.data() + e.saddle.size())},
       {"params", e.params},
       {"radius", e.radius},
       {"trials", e.trials},
       {"seed", e.seed},
       {"at_saddle_radius", e.at_saddle_radius},
       {"alpha_limit", e.alpha_limit},
       {"escaped", e.escaped},
       {"at_saddle", e.at_saddle},
       {"inconclusive", e.inconclusive},
       {"diverged", e.diverged},
       {"escape_fraction", e.escape_fraction},
       {"outcomes", std::move(rows)}};
}

}  // namespace momentum
