#include <algorithm>
#include <cmath>
#include <random>

#include "momentum/problems.hpp"

namespace momentum {

namespace {

constexpr int kFloorLevel = -120;  // 2^(-120/4) = 2^-30

double level_radius(int level) { return std::exp2(static_cast<double>(level) / 4.0); }

int grid_level(double radius) {
  const int level = static_cast<int>(std::ceil(4.0 * std::log2(radius) - 1e-9));
  return std::max(level, kFloorLevel);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vector random_direction(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vector w(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) w[i] = normal(rng);
  } while (w.norm() == 0.0);
  return w / w.norm();
}

struct Extremes {
  double grad = 0.0;
  double quotient = 0.0;
};

void sample_level(const Problem& p, const Vector& center, int level, const LipschitzOptions& opt,
                  Extremes& out) {
  const double g = level_radius(level);
  std::mt19937_64 rng(mix(opt.seed, static_cast<std::uint64_t>(level - kFloorLevel)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = center.size();

  for (int pair = 0; pair < opt.pairs_per_level; ++pair) {
    const Vector u = random_direction(rng, n);
    const double r = std::pow(unit(rng), 1.0 / static_cast<double>(n));
    const Vector x = center + (0.5 * g * r) * u;
    const double s = 0.5 * g * (0.5 + 0.5 * unit(rng));
    Vector w = random_direction(rng, n);

    const Vector gx = p.gradient(x);
    out.grad = std::max(out.grad, gx.norm());
    for (int it = 0; it <= opt.power_steps; ++it) {
      const Vector y = x + s * w;
      const Vector gy = p.gradient(y);
      out.grad = std::max(out.grad, gy.norm());
      const Vector d = gy - gx;
      const double dn = d.norm();
      const double actual = (y - x).norm();
      if (actual > 0.0) out.quotient = std::max(out.quotient, dn / actual);
      if (dn == 0.0) break;
      w = d / dn;
    }
  }
}

}  // namespace

double lipschitz_grid_radius(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw DomainError("lipschitz radius must be positive and finite");
  }
  return level_radius(grid_level(radius));
}

LipschitzBounds estimate_lipschitz(const Problem& p, const Vector& center, double radius,
                                   const LipschitzOptions& options) {
  if (static_cast<std::size_t>(center.size()) != p.dim()) {
    throw DimensionError("estimate_lipschitz: center has wrong length");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw DomainError("estimate_lipschitz: radius must be positive and finite");
  }
  if (options.spread < 0.0) throw DomainError("estimate_lipschitz: spread must be >= 0");
  const double enlarged = (1.0 + 2.0 * options.spread) * radius;

  if (options.mode == LipschitzMode::analytic) {
    auto bounds = p.analytic_lipschitz(center, enlarged);
    if (!bounds) {
      throw DomainError("no analytic Lipschitz bounds for problem '" + p.name() +
                        "'; use sampled mode");
    }
    return *bounds;
  }

  if (options.pairs_per_level < 1 || options.power_steps < 0 || options.safety < 1.0) {
    throw DomainError("estimate_lipschitz: invalid sampling options");
  }
  Extremes ext;
  ext.grad = p.gradient(center).norm();
  const int top = grid_level(enlarged);
  for (int level = kFloorLevel; level <= top; ++level) sample_level(p, center, level, options, ext);
  if (!std::isfinite(ext.grad) || !std::isfinite(ext.quotient)) {
    throw Error("estimate_lipschitz: non-finite gradient while sampling '" + p.name() + "'");
  }
  return LipschitzBounds{options.safety * ext.grad, options.safety * ext.quotient,
                         level_radius(top)};
}

}  // namespace momentum
