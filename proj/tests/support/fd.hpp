#pragma once
// Central finite differences, independent of the library's own derivatives.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace fd {

using Vec = Eigen::VectorXd;

inline double step_for(const Vec& x) { return 1e-5 * (1.0 + x.norm()); }

inline Vec gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  const double h = step_for(x);
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

// Directional derivative of a vector field along v.
inline Vec directional(const std::function<Vec(const Vec&)>& F, const Vec& x, const Vec& v) {
  const double h = step_for(x) / std::max(1.0, v.norm());
  return (F(x + h * v) - F(x - h * v)) / (2.0 * h);
}

inline double rel_err(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(1.0, std::max(a.norm(), b.norm()));
}

}  // namespace fd
