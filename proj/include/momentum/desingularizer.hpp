#pragma once

#include <cmath>
#include <string>

#include "momentum/common.hpp"

namespace momentum {

// psi(t) = inflation * c * t^theta. Empirical: the inflation only makes psi a
// majorant on the samples it was fitted to.
struct Desingularizer {
  double c = 1.0;
  double theta = 1.0;
  double inflation = 1.0;

  double r_squared = 1.0;
  std::size_t samples = 0;
  double gap_min = 0.0;
  double gap_max = 0.0;
  double f_star = 0.0;
  std::string source = "analytic";

  double operator()(double t) const {
    if (t <= 0.0) return 0.0;
    return inflation * c * std::pow(t, theta);
  }

  // Throws unless psi is increasing and concave with psi(0) = 0.
  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("desingularizer: c must be positive");
    if (!(theta > 0.0 && theta <= 1.0)) {
      throw DomainError("desingularizer: theta must lie in (0, 1]");
    }
    if (!(inflation >= 1.0) || !std::isfinite(inflation)) {
      throw DomainError("desingularizer: inflation must be >= 1");
    }
  }

  static Desingularizer power(double c, double theta) {
    Desingularizer d;
    d.c = c;
    d.theta = theta;
    return d;
  }
};

}  // namespace momentum
