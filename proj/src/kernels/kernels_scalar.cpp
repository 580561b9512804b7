#include "momentum/kernels.hpp"

namespace momentum::kernels::scalar {

void extrapolate(const double* x, const double* x_prev, double cb, double cg, double* y_beta,
                 double* y_gamma, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - x_prev[i];
    y_beta[i] = x[i] + cb * d;
    y_gamma[i] = x[i] + cg * d;
  }
}

void descend(const double* y, const double* g, double alpha, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = y[i] - alpha * g[i];
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += a[i] * b[i];
  }
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace momentum::kernels::scalar
