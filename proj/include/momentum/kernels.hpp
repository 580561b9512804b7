#pragma once
// Vector kernels for the momentum update and the trace diagnostics.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active backend is picked once at startup from CPU support and
// can be forced with MOMENTUM_SIMD=scalar|avx2.
//
// Elementwise kernels (extrapolate, descend) produce bit-identical results on
// every backend. Reductions (dot, squared_distance) differ only in summation
// order.

#include <cstddef>
#include <span>
#include <string_view>

namespace momentum::kernels {

enum class Backend { scalar, avx2 };

struct Table {
  // y_beta = x + cb * (x - x_prev), y_gamma = x + cg * (x - x_prev)
  void (*extrapolate)(const double* x, const double* x_prev, double cb, double cg, double* y_beta,
                      double* y_gamma, std::size_t n);
  // out = y - alpha * g
  void (*descend)(const double* y, const double* g, double alpha, double* out, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

namespace scalar {
void extrapolate(const double* x, const double* x_prev, double cb, double cg, double* y_beta,
                 double* y_gamma, std::size_t n);
void descend(const double* y, const double* g, double alpha, double* out, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace scalar

namespace avx2 {
// Only callable when backend_available(Backend::avx2).
void extrapolate(const double* x, const double* x_prev, double cb, double cg, double* y_beta,
                 double* y_gamma, std::size_t n);
void descend(const double* y, const double* g, double alpha, double* out, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace avx2

bool backend_available(Backend b);
const Table& table(Backend b);
Backend active_backend();
const Table& active();
std::string_view backend_name(Backend b);

// Span front-ends over the active backend. Sizes must agree.
void extrapolate(std::span<const double> x, std::span<const double> x_prev, double cb, double cg,
                 std::span<double> y_beta, std::span<double> y_gamma);
void descend(std::span<const double> y, std::span<const double> g, double alpha,
             std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

}  // namespace momentum::kernels
