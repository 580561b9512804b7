#include <cassert>
#include <cmath>
#include <cstdlib>
#include <string>

#include "momentum/kernels.hpp"

namespace momentum::kernels {

namespace detail {
bool avx2_compiled();
}

namespace {

constexpr Table kScalar{scalar::extrapolate, scalar::descend, scalar::dot,
                        scalar::squared_distance};
constexpr Table kAvx2{avx2::extrapolate, avx2::descend, avx2::dot, avx2::squared_distance};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend select_backend() {
  const bool avx2_ok = backend_available(Backend::avx2);
  if (const char* env = std::getenv("MOMENTUM_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Backend::scalar;
    if (want == "avx2" && avx2_ok) return Backend::avx2;
  }
  return avx2_ok ? Backend::avx2 : Backend::scalar;
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return detail::avx2_compiled() && cpu_has_avx2();
  }
  return false;
}

const Table& table(Backend b) { return b == Backend::avx2 ? kAvx2 : kScalar; }

Backend active_backend() {
  static const Backend chosen = select_backend();
  return chosen;
}

const Table& active() {
  static const Table& t = table(active_backend());
  return t;
}

std::string_view backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

void extrapolate(std::span<const double> x, std::span<const double> x_prev, double cb, double cg,
                 std::span<double> y_beta, std::span<double> y_gamma) {
  assert(x.size() == x_prev.size() && x.size() == y_beta.size() && x.size() == y_gamma.size());
  active().extrapolate(x.data(), x_prev.data(), cb, cg, y_beta.data(), y_gamma.data(), x.size());
}

void descend(std::span<const double> y, std::span<const double> g, double alpha,
             std::span<double> out) {
  assert(y.size() == g.size() && y.size() == out.size());
  active().descend(y.data(), g.data(), alpha, out.data(), y.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().squared_distance(a.data(), b.data(), a.size());
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace momentum::kernels
