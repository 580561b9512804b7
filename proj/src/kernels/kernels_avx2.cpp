#include "momentum/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#define MOMENTUM_HAVE_AVX2 1
#else
#define MOMENTUM_HAVE_AVX2 0
#endif

namespace momentum::kernels::avx2 {

#if MOMENTUM_HAVE_AVX2

namespace {

// Horizontal sum of the four lanes, fixed order: (l0 + l1) + (l2 + l3).
inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d lo_pair = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
  const __m128d hi_pair = _mm_add_sd(hi, _mm_unpackhi_pd(hi, hi));
  return _mm_cvtsd_f64(_mm_add_sd(lo_pair, hi_pair));
}

}  // namespace

void extrapolate(const double* x, const double* x_prev, double cb, double cg, double* y_beta,
                 double* y_gamma, std::size_t n) {
  const __m256d vb = _mm256_set1_pd(cb);
  const __m256d vg = _mm256_set1_pd(cg);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d d = _mm256_sub_pd(vx, _mm256_loadu_pd(x_prev + i));
    _mm256_storeu_pd(y_beta + i, _mm256_add_pd(vx, _mm256_mul_pd(vb, d)));
    _mm256_storeu_pd(y_gamma + i, _mm256_add_pd(vx, _mm256_mul_pd(vg, d)));
  }
  for (; i < n; ++i) {
    const double d = x[i] - x_prev[i];
    y_beta[i] = x[i] + cb * d;
    y_gamma[i] = x[i] + cg * d;
  }
}

void descend(const double* y, const double* g, double alpha, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d step = _mm256_mul_pd(va, _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(y + i), step));
  }
  for (; i < n; ++i) {
    out[i] = y[i] - alpha * g[i];
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    s += a[i] * b[i];
  }
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

#else  // no AVX2 at compile time: forward to the reference kernels

void extrapolate(const double* x, const double* x_prev, double cb, double cg, double* y_beta,
                 double* y_gamma, std::size_t n) {
  scalar::extrapolate(x, x_prev, cb, cg, y_beta, y_gamma, n);
}
void descend(const double* y, const double* g, double alpha, double* out, std::size_t n) {
  scalar::descend(y, g, alpha, out, n);
}
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double squared_distance(const double* a, const double* b, std::size_t n) {
  return scalar::squared_distance(a, b, n);
}

#endif

}  // namespace momentum::kernels::avx2

namespace momentum::kernels::detail {
bool avx2_compiled() { return MOMENTUM_HAVE_AVX2 != 0; }
}  // namespace momentum::kernels::detail
