// AVX2 kernel variants. Compiled with -mavx2; only reached after the
// runtime dispatcher has confirmed CPU support.

#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "budtrack/kernels.hpp"

namespace budtrack::kernels::detail {

namespace {

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

}  // namespace

double dot_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(a.data() + i);
    __m256d vb = _mm256_loadu_pd(b.data() + i);
    acc = _mm256_fmadd_pd(va, vb, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_l2_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i),
                              _mm256_loadu_pd(b.data() + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double logsumexp_avx2(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  double m;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x.data());
    for (i = 4; i + 4 <= n; i += 4)
      vm = _mm256_max_pd(vm, _mm256_loadu_pd(x.data() + i));
    m = hmax(vm);
  } else {
    m = x[0];
    i = 1;
  }
  for (; i < n; ++i) m = std::max(m, x[i]);
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y.data() + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), vy);
    _mm256_storeu_pd(y.data() + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace budtrack::kernels::detail

#endif  // __x86_64__
