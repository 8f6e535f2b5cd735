#include <immintrin.h>

#include <cmath>

#include "pcsid/kernels.hpp"

namespace pcsid::kernels::avx2 {

void correlate(const double* c, int taps, const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (int j = 0; j < taps; ++j) {
      const __m256d cj = _mm256_broadcast_sd(c + j);
      const double* xj = x + i + static_cast<std::size_t>(j);
      acc0 = _mm256_fmadd_pd(cj, _mm256_loadu_pd(xj), acc0);
      acc1 = _mm256_fmadd_pd(cj, _mm256_loadu_pd(xj + 4), acc1);
    }
    _mm256_storeu_pd(out + i, acc0);
    _mm256_storeu_pd(out + i + 4, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (int j = 0; j < taps; ++j) {
      acc = _mm256_fmadd_pd(_mm256_broadcast_sd(c + j), _mm256_loadu_pd(x + i + static_cast<std::size_t>(j)), acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      acc = std::fma(c[j], x[i + static_cast<std::size_t>(j)], acc);
    }
    out[i] = acc;
  }
}

double scaled_norm3_sum(const double* a, const double* b, const double* c, std::size_t n, double sa, double sb,
                        double sc) {
  const __m256d va = _mm256_set1_pd(sa);
  const __m256d vb = _mm256_set1_pd(sb);
  const __m256d vc = _mm256_set1_pd(sc);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_mul_pd(_mm256_loadu_pd(a + i), va);
    const __m256d y = _mm256_mul_pd(_mm256_loadu_pd(b + i), vb);
    const __m256d z = _mm256_mul_pd(_mm256_loadu_pd(c + i), vc);
    __m256d r = _mm256_mul_pd(x, x);
    r = _mm256_fmadd_pd(y, y, r);
    r = _mm256_fmadd_pd(z, z, r);
    acc = _mm256_add_pd(acc, _mm256_sqrt_pd(r));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    const double x = a[i] * sa;
    const double y = b[i] * sb;
    const double z = c[i] * sc;
    sum += std::sqrt(x * x + y * y + z * z);
  }
  return sum;
}

}  // namespace pcsid::kernels::avx2
