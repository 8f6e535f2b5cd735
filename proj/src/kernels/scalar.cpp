#include <cmath>

#include "pcsid/kernels.hpp"

namespace pcsid::kernels::scalar {

void correlate(const double* c, int taps, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      acc += c[j] * x[i + static_cast<std::size_t>(j)];
    }
    out[i] = acc;
  }
}

double scaled_norm3_sum(const double* a, const double* b, const double* c, std::size_t n, double sa, double sb,
                        double sc) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i] * sa;
    const double y = b[i] * sb;
    const double z = c[i] * sc;
    sum += std::sqrt(x * x + y * y + z * z);
  }
  return sum;
}

}  // namespace pcsid::kernels::scalar
