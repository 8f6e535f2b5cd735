#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// optional AVX2 variants. The dispatching entry points pick the widest
// variant the CPU supports; PCSID_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>

namespace pcsid::kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
Isa active_isa();
bool avx2_available();

// out[i] = sum_{j < taps} c[j] * x[i + j] for i in [0, n).
void correlate(const double* c, int taps, const double* x, double* out, std::size_t n);

// sum_i sqrt((a_i sa)^2 + (b_i sb)^2 + (c_i sc)^2).
double scaled_norm3_sum(const double* a, const double* b, const double* c, std::size_t n, double sa, double sb,
                        double sc);

namespace scalar {
void correlate(const double* c, int taps, const double* x, double* out, std::size_t n);
double scaled_norm3_sum(const double* a, const double* b, const double* c, std::size_t n, double sa, double sb,
                        double sc);
}  // namespace scalar

#if defined(PCSID_HAVE_AVX2)
namespace avx2 {
void correlate(const double* c, int taps, const double* x, double* out, std::size_t n);
double scaled_norm3_sum(const double* a, const double* b, const double* c, std::size_t n, double sa, double sb,
                        double sc);
}  // namespace avx2
#endif

}  // namespace pcsid::kernels
