#include <cstdlib>
#include <cstring>

#include "pcsid/kernels.hpp"

namespace pcsid::kernels {

namespace {

Isa detect() {
  const char* env = std::getenv("PCSID_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::Scalar;
  }
  return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

struct Table {
  void (*correlate)(const double*, int, const double*, double*, std::size_t);
  double (*norm3)(const double*, const double*, const double*, std::size_t, double, double, double);
};

Table make_table(Isa isa) {
#if defined(PCSID_HAVE_AVX2)
  if (isa == Isa::Avx2) {
    return {&avx2::correlate, &avx2::scaled_norm3_sum};
  }
#else
  (void)isa;
#endif
  return {&scalar::correlate, &scalar::scaled_norm3_sum};
}

const Table& table() {
  static const Table t = make_table(active_isa());
  return t;
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#if defined(PCSID_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

void correlate(const double* c, int taps, const double* x, double* out, std::size_t n) {
  table().correlate(c, taps, x, out, n);
}

double scaled_norm3_sum(const double* a, const double* b, const double* c, std::size_t n, double sa, double sb,
                        double sc) {
  return table().norm3(a, b, c, n, sa, sb, sc);
}

}  // namespace pcsid::kernels
