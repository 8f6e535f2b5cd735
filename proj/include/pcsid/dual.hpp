#pragma once

// Forward-mode dual numbers.
//
// A Dual<T> carries a value and one tangent. The value type may itself be a
// Dual, so Dual<Dual<double>> yields mixed second derivatives of a scalar
// expression when the two levels are seeded along different directions.

#include <cmath>
#include <type_traits>

namespace pcsid {

template <class T>
struct Dual {
  T v{};  // value
  T d{};  // tangent

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value), d(0.0) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(T value, T tangent) : v(value), d(tangent) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

// Innermost real value of a (possibly nested) dual.
inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) {
  return primal(x.v);
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T inv = T(1.0) / b.v;
  T q = a.v * inv;
  return {q, (a.d - q * b.d) * inv};
}

// Mixed operations with plain doubles.
template <class T>
Dual<T> operator+(const Dual<T>& a, double b) {
  return {a.v + b, a.d};
}
template <class T>
Dual<T> operator+(double a, const Dual<T>& b) {
  return {a + b.v, b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double b) {
  return {a.v - b, a.d};
}
template <class T>
Dual<T> operator-(double a, const Dual<T>& b) {
  return {a - b.v, -b.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double b) {
  return {a.v * b, a.d * b};
}
template <class T>
Dual<T> operator*(double a, const Dual<T>& b) {
  return {a * b.v, a * b.d};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double b) {
  return {a.v / b, a.d / b};
}
template <class T>
Dual<T> operator/(double a, const Dual<T>& b) {
  return Dual<T>(a) / b;
}

using std::cos;
using std::sin;
using std::sqrt;

template <class T>
Dual<T> sin(const Dual<T>& x) {
  return {sin(x.v), cos(x.v) * x.d};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  return {cos(x.v), -sin(x.v) * x.d};
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  T r = sqrt(x.v);
  return {r, x.d / (2.0 * r)};
}

// Seed helpers.
template <class T>
Dual<T> make_variable(T value, T tangent) {
  return Dual<T>(value, tangent);
}

}  // namespace pcsid
