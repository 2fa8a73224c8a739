#pragma once
#include <cmath>
#include <stdexcept>

namespace kho {

// Second-order jet in one direction: carries (value, d/dt, d2/dt2) of a scalar
// quantity along a single input coordinate.  Used to push closed-form exact
// solutions through to manufactured right-hand sides, and as the reference
// semantics for the batched network jet pass.
struct Jet {
  double v = 0.0, d1 = 0.0, d2 = 0.0;

  Jet() = default;
  Jet(double value) : v(value) {}                           // constant
  Jet(double value, double dd1, double dd2 = 0.0) : v(value), d1(dd1), d2(dd2) {}
  static Jet var(double value) { return Jet(value, 1.0, 0.0); }  // the seeded coordinate
};

inline Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet operator-(const Jet& a) { return {-a.v, -a.d1, -a.d2}; }
inline Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet operator*(double c, const Jet& a) { return {c * a.v, c * a.d1, c * a.d2}; }
inline Jet operator*(const Jet& a, double c) { return c * a; }
inline Jet operator+(const Jet& a, double c) { return {a.v + c, a.d1, a.d2}; }
inline Jet operator+(double c, const Jet& a) { return a + c; }
inline Jet operator-(const Jet& a, double c) { return {a.v - c, a.d1, a.d2}; }
inline Jet operator-(double c, const Jet& a) { return {c - a.v, -a.d1, -a.d2}; }
inline Jet operator/(const Jet& a, const Jet& b) {
  // quotient rule through (a * 1/b); b.v must be nonzero
  double iv = 1.0 / b.v;
  double q = a.v * iv;
  double q1 = (a.d1 - q * b.d1) * iv;
  double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) * iv;
  return {q, q1, q2};
}
inline Jet operator/(const Jet& a, double c) { return {a.v / c, a.d1 / c, a.d2 / c}; }

// chain rule for f with f', f'' evaluated at a.v
inline Jet chain(const Jet& a, double f, double fp, double fpp) {
  return {f, fp * a.d1, fpp * a.d1 * a.d1 + fp * a.d2};
}

inline Jet sin(const Jet& a) { double s = std::sin(a.v), c = std::cos(a.v); return chain(a, s, c, -s); }
inline Jet cos(const Jet& a) { double s = std::sin(a.v), c = std::cos(a.v); return chain(a, c, -s, -c); }
inline Jet exp(const Jet& a) { double e = std::exp(a.v); return chain(a, e, e, e); }
inline Jet tanh(const Jet& a) {
  double t = std::tanh(a.v), s = 1.0 - t * t;
  return chain(a, t, s, -2.0 * t * s);
}
inline Jet relu(const Jet& a) {
  // subgradient convention relu'(0) = 0, matching the batched engine
  return a.v > 0.0 ? a : Jet(0.0);
}
inline Jet sqrt(const Jet& a) {
  double r = std::sqrt(a.v);
  return chain(a, r, 0.5 / r, -0.25 / (r * a.v));
}
inline Jet pow(const Jet& a, double c) {
  double f = std::pow(a.v, c);
  return chain(a, f, c * f / a.v, c * (c - 1.0) * f / (a.v * a.v));
}
inline Jet atan2(const Jet& y, const Jet& x) {
  // d atan2 = (x dy - y dx) / r2; second derivative by differentiating again
  double r2 = x.v * x.v + y.v * y.v;
  double n = x.v * y.d1 - y.v * x.d1;
  double np = x.v * y.d2 - y.v * x.d2;  // cross terms cancel
  double r2p = 2.0 * (x.v * x.d1 + y.v * y.d1);
  double u1 = n / r2;
  double u2 = (np - u1 * r2p) / r2;
  return {std::atan2(y.v, x.v), u1, u2};
}

// Laplacian of a d-variate callable F(const Jet* x, int d) -> Jet, seeding one
// coordinate at a time.  F must be written in jet arithmetic.
template <class F>
double laplacian_of(F&& f, const double* x, int d) {
  double lap = 0.0;
  constexpr int kMax = 64;
  if (d > kMax) throw std::invalid_argument("laplacian_of: d > 64");
  Jet xs[kMax];
  for (int j = 0; j < d; ++j) xs[j] = Jet(x[j]);
  for (int k = 0; k < d; ++k) {
    xs[k] = Jet::var(x[k]);
    lap += f(xs, d).d2;
    xs[k] = Jet(x[k]);
  }
  return lap;
}

}  // namespace kho
