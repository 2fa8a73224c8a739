#include "kho/basis.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace kho {

void legendre_pair(int p, double x, double* P, double* dP) {
  // three-term recurrence for P_n, derivative from (1-x^2) P_n' = n (P_{n-1} - x P_n)
  double pm1 = 1.0, pn = x;
  if (p == 0) { *P = 1.0; *dP = 0.0; return; }
  for (int n = 1; n < p; ++n) {
    double pnext = ((2.0 * n + 1.0) * x * pn - n * pm1) / (n + 1.0);
    pm1 = pn;
    pn = pnext;
  }
  *P = pn;
  double omx2 = 1.0 - x * x;
  if (omx2 > 1e-12) {
    *dP = p * (pm1 - x * pn) / omx2;
  } else {
    // endpoint limit: P_p'(+-1) = +-^(p+1) p(p+1)/2; only used for diagnostics
    double s = (x > 0.0) ? 1.0 : ((p % 2 == 0) ? -1.0 : 1.0);
    *dP = s * 0.5 * p * (p + 1.0);
  }
}

std::vector<double> gll_nodes(int p, double a, double b) {
  if (p < 1) throw std::invalid_argument("gll_nodes: order p must be >= 1");
  std::vector<double> t(p + 1);  // reference nodes on [-1, 1]
  t[0] = -1.0;
  t[p] = 1.0;
  for (int i = 1; i < p; ++i) {
    // Chebyshev-Lobatto starting guess, then Newton on q = P_p'.
    // q' = P_p'' comes from the Legendre ODE: (1-x^2) P'' = 2x P' - p(p+1) P.
    double x = -std::cos(M_PI * i / p);
    for (int it = 0; it < 60; ++it) {
      double P, dP;
      legendre_pair(p, x, &P, &dP);
      double ddP = (2.0 * x * dP - p * (p + 1.0) * P) / (1.0 - x * x);
      double step = dP / ddP;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    double P, dP;
    legendre_pair(p, x, &P, &dP);
    double ddP = (2.0 * x * dP - p * (p + 1.0) * P) / (1.0 - x * x);
    if (std::abs(dP / ddP) > 1e-13)
      throw std::runtime_error("gll_nodes: Newton residual above 1e-13 at p=" + std::to_string(p));
    t[i] = x;
  }
  // enforce exact symmetry about 0 (pairs agree to ~1e-16 already)
  for (int i = 1; i <= p / 2; ++i) {
    double s = 0.5 * (t[p - i] - t[i]);
    t[i] = -s;
    t[p - i] = s;
  }
  if (p % 2 == 0) t[p / 2] = 0.0;
  std::vector<double> out(p + 1);
  // midpoint form keeps mapped pairs exactly symmetric (a plain a+(t+1)h map
  // loses one ulp on the positive side)
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i <= p; ++i) out[i] = mid + half * t[i];
  // keep the endpoints exact after the affine map
  out[0] = a;
  out[p] = b;
  return out;
}

LagrangeBasis::LagrangeBasis(int p, double a, double b)
    : p_(p), a_(a), b_(b), nodes_(gll_nodes(p, a, b)), inv_denom_(p + 1) {
  for (int j = 0; j <= p_; ++j) {
    double d = 1.0;
    for (int i = 0; i <= p_; ++i)
      if (i != j) d *= nodes_[j] - nodes_[i];
    inv_denom_[j] = 1.0 / d;
  }
}

void LagrangeBasis::eval(double x, double* psi) const {
  for (int j = 0; j <= p_; ++j) {
    double v = 1.0;
    for (int i = 0; i <= p_; ++i)
      if (i != j) v *= x - nodes_[i];
    psi[j] = v * inv_denom_[j];
  }
}

void LagrangeBasis::eval_jet(double x, double* psi, double* dpsi, double* ddpsi) const {
  // multiply the linear factors as polynomial jets: (v, v', v'') per factor.
  // Exact at the nodes (no divided differences, no division by x - x_i).
  for (int j = 0; j <= p_; ++j) {
    double v = 1.0, d1 = 0.0, d2 = 0.0;
    for (int i = 0; i <= p_; ++i) {
      if (i == j) continue;
      double f = x - nodes_[i];
      d2 = d2 * f + 2.0 * d1;
      d1 = d1 * f + v;
      v *= f;
    }
    if (psi) psi[j] = v * inv_denom_[j];
    if (dpsi) dpsi[j] = d1 * inv_denom_[j];
    if (ddpsi) ddpsi[j] = d2 * inv_denom_[j];
  }
}

void tensor_basis(const LagrangeBasis& b1, int d, const double* x, double* out,
                  std::vector<std::vector<double>>* d1, std::vector<double>* d2sum) {
  const int m = b1.order() + 1;
  size_t total = 1;
  for (int k = 0; k < d; ++k) {
    if (total > size_t(1) << 40) throw std::runtime_error("tensor_basis: (p+1)^d exceeds capacity");
    total *= m;
  }

  // per-coordinate 1D values (and derivatives when requested)
  std::vector<double> v(d * m), dv, ddv;
  bool want_d = d1 != nullptr || d2sum != nullptr;
  if (want_d) { dv.resize(d * m); ddv.resize(d * m); }
  for (int k = 0; k < d; ++k) {
    if (want_d)
      b1.eval_jet(x[k], &v[k * m], &dv[k * m], &ddv[k * m]);
    else
      b1.eval(x[k], &v[k * m]);
  }

  if (d1) { d1->assign(d, std::vector<double>(total)); }
  if (d2sum) { d2sum->assign(total, 0.0); }

  // walk multi-indices lexicographically, first coordinate slowest
  std::vector<int> J(d, 0);
  std::vector<double> prefix(d + 1);  // prefix[k] = prod_{j<k} v_j
  for (size_t idx = 0; idx < total; ++idx) {
    prefix[0] = 1.0;
    for (int k = 0; k < d; ++k) prefix[k + 1] = prefix[k] * v[k * m + J[k]];
    out[idx] = prefix[d];
    if (want_d) {
      double suffix = 1.0;
      for (int k = d - 1; k >= 0; --k) {
        double rest = prefix[k] * suffix;  // product of all factors except k
        if (d1) (*d1)[k][idx] = rest * dv[k * m + J[k]];
        if (d2sum) (*d2sum)[idx] += rest * ddv[k * m + J[k]];
        suffix *= v[k * m + J[k]];
      }
    }
    for (int k = d - 1; k >= 0; --k) {  // increment with last index fastest
      if (++J[k] < m) break;
      J[k] = 0;
    }
  }
}

}  // namespace kho
