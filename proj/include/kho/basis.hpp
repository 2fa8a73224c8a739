#pragma once
#include <vector>

namespace kho {

// Gauss-Lobatto-Legendre nodes of order p on [a, b]: the two endpoints plus the
// p-1 roots of P_p'(x).  p >= 1; returns p+1 ascending nodes, symmetric about
// the interval midpoint.
std::vector<double> gll_nodes(int p, double a = -1.0, double b = 1.0);

// Legendre P_p and P_p' at x (helper exposed for tests)
void legendre_pair(int p, double x, double* P, double* dP);

// Lagrange cardinal basis on the GLL nodes of one interval.  eval* fill
// caller-provided arrays of length p+1.
class LagrangeBasis {
public:
  LagrangeBasis(int p, double a, double b);

  int order() const { return p_; }
  double lo() const { return a_; }
  double hi() const { return b_; }
  const std::vector<double>& nodes() const { return nodes_; }

  void eval(double x, double* psi) const;
  // values plus first and second derivatives; any output pointer may be null
  void eval_jet(double x, double* psi, double* dpsi, double* ddpsi) const;

private:
  int p_;
  double a_, b_;
  std::vector<double> nodes_;
  std::vector<double> inv_denom_;  // 1 / prod_{i != j} (x_j - x_i)
};

// Tensor-product basis of (p+1)^d cardinal functions, lexicographic multi-index
// order with the FIRST coordinate slowest (row-major): flattening
// idx = ((j_1*(p+1) + j_2)*(p+1) + ...) + j_d.
// Fills out[(p+1)^d]; optionally d1[k][..] = d/dx_k and d2sum[..] = sum_k d2/dx_k2.
void tensor_basis(const LagrangeBasis& b1, int d, const double* x, double* out,
                  std::vector<std::vector<double>>* d1 = nullptr,
                  std::vector<double>* d2sum = nullptr);

}  // namespace kho
