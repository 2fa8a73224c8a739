#pragma once
#include <functional>
#include <memory>
#include <vector>

#include "kho/diag.hpp"
#include "kho/model.hpp"
#include "kho/train.hpp"

namespace kho {

// hard clip to [0,1] written as 1 - relu(1 - relu(t)); equals min(max(t,0),1)
double clip_relu(double t);

// smooth clip w*tanh((t+delta)/(w*(1+2*delta))); range (-w, w), zero at -delta
double clip_tanh(double t, double w, double delta);

// smallest w on the fixed grid {0.01, 0.02, ..., 100} with
// 1 - w*tanh(1/w) <= delta (the expression is decreasing in w)
double min_clip_width(double delta);

// -------- piecewise-linear outer in ReLU form --------

// S(z) = offset + slope*z + sum_k weights[k]*relu(z - knots[k]).  The counted
// parameters are the n (knot, weight) pairs; offset and slope ride along as
// the linear part (network form: a relu unit pinned at 0 plus the output bias).
struct SplineOuter {
  std::vector<double> knots;    // ascending, interior to [0, span]
  std::vector<double> weights;  // slope jumps at the knots
  double slope = 0.0, offset = 0.0;
  double span = 1.0;
  double operator()(double z) const;
};

// interpolates g at the n+2 equispaced breakpoints of [0, span] (spacing
// span/(n+1)); exact for affine g, sup error <= Lip(g)*span/(2(n+1))
SplineOuter build_spline_interpolant(const std::function<double(double)>& g, int n, double span);

// -------- composite evaluators --------

enum class ClipMode : int { Relu = 0, Tanh = 1 };

// u(x) = sum_{q=0}^{2d} outer( sum_{i=1}^{d} lambda_i * clip(L_q(x_i)) ) with
// L_q the shared order-p polynomial with coefficient row q on the [0,1]
// Lagrange basis.  Relu variant: outer = spline.  Tanh variant: outer = ghat
// (two tanh hidden layers, widths N-1 and 6N) and the smooth clip.
struct KpnModel {
  int d = 1, p = 1;
  ClipMode mode = ClipMode::Relu;
  Mat A;       // (2d+1) x (p+1) rows of coefficients
  Vec lambda;  // d entries in (0,1]
  std::shared_ptr<const LagrangeBasis> basis;
  SplineOuter spline;  // relu variant
  Stack ghat;          // tanh variant
  double w = 1.0, delta = 0.0;
  int N = 0;
};

double kpn_eval(const KpnModel& m, const double* x);

// closed forms for the two variants (n = knot count, resp. N = tanh size)
long long kpn_param_count(int p, int n_or_N, int d, ClipMode mode);
// walk over a materialized model's coefficient/lambda/spline arrays
long long kpn_walk_count(const KpnModel& m);

// relu variant with random coefficients, lambdas and spline (for agreement
// and property tests)
KpnModel random_kpn(int p, int n, int d, uint64_t seed);

// Exact dense-network form of the relu variant over per-coordinate basis
// features; eval agrees with kpn_eval to roundoff.
struct KpnNetwork {
  Stack stack;
  std::shared_ptr<const LagrangeBasis> basis;
  int d = 1;
};
KpnNetwork kpn_to_network(const KpnModel& m);  // throws for the tanh variant
Vec kpn_network_eval(const KpnNetwork& net, const Mat& X);

// -------- empirical convergence rates --------

struct RateConfig {
  std::string sweep = "vary_n";  // vary_n | vary_p | vary_N
  std::vector<double> values;    // swept sizes (gw, p, or N)
  ModelSpec base;                // un-swept fields (family forced to KHOrder)
  TrainConfig train;
  std::vector<uint64_t> seeds = {1};   // median over seeds at each point
  std::vector<double> synthetic_errs;  // non-empty: skip training, use these
};

struct RateResult {
  std::vector<double> sizes, errs;
  double slope = 0.0;
};

RateResult rate_experiment(const Problem& prob, const RateConfig& cfg);

}  // namespace kho
