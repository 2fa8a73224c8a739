#pragma once
#include <boost/multiprecision/cpp_int.hpp>
#include <memory>
#include <string>

#include "kho/basis.hpp"
#include "kho/net.hpp"

namespace kho {

using bigint = boost::multiprecision::cpp_int;

enum class Family : int { PINN = 0, HOrder = 1, KHOrder = 2 };

Family family_from_string(const std::string& s);
std::string family_name(Family f);
Act act_from_string(const std::string& s);
std::string act_name(Act a);

// Architecture description.  Depth conventions:
//  - PINN/HOrder: L hidden layers of width W (first hidden maps input/transform
//    to W), then a linear output row.
//  - KHOrder inner h_p: basis -> hw, hd hidden layers total, then a linear
//    (2d+1)-wide output with bias; the one subnetwork is shared by all d
//    coordinates.
//  - KHOrder outer: G1 maps the d(2d+1) concatenation to gw, then gd-1 dense
//    gw->gw layers (activation after each), then linear G2 to a scalar.
struct ModelSpec {
  Family family = Family::PINN;
  int d = 2;
  Act act = Act::Tanh;
  int p = 1;             // basis order (horder / khorder)
  int L = 4, W = 90;     // pinn / horder
  int hd = 1, hw = 45;   // khorder inner
  int gd = 2, gw = 90;   // khorder outer
  double lo = 0.0, hi = 1.0;  // per-coordinate basis interval
};

struct ParamCount {
  bigint total;
  bool intractable = false;  // total above the build cap (HOrder blow-up)
};

// closed-form count; never allocates the network
ParamCount count_params(const ModelSpec& spec);
// total > this => intractable (~0.8 GB of f64); matches which HOrder cells the
// reference experiments could actually train
constexpr double kParamCap = 1e8;

// 5-significant-figure scientific string, e.g. "1.3545E+05", "2.0200E+52"
std::string sci5(const bigint& n);

struct Model {
  ModelSpec spec;
  Stack stack;         // pinn / horder
  Stack inner, outer;  // khorder
  std::shared_ptr<const LagrangeBasis> basis;
};

// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases, drawn
// from the counter-based generator: stream = layer ordinal in the documented
// walk (inner stack then outer stack), counter = row-major index into W.
Model build_model(const ModelSpec& spec, uint64_t seed);

size_t param_count_walk(const Model& m);  // sums allocated sizes

// -------- evaluation --------

// X is d x B (columns are points); returns the scalar outputs
Vec model_eval(const Model& m, const Mat& X);
// u and Laplacian(u) in one jet pass
void model_eval_lap(const Model& m, const Mat& X, Vec& u, Vec& lap);

// -------- loss gradients --------

struct ModelGrad {
  StackGrad stack, inner, outer;
  void init_like(const Model& m);
  void set_zero();
  void add(const ModelGrad& o);
  void add_scaled(const ModelGrad& o, double s);
  double max_abs() const;
  double mean_abs() const;  // mean over all entries
  size_t entries() const;
};

// L = mean_s (u(x_s) - y_s)^2.  Chunked; chunk gradients are reduced in chunk
// order so the result is identical for any thread count.
double fit_loss_grad(const Model& m, const Mat& X, const Vec& y, ModelGrad& g, int threads = 1);

enum class PdeOp { Poisson, Helmholtz };  // L = -lap    |    L = lap + k2*u

struct PdeLoss {
  double lf = 0.0, lb = 0.0;
};

// Interior residual loss Lf = mean |L u - f|^2 and boundary loss
// Lb = mean |u - g|^2, with SEPARATE gradients (the annealing rule needs the
// per-term gradient statistics).  Pass nb = 0 to skip the boundary term.
PdeLoss pde_loss_grad(const Model& m, PdeOp op, double k2, const Mat& Xf, const Vec& f,
                      const Mat& Xb, const Vec& gb, ModelGrad& grad_f, ModelGrad& grad_b,
                      int threads = 1);

}  // namespace kho
