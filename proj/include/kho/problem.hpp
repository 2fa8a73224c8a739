#pragma once
#include <functional>
#include <string>
#include <vector>

#include "kho/net.hpp"
#include "kho/rng.hpp"

namespace kho {

enum class PKind : int { Fit = 0, Poisson = 1, Helmholtz = 2 };

struct Domain {
  enum Kind { Cube, LShape } kind = Cube;
  int d = 2;
  double lo = 0.0, hi = 1.0;  // cube bounds; LShape is the fixed 2-D set
                              // (-1,1)^2 \ [0,1]x[-1,0]

  bool interior(const double* x) const;
  bool on_boundary(const double* x, double tol = 1e-12) const;

  // uniform interior points, columns are samples
  Mat sample_interior(Rng& rng, int n) const;
  // points pinned to the boundary faces/segments; n allocated proportionally
  // to face measure, remainder by largest fractional part (ties: lower index)
  Mat sample_boundary(Rng& rng, int n) const;

  // Fixed evaluation grid: 100x100 equidistant points over the first two
  // coordinates (bounding box, endpoints included; LShape keeps the 7500
  // points inside the closed L).  For d > 2 each grid point is extended with
  // one random draw of (x_3..x_d) from a constant seed shared by all runs.
  Mat eval_grid() const;
};

struct Problem {
  std::string id;
  PKind kind = PKind::Fit;
  Domain dom;
  double k2 = 0.0;  // Helmholtz k^2
  int jmax = 5;     // frequency cap of the g-composites
  double basis_lo = 0.0, basis_hi = 1.0;  // per-coordinate basis interval

  std::function<double(const double*)> exact;
  std::function<double(const double*)> rhs;      // analytic f (empty for Fit)
  std::function<double(const double*)> rhs_jet;  // f manufactured through jets

  Vec exact_on(const Mat& X) const;
  Vec rhs_on(const Mat& X, bool use_jet = false) const;
};

// g(x) = sum_{j=0}^{jmax} sin(2^j pi x) and its second derivative
double target_g(double x, int jmax);
double target_g_dd(double x, int jmax);

// Registry.  jmax < 0 keeps each problem's default (5).  Dimension is encoded
// in the id (e.g. fit10d_eq43, poisson_tensor_5d).
Problem make_problem(const std::string& id, int jmax = -1);
std::vector<std::string> problem_ids();

}  // namespace kho
