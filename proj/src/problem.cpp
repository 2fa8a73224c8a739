#include "kho/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kho/jet.hpp"

namespace kho {

// ================= domains =================

namespace {
constexpr uint64_t kGridSeed = 0x9d2c5680ull;  // shared eval-grid tail; not the run seed
constexpr int kGrid1d = 100;

bool lshape_interior(const double* x) {
  // (-1,1)^2 minus the CLOSED quadrant [0,1]x[-1,0]
  if (!(x[0] > -1.0 && x[0] < 1.0 && x[1] > -1.0 && x[1] < 1.0)) return false;
  return !(x[0] >= 0.0 && x[1] <= 0.0);
}

// L-shape boundary: six axis-aligned segments, total length 8.  Order and
// lengths (allocation pattern {2,1,1,1,1,2}):
//   0: left      x1=-1, x2 in [-1,1]   len 2
//   1: bottom    x2=-1, x1 in [-1,0]   len 1
//   2: reentrant x1= 0, x2 in [-1,0]   len 1
//   3: reentrant x2= 0, x1 in [ 0,1]   len 1
//   4: right     x1= 1, x2 in [ 0,1]   len 1
//   5: top       x2= 1, x1 in [-1,1]   len 2
struct Seg {
  int pin_coord;
  double pin_val, lo, hi;
};
const Seg kLSegs[6] = {{0, -1.0, -1.0, 1.0}, {1, -1.0, -1.0, 0.0}, {0, 0.0, -1.0, 0.0},
                       {1, 0.0, 0.0, 1.0},   {0, 1.0, 0.0, 1.0},   {1, 1.0, -1.0, 1.0}};
const double kLSegLen[6] = {2, 1, 1, 1, 1, 2};

// n split over weights w, floor of proportional share plus remainder assigned
// by largest fractional part (ties towards lower index)
std::vector<int> proportional_alloc(int n, const std::vector<double>& w) {
  double tot = 0.0;
  for (double x : w) tot += x;
  std::vector<int> out(w.size());
  std::vector<std::pair<double, int>> frac;
  int used = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    double q = n * w[i] / tot;
    out[i] = int(std::floor(q));
    used += out[i];
    frac.push_back({q - out[i], int(i)});
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;  // stable: ties keep index order
  });
  for (int r = 0; r < n - used; ++r) out[frac[r].second] += 1;
  return out;
}

}  // namespace

bool Domain::interior(const double* x) const {
  if (kind == LShape) return lshape_interior(x);
  for (int i = 0; i < d; ++i)
    if (!(x[i] > lo && x[i] < hi)) return false;
  return true;
}

bool Domain::on_boundary(const double* x, double tol) const {
  if (kind == LShape) {
    for (const Seg& s : kLSegs) {
      double t = x[1 - s.pin_coord];
      if (std::abs(x[s.pin_coord] - s.pin_val) <= tol && t >= s.lo - tol && t <= s.hi + tol &&
          !lshape_interior(x))
        return true;
    }
    return false;
  }
  bool pinned = false;
  for (int i = 0; i < d; ++i) {
    if (x[i] < lo - tol || x[i] > hi + tol) return false;
    if (std::abs(x[i] - lo) <= tol || std::abs(x[i] - hi) <= tol) pinned = true;
  }
  return pinned;
}

Mat Domain::sample_interior(Rng& rng, int n) const {
  const int dim = (kind == LShape) ? 2 : d;
  Mat X(dim, n);
  std::vector<double> x(dim);
  for (int s = 0; s < n; ++s) {
    do {
      for (int i = 0; i < dim; ++i)
        x[i] = (kind == LShape) ? rng.range(-1.0, 1.0) : rng.range(lo, hi);
    } while (!interior(x.data()));
    for (int i = 0; i < dim; ++i) X(i, s) = x[i];
  }
  return X;
}

Mat Domain::sample_boundary(Rng& rng, int n) const {
  if (kind == LShape) {
    std::vector<int> alloc = proportional_alloc(n, {2, 1, 1, 1, 1, 2});
    Mat X(2, n);
    int c = 0;
    for (int sgi = 0; sgi < 6; ++sgi) {
      const Seg& sg = kLSegs[sgi];
      for (int s = 0; s < alloc[sgi]; ++s, ++c) {
        X(sg.pin_coord, c) = sg.pin_val;
        X(1 - sg.pin_coord, c) = rng.range(sg.lo, sg.hi);
      }
    }
    return X;
  }
  // 2d cube faces of equal measure, order (x1=lo, x1=hi, x2=lo, ...)
  std::vector<int> alloc = proportional_alloc(n, std::vector<double>(2 * d, 1.0));
  Mat X(d, n);
  int c = 0;
  for (int f = 0; f < 2 * d; ++f) {
    for (int s = 0; s < alloc[f]; ++s, ++c) {
      for (int i = 0; i < d; ++i) X(i, c) = rng.range(lo, hi);
      X(f / 2, c) = (f % 2) ? hi : lo;
    }
  }
  return X;
}

Mat Domain::eval_grid() const {
  const int m = kGrid1d;
  if (kind == LShape) {
    // keep bounding-box grid points inside the closed L (reentrant edges count)
    std::vector<std::pair<double, double>> pts;
    for (int j2 = 0; j2 < m; ++j2)
      for (int j1 = 0; j1 < m; ++j1) {
        double x1 = -1.0 + 2.0 * j1 / (m - 1), x2 = -1.0 + 2.0 * j2 / (m - 1);
        if (x1 <= 0.0 || x2 >= 0.0) pts.push_back({x1, x2});
      }
    Mat X(2, pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      X(0, i) = pts[i].first;
      X(1, i) = pts[i].second;
    }
    return X;
  }
  Mat X(d, m * m);
  for (int j2 = 0, c = 0; j2 < m; ++j2)
    for (int j1 = 0; j1 < m; ++j1, ++c) {
      X(0, c) = lo + (hi - lo) * j1 / (m - 1);
      if (d > 1) X(1, c) = lo + (hi - lo) * j2 / (m - 1);
      for (int i = 2; i < d; ++i)
        X(i, c) = lo + (hi - lo) * unit_at(kGridSeed, uint64_t(i), uint64_t(c));
    }
  return X;
}

// ================= targets =================

namespace {

template <class S>
S g_of(const S& x, int jmax) {
  using std::sin;
  S acc(0.0);
  double w = M_PI;
  for (int j = 0; j <= jmax; ++j, w *= 2.0) acc = acc + sin(w * x);
  return acc;
}

}  // namespace

double target_g(double x, int jmax) { return g_of(x, jmax); }

double target_g_dd(double x, int jmax) {
  double acc = 0.0, w = M_PI;
  for (int j = 0; j <= jmax; ++j, w *= 2.0) acc -= w * w * std::sin(w * x);
  return acc;
}

Vec Problem::exact_on(const Mat& X) const {
  Vec u(X.cols());
  for (int s = 0; s < X.cols(); ++s) u[s] = exact(X.col(s).data());
  return u;
}

Vec Problem::rhs_on(const Mat& X, bool use_jet) const {
  const auto& f = use_jet ? rhs_jet : rhs;
  if (!f) throw std::logic_error("problem '" + id + "' has no right-hand side");
  Vec v(X.cols());
  for (int s = 0; s < X.cols(); ++s) v[s] = f(X.col(s).data());
  return v;
}

// ================= registry =================

namespace {

// derive the jet-based right-hand side from a templated exact solution:
// Poisson L = -lap, Helmholtz L = lap + k2 u
template <class F>
std::function<double(const double*)> manufacture(PKind kind, double k2, int d, F fn) {
  return [=](const double* x) {
    double lap = laplacian_of([&](const Jet* xs, int dd) { return fn(xs, dd); }, x, d);
    if (kind == PKind::Poisson) return -lap;
    return lap + k2 * fn(x, d);
  };
}

// exact solutions usable with double* and Jet* arguments
struct Eq41 {  // g(x1) g(x2)
  int jmax;
  template <class S>
  auto operator()(const S* x, int) const { return g_of(x[0], jmax) * g_of(x[1], jmax); }
};
struct Eq43 {  // sum_{i=1}^{d-2} g_i g_{i+1} g_{i+2}
  int jmax;
  template <class S>
  auto operator()(const S* x, int d) const {
    auto acc = g_of(x[0], jmax) * g_of(x[1], jmax) * g_of(x[2], jmax);
    for (int i = 1; i + 2 < d; ++i)
      acc = acc + g_of(x[i], jmax) * g_of(x[i + 1], jmax) * g_of(x[i + 2], jmax);
    return acc;
  }
};
struct Eq45 {  // prod sin(pi x_i)
  template <class S>
  auto operator()(const S* x, int d) const {
    using std::sin;
    auto acc = sin(M_PI * x[0]);
    for (int i = 1; i < d; ++i) acc = acc * sin(M_PI * x[i]);
    return acc;
  }
};
struct Eq46 {  // sum_i g(x_i)
  int jmax;
  template <class S>
  auto operator()(const S* x, int d) const {
    auto acc = g_of(x[0], jmax);
    for (int i = 1; i < d; ++i) acc = acc + g_of(x[i], jmax);
    return acc;
  }
};
struct Eq47 {  // sum_{i=1}^{8} sin(10pi x_i) sin(10pi x_{i+1}) sin(10pi x_{i+2})
  template <class S>
  auto operator()(const S* x, int d) const {
    using std::sin;
    const double w = 10.0 * M_PI;
    auto acc = sin(w * x[0]) * sin(w * x[1]) * sin(w * x[2]);
    for (int i = 1; i + 2 < d; ++i)
      acc = acc + sin(w * x[i]) * sin(w * x[i + 1]) * sin(w * x[i + 2]);
    return acc;
  }
};
struct SinProd2 {  // sin(w x1) sin(w x2)
  double w;
  template <class S>
  auto operator()(const S* x, int) const {
    using std::sin;
    return sin(w * x[0]) * sin(w * x[1]);
  }
};
struct TensorD {  // sum_k sin(2pi x_k) prod_{i != k} sin(pi x_i)
  template <class S>
  auto operator()(const S* x, int d) const {
    using std::sin;
    S total(0.0);
    for (int k = 0; k < d; ++k) {
      auto t = sin(2.0 * M_PI * x[k]);
      for (int i = 0; i < d; ++i)
        if (i != k) t = t * sin(M_PI * x[i]);
      total = total + t;
    }
    return total;
  }
};
struct NonTensorD {  // sum_i sin(16 pi x_i x_{i+1})
  template <class S>
  auto operator()(const S* x, int d) const {
    using std::sin;
    auto acc = sin(16.0 * M_PI * x[0] * x[1]);
    for (int i = 1; i + 1 < d; ++i) acc = acc + sin(16.0 * M_PI * x[i] * x[i + 1]);
    return acc;
  }
};
struct LShapeExact {  // r^(2/3) sin(2 theta / 3) + x2 cos(4 pi (x1 + 2 x2))
  template <class S>
  auto operator()(const S* x, int) const {
    using std::atan2;
    using std::cos;
    using std::pow;
    using std::sin;
    auto r2 = x[0] * x[0] + x[1] * x[1];
    auto th = atan2(x[1], x[0]);
    if (value_of(th) < 0.0) th = th + 2.0 * M_PI;  // angle in [0, 3pi/2]
    return pow(r2, 1.0 / 3.0) * sin(2.0 / 3.0 * th) + x[1] * cos(4.0 * M_PI * (x[0] + 2.0 * x[1]));
  }
  static double value_of(double v) { return v; }
  static double value_of(const Jet& j) { return j.v; }
};

Problem base_problem(const std::string& id, PKind kind, int d, int jmax) {
  Problem P;
  P.id = id;
  P.kind = kind;
  P.dom.kind = Domain::Cube;
  P.dom.d = d;
  P.dom.lo = 0.0;
  P.dom.hi = 1.0;
  P.jmax = jmax;
  P.basis_lo = 0.0;
  P.basis_hi = 1.0;
  return P;
}

template <class F>
void install(Problem& P, F fn) {
  const int d = P.dom.kind == Domain::LShape ? 2 : P.dom.d;
  P.exact = [fn, d](const double* x) { return fn(x, d); };
  if (P.kind != PKind::Fit) P.rhs_jet = manufacture(P.kind, P.k2, d, fn);
}

}  // namespace

Problem make_problem(const std::string& id, int jmax) {
  auto pick = [&](int def) { return jmax >= 0 ? jmax : def; };

  if (id == "fit2d_eq41" || id == "poisson2d_eq41") {
    Problem P = base_problem(id, id[0] == 'f' ? PKind::Fit : PKind::Poisson, 2, pick(5));
    install(P, Eq41{P.jmax});
    if (P.kind == PKind::Poisson) {
      int jm = P.jmax;
      P.rhs = [jm](const double* x) {
        return -(target_g_dd(x[0], jm) * target_g(x[1], jm) +
                 target_g(x[0], jm) * target_g_dd(x[1], jm));
      };
    }
    return P;
  }
  if (id == "fit10d_eq43" || id == "fit20d_eq43" || id == "fit50d_eq43") {
    int d = std::stoi(id.substr(3, id.find('d') - 3));
    Problem P = base_problem(id, PKind::Fit, d, pick(5));
    install(P, Eq43{P.jmax});
    return P;
  }
  if (id == "poisson2d_sin8") {
    Problem P = base_problem(id, PKind::Poisson, 2, pick(5));
    install(P, SinProd2{8.0 * M_PI});
    const double w = 8.0 * M_PI;
    P.exact = [w](const double* x) { return std::sin(w * x[0]) * std::sin(w * x[1]); };
    P.rhs = [w](const double* x) {
      return 2.0 * w * w * std::sin(w * x[0]) * std::sin(w * x[1]);
    };
    return P;
  }
  if (id == "poisson10d_eq45") {
    Problem P = base_problem(id, PKind::Poisson, 10, pick(5));
    install(P, Eq45{});
    P.rhs = [](const double* x) {
      double u = 1.0;
      for (int i = 0; i < 10; ++i) u *= std::sin(M_PI * x[i]);
      return 10.0 * M_PI * M_PI * u;
    };
    return P;
  }
  if (id == "poisson10d_eq46") {
    Problem P = base_problem(id, PKind::Poisson, 10, pick(5));
    install(P, Eq46{P.jmax});
    int jm = P.jmax;
    P.rhs = [jm](const double* x) {
      double acc = 0.0;
      for (int i = 0; i < 10; ++i) acc -= target_g_dd(x[i], jm);
      return acc;
    };
    return P;
  }
  if (id == "poisson10d_eq47") {
    Problem P = base_problem(id, PKind::Poisson, 10, pick(5));
    install(P, Eq47{});
    P.rhs = [P](const double* x) { return 300.0 * M_PI * M_PI * P.exact(x); };
    return P;
  }
  if (id == "poisson10d_eq48" || id == "helmholtz10d_eq48") {
    bool helm = id[0] == 'h';
    Problem P = base_problem(id, helm ? PKind::Helmholtz : PKind::Poisson, 10, pick(5));
    if (helm) P.k2 = 25.0;
    install(P, Eq43{P.jmax});  // same triple-product chain at d = 10
    int jm = P.jmax;
    double k2 = P.k2;
    P.rhs = [jm, k2, helm](const double* x) {
      // lap of sum of triple products via g'' factors
      double lap = 0.0, u = 0.0;
      for (int i = 0; i + 2 < 10; ++i) {
        double a = target_g(x[i], jm), b = target_g(x[i + 1], jm), c = target_g(x[i + 2], jm);
        double aa = target_g_dd(x[i], jm), bb = target_g_dd(x[i + 1], jm),
               cc = target_g_dd(x[i + 2], jm);
        u += a * b * c;
        lap += aa * b * c + a * bb * c + a * b * cc;
      }
      return helm ? lap + k2 * u : -lap;
    };
    return P;
  }
  if (id == "helmholtz2d_eq410") {
    Problem P = base_problem(id, PKind::Helmholtz, 2, pick(5));
    P.k2 = 25.0;
    install(P, SinProd2{25.0 * M_PI});
    const double w = 25.0 * M_PI;
    P.rhs = [w](const double* x) {
      return (25.0 - 2.0 * w * w) * std::sin(w * x[0]) * std::sin(w * x[1]);
    };
    return P;
  }
  if (id.rfind("poisson_tensor_", 0) == 0 || id.rfind("poisson_nontensor_", 0) == 0) {
    bool tensor = id.rfind("poisson_tensor_", 0) == 0;
    int d = std::stoi(id.substr(id.find_last_of('_') + 1));
    Problem P = base_problem(id, PKind::Poisson, d, pick(5));
    if (tensor) {
      install(P, TensorD{});
      P.rhs = [P, d](const double* x) { return (d + 3.0) * M_PI * M_PI * P.exact(x); };
    } else {
      install(P, NonTensorD{});
      const double w = 16.0 * M_PI;
      P.rhs = [d, w](const double* x) {
        double acc = 0.0;
        for (int i = 0; i + 1 < d; ++i)
          acc += w * w * (x[i] * x[i] + x[i + 1] * x[i + 1]) *
                 std::sin(w * x[i] * x[i + 1]);
        return acc;
      };
    }
    return P;
  }
  if (id == "poisson_lshape") {
    Problem P = base_problem(id, PKind::Poisson, 2, pick(5));
    P.dom.kind = Domain::LShape;
    P.dom.lo = -1.0;
    P.dom.hi = 1.0;
    P.basis_lo = -1.0;
    P.basis_hi = 1.0;
    install(P, LShapeExact{});
    P.rhs = [](const double* x) {
      // the r^(2/3) sin(2theta/3) part is harmonic; only the oscillatory part
      // contributes:  -lap(x2 cos(4pi(x1+2x2))) = 80 pi^2 x2 cos + 16 pi sin
      double a = 4.0 * M_PI * (x[0] + 2.0 * x[1]);
      return 80.0 * M_PI * M_PI * x[1] * std::cos(a) + 16.0 * M_PI * std::sin(a);
    };
    return P;
  }
  throw std::invalid_argument("unknown problem id '" + id + "'");
}

std::vector<std::string> problem_ids() {
  return {"fit2d_eq41",        "fit10d_eq43",      "fit20d_eq43",
          "fit50d_eq43",       "poisson2d_eq41",   "poisson2d_sin8",
          "poisson_lshape",    "poisson10d_eq45",  "poisson10d_eq46",
          "poisson10d_eq47",   "poisson10d_eq48",  "helmholtz2d_eq410",
          "helmholtz10d_eq48", "poisson_tensor_5d", "poisson_tensor_10d",
          "poisson_nontensor_5d", "poisson_nontensor_10d"};
}

}  // namespace kho
