#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "kho/model.hpp"
#include "kho/rng.hpp"

using namespace kho;

namespace {

ModelSpec pinn_spec(int d, int L, int W) {
  ModelSpec s;
  s.family = Family::PINN;
  s.d = d;
  s.L = L;
  s.W = W;
  return s;
}

ModelSpec horder_spec(int d, int p, int L, int W) {
  ModelSpec s;
  s.family = Family::HOrder;
  s.d = d;
  s.p = p;
  s.L = L;
  s.W = W;
  return s;
}

ModelSpec khorder_spec(int d, int p, int hd, int hw, int gd, int gw) {
  ModelSpec s;
  s.family = Family::KHOrder;
  s.d = d;
  s.p = p;
  s.hd = hd;
  s.hw = hw;
  s.gd = gd;
  s.gw = gw;
  return s;
}

}  // namespace

TEST_CASE("published parameter-count table, high-dimensional fitting") {
  struct DimRow {
    int d, w;  // shared width for all three families at this dimension
  };
  const DimRow dims[] = {{10, 210}, {20, 205}, {50, 202}};

  const char* pinn_cells[] = {"1.3545E+05", "1.3120E+05", "1.3352E+05"};
  const char* horder_cells[3][5] = {
      {"3.4839E+05", "2.2033E+08", "1.2698E+10", "2.2549E+11", "2.1000E+12"},
      {"2.1509E+08", "2.2540E+14", "7.4951E+17", "2.3635E+20", "2.0500E+22"},
      {"2.2743E+17", "2.5607E+32", "1.6327E+41", "2.8830E+47", "2.0200E+52"}};
  const char* kh_cells[3][5] = {
      {"9.3892E+04", "9.4312E+04", "9.4732E+04", "9.5152E+04", "9.5572E+04"},
      {"2.1980E+05", "2.2021E+05", "2.2062E+05", "2.2103E+05", "2.2144E+05"},
      {"1.0826E+06", "1.0830E+06", "1.0834E+06", "1.0838E+06", "1.0842E+06"}};
  const int ps[] = {1, 3, 5, 7, 9};

  for (int i = 0; i < 3; ++i) {
    const auto [d, w] = dims[i];
    ParamCount pc = count_params(pinn_spec(d, 4, w));
    CHECK(sci5(pc.total) == pinn_cells[i]);
    CHECK_FALSE(pc.intractable);
    for (int j = 0; j < 5; ++j) {
      ParamCount h = count_params(horder_spec(d, ps[j], 4, w));
      CHECK(sci5(h.total) == horder_cells[i][j]);
      // only the very first high-order cell was trainable in practice
      CHECK(h.intractable == !(i == 0 && j == 0));
      ParamCount k = count_params(khorder_spec(d, ps[j], 1, w, 2, w));
      CHECK(sci5(k.total) == kh_cells[i][j]);
      CHECK_FALSE(k.intractable);
    }
  }

  // spot integers behind the printed strings
  CHECK(count_params(pinn_spec(10, 4, 210)).total == 135451);
  CHECK(count_params(pinn_spec(20, 4, 205)).total == 131201);
  CHECK(count_params(pinn_spec(50, 4, 202)).total == 133523);
  CHECK(count_params(horder_spec(10, 1, 4, 210)).total == 348391);
  CHECK(count_params(khorder_spec(10, 1, 1, 210, 2, 210)).total == 93892);
  CHECK(count_params(khorder_spec(10, 9, 1, 210, 2, 210)).total == 95572);
}

TEST_CASE("published parameter-count table, two-dimensional solver") {
  CHECK(sci5(count_params(pinn_spec(2, 6, 90)).total) == "4.1311E+04");
  const int ps[] = {1, 3, 5, 7, 9};
  const char* horder_cells[] = {"4.1491E+04", "4.2571E+04", "4.4371E+04", "4.6891E+04",
                                "5.0131E+04"};
  const char* kh_cells[] = {"1.3776E+04", "1.3866E+04", "1.3956E+04", "1.4046E+04", "1.4136E+04"};
  for (int j = 0; j < 5; ++j) {
    ParamCount h = count_params(horder_spec(2, ps[j], 6, 90));
    CHECK(sci5(h.total) == horder_cells[j]);
    CHECK_FALSE(h.intractable);
    ParamCount k = count_params(khorder_spec(2, ps[j], 3, 45, 2, 90));
    CHECK(sci5(k.total) == kh_cells[j]);
    CHECK_FALSE(k.intractable);
  }
  CHECK(count_params(pinn_spec(2, 6, 90)).total == 41311);
  CHECK(count_params(khorder_spec(2, 1, 3, 45, 2, 90)).total == 13776);
  CHECK(count_params(khorder_spec(2, 9, 3, 45, 2, 90)).total == 14136);
}

TEST_CASE("allocated parameters match the closed-form count") {
  const ModelSpec specs[] = {
      pinn_spec(3, 4, 17),           pinn_spec(1, 1, 5),
      horder_spec(2, 3, 2, 11),      horder_spec(3, 2, 3, 7),
      khorder_spec(2, 4, 2, 9, 3, 13), khorder_spec(5, 2, 1, 8, 2, 10),
  };
  for (const auto& s : specs) {
    Model m = build_model(s, 42);
    CHECK(bigint(param_count_walk(m)) == count_params(s).total);
  }
}

TEST_CASE("building an oversized tensor-product model is refused") {
  CHECK_THROWS_AS(build_model(horder_spec(50, 9, 4, 202), 0), std::runtime_error);
  CHECK_THROWS_AS(build_model(horder_spec(10, 3, 4, 210), 0), std::runtime_error);
  CHECK_NOTHROW(build_model(horder_spec(10, 1, 4, 210), 0));
}

TEST_CASE("initialization is seeded, bounded, and bias-free") {
  ModelSpec s = khorder_spec(3, 3, 2, 12, 2, 14);
  Model a = build_model(s, 7), b = build_model(s, 7), c = build_model(s, 8);

  auto layers_equal = [](const Stack& x, const Stack& y) {
    double m = 0.0;
    for (size_t l = 0; l < x.size(); ++l)
      m = std::max(m, (x[l].W - y[l].W).cwiseAbs().maxCoeff());
    return m == 0.0;
  };
  CHECK(layers_equal(a.inner, b.inner));
  CHECK(layers_equal(a.outer, b.outer));
  CHECK_FALSE(layers_equal(a.inner, c.inner));

  auto check_stack = [](const Stack& st) {
    for (const auto& l : st) {
      double bound = std::sqrt(6.0 / (l.W.cols() + l.W.rows()));
      CHECK(l.W.cwiseAbs().maxCoeff() <= bound);
      CHECK(l.W.cwiseAbs().maxCoeff() > 0.0);
      CHECK(l.b.cwiseAbs().maxCoeff() == 0.0);
    }
  };
  check_stack(a.inner);
  check_stack(a.outer);

  Model p = build_model(pinn_spec(4, 3, 20), 3);
  check_stack(p.stack);
}

namespace {

Mat random_points(int d, int B, uint64_t seed, double lo = 0.05, double hi = 0.95) {
  Rng rng(seed, 4);
  return Mat::NullaryExpr(d, B, [&](Eigen::Index, Eigen::Index) { return rng.range(lo, hi); });
}

// every parameter of the model, in the same order ModelGrad flattens below
std::vector<double*> param_ptrs(Model& m) {
  std::vector<double*> ps;
  auto walk = [&](Stack& st) {
    for (auto& l : st) {
      for (int r = 0; r < l.W.rows(); ++r)
        for (int c = 0; c < l.W.cols(); ++c) ps.push_back(&l.W(r, c));
      for (int r = 0; r < l.b.size(); ++r) ps.push_back(&l.b[r]);
    }
  };
  walk(m.stack);
  walk(m.inner);
  walk(m.outer);
  return ps;
}

std::vector<double> grad_flat(const ModelGrad& g) {
  std::vector<double> out;
  auto walk = [&](const StackGrad& sg) {
    for (size_t l = 0; l < sg.dW.size(); ++l) {
      for (int r = 0; r < sg.dW[l].rows(); ++r)
        for (int c = 0; c < sg.dW[l].cols(); ++c) out.push_back(sg.dW[l](r, c));
      for (int r = 0; r < sg.db[l].size(); ++r) out.push_back(sg.db[l][r]);
    }
  };
  walk(g.stack);
  walk(g.inner);
  walk(g.outer);
  return out;
}

}  // namespace

TEST_CASE("fitting-loss gradients match finite differences for every family") {
  const ModelSpec specs[] = {
      pinn_spec(2, 2, 5),
      horder_spec(2, 2, 2, 4),
      khorder_spec(2, 2, 1, 4, 2, 5),
  };
  for (const auto& base : specs) {
    for (Act act : {Act::Tanh, Act::ReLU}) {
      ModelSpec s = base;
      s.act = act;
      Model m = build_model(s, 11);
      // jitter every parameter (including the zero biases): with zero biases a
      // dead rectifier layer leaves later pre-activations exactly at the kink,
      // where central differences and the zero-slope convention disagree
      {
        Rng jig(13, 8);
        for (double* p : param_ptrs(m)) *p += jig.range(0.01, 0.06);
      }
      Mat X = random_points(s.d, 13, 101);
      Rng rng(55, 6);
      Vec y = Vec::NullaryExpr(13, [&](Eigen::Index) { return rng.range(-1.0, 1.0); });

      ModelGrad g;
      g.init_like(m);
      double L0 = fit_loss_grad(m, X, y, g);

      // value oracle straight from the definition
      Vec u = model_eval(m, X);
      CHECK(L0 == doctest::Approx((u - y).squaredNorm() / 13.0).epsilon(1e-13));

      auto ps = param_ptrs(m);
      auto gf = grad_flat(g);
      REQUIRE(ps.size() == gf.size());
      const double h = 1e-6;
      for (size_t i = 0; i < ps.size(); ++i) {
        double keep = *ps[i];
        ModelGrad dump;
        dump.init_like(m);
        *ps[i] = keep + h;
        double Lp = fit_loss_grad(m, X, y, dump);
        *ps[i] = keep - h;
        double Lm = fit_loss_grad(m, X, y, dump);
        *ps[i] = keep;
        CHECK(gf[i] == doctest::Approx((Lp - Lm) / (2 * h)).epsilon(2e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("residual and boundary gradients match finite differences") {
  const ModelSpec specs[] = {
      pinn_spec(2, 2, 5),
      horder_spec(2, 2, 2, 4),
      khorder_spec(2, 2, 1, 4, 2, 5),
  };
  for (const auto& base : specs) {
    for (PdeOp op : {PdeOp::Poisson, PdeOp::Helmholtz}) {
      ModelSpec s = base;
      s.act = Act::Tanh;  // smooth activations: the residual needs second derivatives
      Model m = build_model(s, 21);
      const double k2 = (op == PdeOp::Helmholtz) ? 3.5 : 0.0;
      Mat Xf = random_points(2, 9, 301);
      Mat Xb = random_points(2, 6, 302);
      Rng rng(77, 6);
      Vec f = Vec::NullaryExpr(9, [&](Eigen::Index) { return rng.range(-1.0, 1.0); });
      Vec gb = Vec::NullaryExpr(6, [&](Eigen::Index) { return rng.range(-1.0, 1.0); });

      ModelGrad grad_f, grad_b;
      grad_f.init_like(m);
      grad_b.init_like(m);
      PdeLoss L0 = pde_loss_grad(m, op, k2, Xf, f, Xb, gb, grad_f, grad_b);

      // value oracle from model_eval_lap
      {
        Vec u, lap;
        model_eval_lap(m, Xf, u, lap);
        Vec res = (op == PdeOp::Poisson) ? Vec(-lap - f) : Vec(lap + k2 * u - f);
        CHECK(L0.lf == doctest::Approx(res.squaredNorm() / 9.0).epsilon(1e-12));
        Vec ub = model_eval(m, Xb);
        CHECK(L0.lb == doctest::Approx((ub - gb).squaredNorm() / 6.0).epsilon(1e-12));
      }

      auto ps = param_ptrs(m);
      auto gff = grad_flat(grad_f);
      auto gbf = grad_flat(grad_b);
      REQUIRE(ps.size() == gff.size());
      const double h = 1e-6;
      ModelGrad df, db;
      df.init_like(m);
      db.init_like(m);
      for (size_t i = 0; i < ps.size(); ++i) {
        double keep = *ps[i];
        *ps[i] = keep + h;
        PdeLoss Lp = pde_loss_grad(m, op, k2, Xf, f, Xb, gb, df, db);
        *ps[i] = keep - h;
        PdeLoss Lm = pde_loss_grad(m, op, k2, Xf, f, Xb, gb, df, db);
        *ps[i] = keep;
        CHECK(gff[i] == doctest::Approx((Lp.lf - Lm.lf) / (2 * h)).epsilon(5e-5).scale(1.0));
        CHECK(gbf[i] == doctest::Approx((Lp.lb - Lm.lb) / (2 * h)).epsilon(5e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("laplacian channel matches finite differences of the value") {
  const ModelSpec specs[] = {
      pinn_spec(3, 3, 8),
      horder_spec(2, 3, 2, 7),
      khorder_spec(3, 2, 2, 6, 2, 8),
  };
  for (const auto& base : specs) {
    ModelSpec s = base;
    s.act = Act::Tanh;
    Model m = build_model(s, 33);
    Mat X = random_points(s.d, 7, 404, 0.2, 0.8);
    Vec u, lap;
    model_eval_lap(m, X, u, lap);
    CHECK((u - model_eval(m, X)).cwiseAbs().maxCoeff() == 0.0);

    const double h = 1e-4;
    Vec fd = Vec::Zero(7);
    for (int k = 0; k < s.d; ++k) {
      Mat Xp = X, Xm = X;
      Xp.row(k).array() += h;
      Xm.row(k).array() -= h;
      fd += (model_eval(m, Xp) - 2 * u + model_eval(m, Xm)) / (h * h);
    }
    for (int i = 0; i < 7; ++i)
      CHECK(lap[i] == doctest::Approx(fd[i]).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("loss reduction is identical for any thread count") {
  ModelSpec s = khorder_spec(2, 3, 2, 10, 2, 12);
  Model m = build_model(s, 5);
  Mat X = random_points(2, 37, 606);
  Rng rng(99, 6);
  Vec y = Vec::NullaryExpr(37, [&](Eigen::Index) { return rng.range(-1.0, 1.0); });

  ModelGrad g1, g4;
  g1.init_like(m);
  g4.init_like(m);
  double a = fit_loss_grad(m, X, y, g1, 1);
  double b = fit_loss_grad(m, X, y, g4, 4);
  CHECK(a == b);
  auto f1 = grad_flat(g1), f4 = grad_flat(g4);
  for (size_t i = 0; i < f1.size(); ++i) CHECK(f1[i] == f4[i]);

  Mat Xb = random_points(2, 11, 607);
  Vec f = Vec::NullaryExpr(37, [&](Eigen::Index) { return rng.range(-1.0, 1.0); });
  Vec gb = Vec::NullaryExpr(11, [&](Eigen::Index) { return rng.range(-1.0, 1.0); });
  ModelGrad pf1, pb1, pf4, pb4;
  pf1.init_like(m);
  pb1.init_like(m);
  pf4.init_like(m);
  pb4.init_like(m);
  PdeLoss La = pde_loss_grad(m, PdeOp::Poisson, 0.0, X, f, Xb, gb, pf1, pb1, 1);
  PdeLoss Lb = pde_loss_grad(m, PdeOp::Poisson, 0.0, X, f, Xb, gb, pf4, pb4, 4);
  CHECK(La.lf == Lb.lf);
  CHECK(La.lb == Lb.lb);
  auto pa = grad_flat(pf1), pb = grad_flat(pf4);
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("gradient statistics used by the annealing rule") {
  ModelSpec s = pinn_spec(1, 1, 2);
  Model m = build_model(s, 1);
  ModelGrad g;
  g.init_like(m);
  // layout: W0 (2x1), b0 (2), W1 (1x2), b1 (1) -> 7 entries
  CHECK(g.entries() == 7);
  g.stack.dW[0] << 3.0, -4.0;
  g.stack.db[0] << 0.5, -0.5;
  g.stack.dW[1] << 1.0, 0.0;
  g.stack.db[1] << -2.0;
  CHECK(g.max_abs() == 4.0);
  CHECK(g.mean_abs() == doctest::Approx((3 + 4 + 0.5 + 0.5 + 1 + 0 + 2) / 7.0).epsilon(1e-15));

  ModelGrad h;
  h.init_like(m);
  h.add_scaled(g, -2.0);
  CHECK(h.stack.dW[0](0, 0) == -6.0);
  CHECK(h.max_abs() == 8.0);
}
