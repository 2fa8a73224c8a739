#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kho/problem.hpp"
#include "kho/rng.hpp"
#include "kho/theory.hpp"

using namespace kho;

TEST_CASE("hard clip equals the min/max composition everywhere") {
  for (int i = 0; i <= 100000; ++i) {
    double t = -2.0 + 4.0 * i / 100000.0;
    CHECK(clip_relu(t) == std::min(std::max(t, 0.0), 1.0));
  }
  CHECK(clip_relu(-0.0) == 0.0);
  CHECK(clip_relu(1.0 + 1e-16) == 1.0);
  CHECK(clip_relu(0.5) == 0.5);
}

TEST_CASE("smooth clip: formula, range, and anchor point") {
  const double w = 2.0, delta = 0.1;
  for (double t : {-5.0, -0.3, 0.0, 0.4, 1.0, 7.0}) {
    double want = w * std::tanh((t + delta) / (w * (1.0 + 2.0 * delta)));
    CHECK(clip_tanh(t, w, delta) == want);
    CHECK(std::abs(clip_tanh(t, w, delta)) < w);
  }
  CHECK(clip_tanh(-delta, w, delta) == 0.0);
  CHECK(clip_tanh(0.5, w, delta) > clip_tanh(0.4, w, delta));  // strictly increasing
}

TEST_CASE("smallest admissible clip width on the hundredths grid") {
  for (double delta : {0.02, 0.05, 0.1, 0.3}) {
    double w = min_clip_width(delta);
    CHECK(std::abs(w * 100.0 - std::lround(w * 100.0)) < 1e-9);  // on the grid
    CHECK(1.0 - w * std::tanh(1.0 / w) <= delta);                // admissible
    double prev = w - 0.01;
    if (prev >= 0.01) CHECK(1.0 - prev * std::tanh(1.0 / prev) > delta);  // minimal
  }
  // tail slack shrinks as the width grows, so looser targets admit narrower clips
  CHECK(min_clip_width(0.3) <= min_clip_width(0.05));
}

TEST_CASE("smooth clip stays within twice the tolerance on the widened interval") {
  for (double delta : {0.05, 0.1, 0.2}) {
    double w = min_clip_width(delta);
    double worst = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      double t = -delta + (1.0 + 2.0 * delta) * i / 20000.0;
      worst = std::max(worst, std::abs(clip_tanh(t, w, delta) - t));
    }
    CHECK(worst <= 2.0 * delta + 1e-12);
  }
}

TEST_CASE("clipping a uniformly close approximation costs at most a factor three") {
  // phi has range [0,1]; L is off by at most Delta in sup norm
  auto phi = [](double t) { return 0.5 * (1.0 + std::sin(3.0 * t)); };
  const double Delta = 0.08;
  auto L = [&](double t) { return phi(t) + Delta * std::sin(17.0 * t); };
  const double w = min_clip_width(Delta);

  double worst_tanh = 0.0, worst_relu = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    double t = -2.0 + 4.0 * i / 100000.0;
    worst_tanh = std::max(worst_tanh, std::abs(phi(t) - clip_tanh(L(t), w, Delta)));
    worst_relu = std::max(worst_relu, std::abs(phi(t) - clip_relu(L(t))));
  }
  CHECK(worst_tanh <= 3.0 * Delta + 1e-12);
  // the hard clip is 1-Lipschitz and fixes [0,1], so it never amplifies at all
  CHECK(worst_relu <= Delta + 1e-15);
}

TEST_CASE("piecewise-linear interpolant: breakpoints, affine exactness, sup bound") {
  // affine targets are reproduced identically
  auto aff = [](double z) { return 2.5 * z - 0.75; };
  SplineOuter sa = build_spline_interpolant(aff, 7, 3.0);
  for (int i = 0; i <= 1000; ++i) {
    double z = 3.0 * i / 1000.0;
    CHECK(sa(z) == doctest::Approx(aff(z)).epsilon(1e-13));
  }

  const double d = 5.0;  // span; the target |z - d/2| has Lipschitz constant 1
  auto g = [&](double z) { return std::abs(z - d / 2.0); };
  for (int n : {1, 2, 4, 8, 16, 32, 64}) {
    SplineOuter s = build_spline_interpolant(g, n, d);
    REQUIRE(int(s.knots.size()) == n);
    REQUIRE(int(s.weights.size()) == n);
    for (int k = 1; k <= n; ++k) {
      CHECK(s.knots[k - 1] == doctest::Approx(k * d / (n + 1)).epsilon(1e-14));
      // interpolation property at every breakpoint
      double z = k * d / (n + 1);
      CHECK(s(z) == doctest::Approx(g(z)).epsilon(1e-12).scale(1.0));
    }
    CHECK(s(0.0) == doctest::Approx(g(0.0)).epsilon(1e-13));
    CHECK(s(d) == doctest::Approx(g(d)).epsilon(1e-13));

    double worst = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      double z = d * i / 10000.0;
      worst = std::max(worst, std::abs(s(z) - g(z)));
    }
    CHECK(worst <= d / (2.0 * (n + 1)) + 1e-12);
    // even knot counts straddle the kink and so attain the bound exactly
    if (n % 2 == 0) CHECK(worst > d / (2.0 * (n + 1)) - 1e-3);
    if (n % 2 == 1) CHECK(worst < 1e-12);  // odd counts put a knot on the kink
  }
}

TEST_CASE("composite evaluator agrees with a hand-rolled tiny case") {
  // d=1, p=1: three order-1 polynomials on the hat basis, identity outer
  KpnModel m;
  m.d = 1;
  m.p = 1;
  m.mode = ClipMode::Relu;
  m.A = Mat(3, 2);
  m.A << 0.2, 0.8,   // L_0(x) = 0.2(1-x) + 0.8x
      -0.5, 0.5,     // L_1(x) = -0.5(1-x) + 0.5x
      1.5, 1.5;      // L_2 = 1.5 constant, clips to 1
  m.lambda = Vec::Ones(1);
  m.basis = std::make_shared<LagrangeBasis>(1, 0.0, 1.0);
  m.spline.slope = 2.0;
  m.spline.offset = -0.25;
  m.spline.span = 1.0;

  auto S = [](double z) { return 2.0 * z - 0.25; };
  double x = 0.5;
  double l0 = 0.2 * 0.5 + 0.8 * 0.5, l1 = -0.5 * 0.5 + 0.5 * 0.5, l2 = 1.5;
  double want = S(clip_relu(l0)) + S(clip_relu(l1)) + S(clip_relu(l2));
  CHECK(kpn_eval(m, &x) == doctest::Approx(want).epsilon(1e-15));
  // explicitly: 0.5, 0, 1 after clipping
  CHECK(want == doctest::Approx(S(0.5) + S(0.0) + S(1.0)).epsilon(1e-15));
}

TEST_CASE("closed parameter counts and the materialized walk agree") {
  // rectifier variant: n knot/weight pairs + d mixing weights + the
  // coefficient matrix
  CHECK(kpn_param_count(1, 1, 1, ClipMode::Relu) == 9);     // 2+1+2*3
  CHECK(kpn_param_count(3, 10, 2, ClipMode::Relu) == 42);   // 20+2+4*5
  CHECK(kpn_param_count(2, 5, 3, ClipMode::Relu) == 34);    // 10+3+3*7
  // smooth variant at the sizes used for the worked example
  CHECK(kpn_param_count(1, 6, 2, ClipMode::Tanh) == 293);   // (2d+6N+14)(N-1)+13+(p+1)(2d+1)

  for (auto [p, n, d] : {std::tuple{1, 1, 1}, {3, 10, 2}, {2, 5, 3}, {5, 8, 4}}) {
    KpnModel m = random_kpn(p, n, d, 77);
    CHECK(kpn_walk_count(m) == kpn_param_count(p, n, d, ClipMode::Relu));
  }
}

TEST_CASE("random composite models survive the round trip into dense layers") {
  Rng rng(31, 7);
  for (auto [p, n, d] : {std::tuple{1, 2, 1}, {2, 4, 2}, {3, 3, 3}, {4, 6, 2}}) {
    KpnModel m = random_kpn(p, n, d, uint64_t(100 * p + 10 * n + d));
    KpnNetwork net = kpn_to_network(m);
    const int B = 250;
    Mat X(d, B);
    for (int c = 0; c < B; ++c)
      for (int r = 0; r < d; ++r) X(r, c) = rng.range(0.0, 1.0);
    Vec via_net = kpn_network_eval(net, X);
    for (int c = 0; c < B; ++c) {
      double direct = kpn_eval(m, X.col(c).data());
      CHECK(via_net[c] == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
    }
  }

  KpnModel t = random_kpn(2, 3, 2, 5);
  t.mode = ClipMode::Tanh;
  CHECK_THROWS(kpn_to_network(t));
}

TEST_CASE("rate harness: synthetic errors pass straight through to the slope") {
  Problem P = make_problem("fit2d_eq41", 2);
  RateConfig cfg;
  cfg.sweep = "vary_n";
  cfg.values = {5, 15, 30};
  cfg.synthetic_errs = {0.2, 0.2 / 3.0, 0.2 / 6.0};  // exact 1/n decay
  RateResult r = rate_experiment(P, cfg);
  CHECK(r.sizes == cfg.values);
  CHECK(r.errs == cfg.synthetic_errs);
  CHECK(r.slope == doctest::Approx(-1.0).epsilon(1e-12));

  cfg.synthetic_errs = {0.2, 0.2};
  CHECK_THROWS(rate_experiment(P, cfg));  // per-point errors must match values

  cfg.synthetic_errs = {0.1, 0.1, 0.1};
  cfg.sweep = "no_such_sweep";
  CHECK_NOTHROW(rate_experiment(P, cfg));  // sweep name unused when synthetic
  cfg.synthetic_errs.clear();
  cfg.values = {2, 3, 4};
  CHECK_THROWS(rate_experiment(P, cfg));
}

TEST_CASE("rate harness: trained points come back finite and sized correctly") {
  Problem P = make_problem("fit2d_eq41", 1);
  RateConfig cfg;
  cfg.sweep = "vary_n";
  cfg.values = {3, 4, 5};
  cfg.base.d = 2;
  cfg.base.p = 2;
  cfg.base.hd = 1;
  cfg.base.hw = 4;
  cfg.base.gd = 2;
  cfg.train.epochs = 5;
  cfg.train.nf = 32;
  cfg.train.rel_every = 1;
  cfg.seeds = {1, 2, 3};
  RateResult r = rate_experiment(P, cfg);
  REQUIRE(r.sizes.size() == 3);
  CHECK(r.sizes == cfg.values);
  for (double e : r.errs) {
    CHECK(std::isfinite(e));
    CHECK(e > 0.0);
  }
  CHECK(std::isfinite(r.slope));
}
