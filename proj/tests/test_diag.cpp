#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kho/diag.hpp"
#include "kho/rng.hpp"

using namespace kho;

TEST_CASE("relative error is a plain norm ratio") {
  Vec ustar(4);
  ustar << 1.0, -2.0, 2.0, 4.0;
  CHECK(rel_l2(ustar, ustar) == 0.0);
  CHECK(rel_l2(1.25 * ustar, ustar) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(rel_l2(Vec::Zero(4), ustar) == doctest::Approx(1.0).epsilon(1e-14));

  // straight-loop oracle on random data
  Rng rng(12, 0);
  Vec u(50), w(50);
  for (int i = 0; i < 50; ++i) {
    u[i] = rng.range(-2.0, 2.0);
    w[i] = rng.range(-2.0, 2.0);
  }
  double num = 0, den = 0;
  for (int i = 0; i < 50; ++i) {
    num += (u[i] - w[i]) * (u[i] - w[i]);
    den += w[i] * w[i];
  }
  CHECK(rel_l2(u, w) == doctest::Approx(std::sqrt(num / den)).epsilon(1e-14));
  CHECK_THROWS(rel_l2(u, Vec::Zero(50)));

  // the model overload just runs the model over the problem's fixed grid
  ModelSpec s;
  s.family = Family::PINN;
  s.d = 2;
  s.L = 2;
  s.W = 6;
  Model m = build_model(s, 4);
  Problem P = make_problem("fit2d_eq41", 2);
  Mat G = P.dom.eval_grid();
  CHECK(rel_l2(m, P) == rel_l2(model_eval(m, G), P.exact_on(G)));
}

TEST_CASE("transform picks out single tones exactly") {
  const int n = 100;
  Vec fs(n), fc(n), one(n);
  for (int j = 0; j < n; ++j) {
    fs[j] = std::sin(2 * M_PI * 4 * j / double(n));
    fc[j] = std::cos(2 * M_PI * 7 * j / double(n));
    one[j] = 3.25;
  }
  CHECK(std::abs(dft_coeff(fs, 4)) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(dft_coeff(fc, 7)) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(dft_coeff(fs, 6)) < 1e-10);   // off-tone bins are silent
  CHECK(std::abs(dft_coeff(fc, 2)) < 1e-10);
  CHECK(std::abs(dft_coeff(one, 5)) < 1e-10);  // constants live at gamma = 0
  CHECK(dft_coeff(one, 0).real() == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(dft_coeff(one, 0).imag() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("transform agrees with the direct quadratic-time sum") {
  const int n = 64;
  Rng rng(8, 0);
  Vec f(n);
  for (int j = 0; j < n; ++j) f[j] = rng.range(-1.0, 1.0);
  for (double gamma : {0.0, 1.0, 5.0, 13.0, 31.5, 63.0}) {
    std::complex<double> acc(0, 0);
    for (int j = 0; j < n; ++j)
      acc += f[j] * std::exp(std::complex<double>(0, -2 * M_PI * j * gamma / n));
    acc /= double(n);
    std::complex<double> got = dft_coeff(f, gamma);
    CHECK(std::abs(got - acc) < 1e-12);
  }
  // linearity
  Vec g(n);
  for (int j = 0; j < n; ++j) g[j] = rng.range(-1.0, 1.0);
  std::complex<double> lin = dft_coeff(Vec(2.0 * f - 3.0 * g), 5.0);
  std::complex<double> split = 2.0 * dft_coeff(f, 5.0) - 3.0 * dft_coeff(g, 5.0);
  CHECK(std::abs(lin - split) < 1e-12);
}

TEST_CASE("per-frequency comparison of target and model fields") {
  // target has a pure gamma=4 tone in x1; "model" adds a gamma=8 tone
  auto f = [](double x1, double) { return std::sin(2 * M_PI * 4 * x1); };
  auto u = [](const Mat& X) {
    Vec v(X.cols());
    for (int s = 0; s < X.cols(); ++s)
      v[s] = std::sin(2 * M_PI * 4 * X(0, s)) + 0.5 * std::sin(2 * M_PI * 8 * X(0, s));
    return v;
  };
  auto rows = spectrum2d(f, u, 100, {2, 4, 8, 16});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].gamma == 2);
  CHECK(rows[0].target < 1e-10);
  CHECK(rows[0].model < 1e-10);
  CHECK(rows[1].target == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rows[1].model == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rows[1].diff < 1e-10);          // shared tone cancels in magnitude
  CHECK(rows[1].diff_complex < 1e-10);  // and in phase
  CHECK(rows[2].target < 1e-10);
  CHECK(rows[2].model == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(rows[2].diff == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(rows[2].diff_complex == doctest::Approx(0.25).epsilon(1e-10));

  for (const auto& r : rows) {
    CHECK(std::isfinite(r.diff_complex));
    CHECK(r.diff <= r.diff_complex + 1e-12);  // triangle inequality, row by row
  }
}

TEST_CASE("an untrained zeroed model contributes nothing to the spectrum") {
  ModelSpec s;
  s.family = Family::KHOrder;
  s.d = 2;
  s.p = 2;
  s.hd = 1;
  s.hw = 4;
  s.gd = 2;
  s.gw = 5;
  Model m = build_model(s, 2);
  m.outer.back().W.setZero();  // scalar head off: u == 0 everywhere
  m.outer.back().b.setZero();
  Problem P = make_problem("fit2d_eq41", 2);
  auto rows = spectrum2d(m, P);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.model == 0.0);  // exactly, not approximately
    CHECK(r.target > 0.0);
    CHECK(r.diff == r.target);
    CHECK(r.diff_complex == r.target);
    CHECK(std::isfinite(r.target));
  }
}

TEST_CASE("log-log slope fitting recovers known decay rates") {
  std::vector<double> sizes = {5, 15, 30, 45, 60};
  auto make = [&](double c, double s) {
    std::vector<double> e;
    for (double n : sizes) e.push_back(c * std::pow(n, s));
    return e;
  };
  CHECK(fit_rate(sizes, make(2.0, -1.0)) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit_rate(sizes, make(0.3, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit_rate(sizes, make(1.0, -0.5)) == doctest::Approx(-0.5).epsilon(1e-12));
  // scaling the errors shifts the intercept, not the slope
  CHECK(fit_rate(sizes, make(77.0, -1.0)) == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_THROWS(fit_rate({1, 2}, {1, 2}));
  CHECK_THROWS(fit_rate({1, 2, 3}, {1.0, -1.0, 0.5}));
  CHECK_THROWS(fit_rate({1, 2, 3}, {1, 2}));
}

TEST_CASE("slice report walks the evaluation grid") {
  ModelSpec s;
  s.family = Family::PINN;
  s.d = 10;
  s.L = 2;
  s.W = 5;
  Model m = build_model(s, 6);
  Problem P = make_problem("fit10d_eq43", 2);
  SliceReport rep = slice_errors(m, P);
  Mat G = P.dom.eval_grid();
  REQUIRE(rep.X.cols() == G.cols());
  CHECK((rep.X - G).cwiseAbs().maxCoeff() == 0.0);
  Vec u = model_eval(m, G), ustar = P.exact_on(G);
  for (int i : {0, 17, 5000, 9999})
    CHECK(rep.abs_err[i] == std::abs(u[i] - ustar[i]));
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("csv emitters: schemas, blank skipped errors, round-trip precision") {
  const std::string dir = "/tmp/kho_diag_test";
  std::filesystem::create_directories(dir);

  // doubles survive the %.17g round trip bit for bit
  double tricky = 0.1 + 0.2;
  CHECK(std::stod(fmt_g17(tricky)) == tricky);
  CHECK(std::stod(fmt_g17(M_PI)) == M_PI);
  CHECK(std::stod(fmt_g17(1e-300)) == 1e-300);
  CHECK(fmt_g17(2.0) == "2");

  std::vector<TrainRecord> recs(2);
  recs[0].epoch = 0;
  recs[0].lf = 1.5;
  recs[0].lb = 0.25;
  recs[0].beta = 1.0;
  recs[0].lr = 4e-3;
  recs[0].rel = 0.75;
  recs[1].epoch = 1;
  recs[1].lf = 1.25;
  recs[1].lb = 0.5;
  recs[1].beta = 1.9;
  recs[1].lr = 4e-3;  // rel stays NaN: off-cadence epoch
  write_train_csv(dir + "/train.csv", recs);
  std::string t = slurp(dir + "/train.csv");
  CHECK(t.substr(0, t.find('\n')) == "epoch,lf,lb,beta,lr,rel");
  CHECK(t.find("0,1.5,0.25,1,0.0040000000000000001,0.75\n") != std::string::npos);
  CHECK(t.find("1,1.25,0.5,1.8999999999999999,0.0040000000000000001,\n") != std::string::npos);

  std::vector<SpectrumRow> rows(1);
  rows[0] = {4.0, 0.5, 0.25, 0.25, 0.3};
  write_spectrum_csv(dir + "/spectrum.csv", rows);
  std::string sp = slurp(dir + "/spectrum.csv");
  CHECK(sp == "gamma,target,model,diff,diff_complex\n4,0.5,0.25,0.25,0.29999999999999999\n");

  write_rates_csv(dir + "/rates.csv", {5, 15, 30}, {0.2, 0.066, 0.033}, -0.5);
  std::string ra = slurp(dir + "/rates.csv");
  CHECK(ra.substr(0, ra.find('\n')) == "size,rel,slope");
  CHECK(ra.find("5,0.20000000000000001,-0.5\n") != std::string::npos);
  CHECK(ra.find("15,0.066000000000000003,-0.5\n") != std::string::npos);
  CHECK(ra.find("30,0.033000000000000002,-0.5\n") != std::string::npos);

  SliceReport rep;
  rep.X = Mat::Zero(3, 2);
  rep.X << 0.5, 1.0, 0.25, 0.75, 0.1, 0.9;
  rep.abs_err = Vec(2);
  rep.abs_err << 0.125, 0.0625;
  write_slice_csv(dir + "/slice.csv", rep);
  std::string sl = slurp(dir + "/slice.csv");
  CHECK(sl.substr(0, sl.find('\n')) == "x1,x2,abs_err");
  CHECK(sl.find("0.5,0.25,0.125\n") != std::string::npos);
  CHECK(sl.find("1,0.75,0.0625\n") != std::string::npos);
}
