#include "kho/diag.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace kho {

double rel_l2(const Vec& u, const Vec& ustar) {
  double den = ustar.norm();
  if (den == 0.0) throw std::domain_error("rel_l2 undefined for a zero exact solution");
  return (u - ustar).norm() / den;
}

double rel_l2(const Model& m, const Problem& prob) {
  Mat G = prob.dom.eval_grid();
  return rel_l2(model_eval(m, G), prob.exact_on(G));
}

std::complex<double> dft_coeff(const Vec& f, double gamma) {
  const int n = int(f.size());
  std::complex<double> acc(0.0, 0.0);
  for (int j = 0; j < n; ++j) {
    double ph = -2.0 * M_PI * gamma * j / n;
    acc += f[j] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return acc / double(n);
}

std::vector<SpectrumRow> spectrum2d(const std::function<double(double, double)>& f,
                                    const std::function<Vec(const Mat&)>& u, int n,
                                    const std::vector<double>& gammas) {
  // x1 varies fastest: column r*n + j holds (j/n, r/n)
  Mat X(2, n * n);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < n; ++j) {
      X(0, r * n + j) = double(j) / n;
      X(1, r * n + j) = double(r) / n;
    }
  Vec fv(n * n), uv = u(X);
  for (int c = 0; c < n * n; ++c) fv[c] = f(X(0, c), X(1, c));

  std::vector<SpectrumRow> rows;
  for (double g : gammas) {
    SpectrumRow row;
    row.gamma = g;
    for (int r = 0; r < n; ++r) {
      auto Ff = dft_coeff(fv.segment(r * n, n), g);
      auto Fu = dft_coeff(uv.segment(r * n, n), g);
      row.target += std::abs(Ff);
      row.model += std::abs(Fu);
      row.diff_complex += std::abs(Ff - Fu);
    }
    row.target /= n;
    row.model /= n;
    row.diff_complex /= n;
    row.diff = std::abs(row.target - row.model);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SpectrumRow> spectrum2d(const Model& m, const Problem& prob, int n,
                                    const std::vector<double>& gammas) {
  if (prob.dom.d != 2 || prob.dom.kind != Domain::Cube)
    throw std::invalid_argument("spectrum needs a 2-D cube problem");
  const double lo = prob.dom.lo, w = prob.dom.hi - prob.dom.lo;
  auto f = [&](double x1, double x2) {
    double x[2] = {lo + w * x1, lo + w * x2};
    return prob.exact(x);
  };
  auto u = [&](const Mat& X) {
    Mat Xs = (X.array() * w + lo).matrix();
    return model_eval(m, Xs);
  };
  return spectrum2d(f, u, n, gammas);
}

double fit_rate(const std::vector<double>& sizes, const std::vector<double>& errs) {
  if (sizes.size() != errs.size() || sizes.size() < 3)
    throw std::invalid_argument("fit_rate needs >= 3 (size, err) pairs");
  const int n = int(sizes.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    if (!(sizes[i] > 0.0) || !(errs[i] > 0.0))
      throw std::domain_error("fit_rate needs positive sizes and errors");
    double x = std::log(sizes[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SliceReport slice_errors(const Model& m, const Problem& prob) {
  SliceReport rep;
  rep.X = prob.dom.eval_grid();
  rep.abs_err = (model_eval(m, rep.X) - prob.exact_on(rep.X)).cwiseAbs();
  return rep;
}

// -------- CSV --------

std::string fmt_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {
std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}
}  // namespace

// wall time stays out of the CSV so a rerun of the same manifest is
// byte-identical; timings go to a side file instead
void write_train_csv(const std::string& path, const std::vector<TrainRecord>& recs) {
  auto out = open_csv(path);
  out << "epoch,lf,lb,beta,lr,rel\n";
  for (const auto& r : recs) {
    out << r.epoch << ',' << fmt_g17(r.lf) << ',' << fmt_g17(r.lb) << ',' << fmt_g17(r.beta)
        << ',' << fmt_g17(r.lr) << ',';
    if (std::isfinite(r.rel)) out << fmt_g17(r.rel);  // blank when not evaluated
    out << '\n';
  }
}

void write_spectrum_csv(const std::string& path, const std::vector<SpectrumRow>& rows) {
  auto out = open_csv(path);
  out << "gamma,target,model,diff,diff_complex\n";
  for (const auto& r : rows)
    out << fmt_g17(r.gamma) << ',' << fmt_g17(r.target) << ',' << fmt_g17(r.model) << ','
        << fmt_g17(r.diff) << ',' << fmt_g17(r.diff_complex) << '\n';
}

void write_slice_csv(const std::string& path, const SliceReport& rep) {
  auto out = open_csv(path);
  out << "x1,x2,abs_err\n";
  for (int c = 0; c < rep.X.cols(); ++c)
    out << fmt_g17(rep.X(0, c)) << ',' << fmt_g17(rep.X(1, c)) << ',' << fmt_g17(rep.abs_err[c])
        << '\n';
}

void write_rates_csv(const std::string& path, const std::vector<double>& sizes,
                     const std::vector<double>& errs, double slope) {
  auto out = open_csv(path);
  out << "size,rel,slope\n";  // slope repeated per row for a flat schema
  for (size_t i = 0; i < sizes.size(); ++i)
    out << fmt_g17(sizes[i]) << ',' << fmt_g17(errs[i]) << ',' << fmt_g17(slope) << '\n';
}

}  // namespace kho
