#pragma once
#include <complex>
#include <string>
#include <vector>

#include "kho/model.hpp"
#include "kho/problem.hpp"
#include "kho/train.hpp"

namespace kho {

// discrete 2-norm ratio ||u - ustar|| / ||ustar||; throws on zero denominator
double rel_l2(const Vec& u, const Vec& ustar);
// same, over the problem's eval grid
double rel_l2(const Model& m, const Problem& prob);

// F(gamma) = (1/n) sum_j f_j exp(-2 pi i j gamma / n), the x_j = j/n grid
std::complex<double> dft_coeff(const Vec& f, double gamma);

// Per-frequency content of target vs model on an n x n grid over [0,1)^2:
// transform along x1 at each fixed x2 row, then average rows.  `target`/`model`
// are the row-averaged magnitudes; `diff` their absolute difference;
// `diff_complex` averages |F[f] - F[u]| of the complex row coefficients.
struct SpectrumRow {
  double gamma = 0, target = 0, model = 0, diff = 0, diff_complex = 0;
};
std::vector<SpectrumRow> spectrum2d(const std::function<double(double, double)>& f,
                                    const std::function<Vec(const Mat&)>& u, int n,
                                    const std::vector<double>& gammas);
std::vector<SpectrumRow> spectrum2d(const Model& m, const Problem& prob, int n = 100,
                                    const std::vector<double>& gammas = {2, 4, 8, 16});

// least-squares slope of log(err) against log(size); needs >= 3 positive pairs
double fit_rate(const std::vector<double>& sizes, const std::vector<double>& errs);

// |u - u*| over the eval grid (the grid itself is the (x1,x2) slice when d > 2)
struct SliceReport {
  Mat X;        // grid points, d x m
  Vec abs_err;  // m entries in grid order
};
SliceReport slice_errors(const Model& m, const Problem& prob);

// -------- CSV emitters (%.17g doubles, comma separated) --------

std::string fmt_g17(double v);
void write_train_csv(const std::string& path, const std::vector<TrainRecord>& recs);
void write_spectrum_csv(const std::string& path, const std::vector<SpectrumRow>& rows);
void write_slice_csv(const std::string& path, const SliceReport& rep);
void write_rates_csv(const std::string& path, const std::vector<double>& sizes,
                     const std::vector<double>& errs, double slope);

}  // namespace kho
