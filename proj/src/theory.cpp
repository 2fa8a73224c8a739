#include "kho/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kho/rng.hpp"

namespace kho {

namespace {
double relu(double t) { return t > 0.0 ? t : 0.0; }
}  // namespace

double clip_relu(double t) { return 1.0 - relu(1.0 - relu(t)); }

double clip_tanh(double t, double w, double delta) {
  return w * std::tanh((t + delta) / (w * (1.0 + 2.0 * delta)));
}

double min_clip_width(double delta) {
  if (!(delta > 0.0)) throw std::domain_error("min_clip_width needs delta > 0");
  for (int k = 1; k <= 10000; ++k) {
    double w = 0.01 * k;
    if (1.0 - w * std::tanh(1.0 / w) <= delta) return w;
  }
  throw std::domain_error("no grid width satisfies the clip condition for this delta");
}

// -------- spline outer --------

double SplineOuter::operator()(double z) const {
  double s = offset + slope * z;
  for (size_t k = 0; k < knots.size(); ++k) s += weights[k] * relu(z - knots[k]);
  return s;
}

SplineOuter build_spline_interpolant(const std::function<double(double)>& g, int n, double span) {
  if (n < 1) throw std::invalid_argument("spline needs >= 1 knot");
  if (!(span > 0.0)) throw std::invalid_argument("spline span must be positive");
  SplineOuter S;
  S.span = span;
  const double h = span / (n + 1);
  std::vector<double> gv(n + 2);
  for (int k = 0; k <= n + 1; ++k) gv[k] = g(k * h);
  S.offset = gv[0];
  S.slope = (gv[1] - gv[0]) / h;
  double prev = S.slope;
  for (int k = 1; k <= n; ++k) {
    double sk = (gv[k + 1] - gv[k]) / h;
    S.knots.push_back(k * h);
    S.weights.push_back(sk - prev);
    prev = sk;
  }
  return S;
}

// -------- composite --------

namespace {

// clipped polynomial values for one coordinate: rows q of A times basis(x)
Vec clipped_rows(const KpnModel& m, double x) {
  Vec psi(m.p + 1);
  m.basis->eval(x, psi.data());
  Vec L = m.A * psi;
  for (int q = 0; q < L.size(); ++q)
    L[q] = m.mode == ClipMode::Relu ? clip_relu(L[q]) : clip_tanh(L[q], m.w, m.delta);
  return L;
}

}  // namespace

double kpn_eval(const KpnModel& m, const double* x) {
  const int Q = 2 * m.d + 1;
  Vec z = Vec::Zero(Q);
  for (int i = 0; i < m.d; ++i) z += m.lambda[i] * clipped_rows(m, x[i]);
  if (m.mode == ClipMode::Relu) {
    double s = 0.0;
    for (int q = 0; q < Q; ++q) s += m.spline(z[q]);
    return s;
  }
  Mat out = forward(m.ghat, z.transpose());  // 1 x Q batch through ghat
  return out.sum();
}

long long kpn_param_count(int p, int n_or_N, int d, ClipMode mode) {
  const long long coeffs = (long long)(p + 1) * (2 * d + 1);
  if (mode == ClipMode::Relu) return 2LL * n_or_N + d + coeffs;
  const long long N = n_or_N;
  return (2LL * d + 6 * N + 14) * (N - 1) + 13 + coeffs;
}

long long kpn_walk_count(const KpnModel& m) {
  long long c = (long long)m.A.size() + m.lambda.size();
  if (m.mode == ClipMode::Relu) return c + (long long)(m.spline.knots.size() + m.spline.weights.size());
  for (const auto& l : m.ghat) c += (long long)l.W.size() + l.b.size();
  return c;
}

KpnModel random_kpn(int p, int n, int d, uint64_t seed) {
  KpnModel m;
  m.d = d;
  m.p = p;
  m.mode = ClipMode::Relu;
  m.basis = std::make_shared<LagrangeBasis>(p, 0.0, 1.0);
  Rng ra(seed, 0), rl(seed, 1), rs(seed, 2);
  m.A = Mat::NullaryExpr(2 * d + 1, p + 1, [&](Eigen::Index, Eigen::Index) {
    return ra.range(-1.0, 1.0);
  });
  m.lambda = Vec::NullaryExpr(d, [&](Eigen::Index) { return 0.1 + 0.9 * rl.unit(); });
  m.spline.span = double(d);
  std::vector<double> ks(n);
  for (double& k : ks) k = rs.range(0.05, 0.95) * d;
  std::sort(ks.begin(), ks.end());
  m.spline.knots = ks;
  m.spline.weights.resize(n);
  for (double& w : m.spline.weights) w = rs.range(-1.0, 1.0);
  m.spline.slope = rs.range(-1.0, 1.0);
  m.spline.offset = rs.range(-1.0, 1.0);
  return m;
}

// -------- exact network form (relu variant) --------

KpnNetwork kpn_to_network(const KpnModel& m) {
  if (m.mode != ClipMode::Relu)
    throw std::invalid_argument("network form is defined for the relu variant");
  const int d = m.d, Q = 2 * d + 1, P = m.p + 1;
  const int n = int(m.spline.knots.size());
  KpnNetwork net;
  net.basis = m.basis;
  net.d = d;

  DenseLayer l1;  // relu(L_q(x_i)) on the per-coordinate basis features
  l1.act = Act::ReLU;
  l1.W = Mat::Zero(d * Q, d * P);
  l1.b = Vec::Zero(d * Q);
  for (int i = 0; i < d; ++i) l1.W.block(i * Q, i * P, Q, P) = m.A;

  DenseLayer l2;  // relu(1 - y)
  l2.act = Act::ReLU;
  l2.W = -Mat::Identity(d * Q, d * Q);
  l2.b = Vec::Ones(d * Q);

  DenseLayer l3 = l2;  // 1 - y, closing the clip
  l3.act = Act::Identity;

  DenseLayer l4;  // relu(sum_i lambda_i clip_qi - t_k), t_0 = 0
  l4.act = Act::ReLU;
  l4.W = Mat::Zero(Q * (n + 1), d * Q);
  l4.b = Vec::Zero(Q * (n + 1));
  for (int q = 0; q < Q; ++q)
    for (int k = 0; k <= n; ++k) {
      int r = q * (n + 1) + k;
      for (int i = 0; i < d; ++i) l4.W(r, i * Q + q) = m.lambda[i];
      l4.b[r] = k == 0 ? 0.0 : -m.spline.knots[k - 1];
    }

  DenseLayer l5;  // spline weights and the summed offsets
  l5.act = Act::Identity;
  l5.W = Mat::Zero(1, Q * (n + 1));
  for (int q = 0; q < Q; ++q)
    for (int k = 0; k <= n; ++k)
      l5.W(0, q * (n + 1) + k) = k == 0 ? m.spline.slope : m.spline.weights[k - 1];
  l5.b = Vec::Constant(1, Q * m.spline.offset);

  net.stack = {l1, l2, l3, l4, l5};
  return net;
}

Vec kpn_network_eval(const KpnNetwork& net, const Mat& X) {
  const int d = net.d, P = int(net.basis->nodes().size());
  Mat F(d * P, X.cols());
  std::vector<double> psi(P);
  for (int s = 0; s < X.cols(); ++s)
    for (int i = 0; i < d; ++i) {
      net.basis->eval(X(i, s), psi.data());
      for (int j = 0; j < P; ++j) F(i * P + j, s) = psi[j];
    }
  return forward(net.stack, F).row(0).transpose();
}

// -------- empirical rates --------

RateResult rate_experiment(const Problem& prob, const RateConfig& cfg) {
  RateResult res;
  if (!cfg.synthetic_errs.empty()) {
    if (cfg.synthetic_errs.size() != cfg.values.size())
      throw std::invalid_argument("synthetic error count must match sweep values");
    res.sizes = cfg.values;
    res.errs = cfg.synthetic_errs;
    res.slope = fit_rate(res.sizes, res.errs);
    return res;
  }
  for (double v : cfg.values) {
    ModelSpec spec = cfg.base;
    spec.family = Family::KHOrder;
    if (cfg.sweep == "vary_n") {
      spec.gw = int(std::lround(v));
      spec.act = Act::ReLU;
    } else if (cfg.sweep == "vary_p") {
      spec.p = int(std::lround(v));
      spec.act = Act::ReLU;
    } else if (cfg.sweep == "vary_N") {
      spec.gw = 6 * int(std::lround(v));
      spec.act = Act::Tanh;
    } else {
      throw std::invalid_argument("unknown sweep '" + cfg.sweep + "'");
    }
    std::vector<double> rels;
    for (uint64_t seed : cfg.seeds) {
      Model model = build_model(spec, seed);
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      TrainResult tr = train(model, prob, tc);
      rels.push_back(tr.min_rel);
    }
    std::sort(rels.begin(), rels.end());
    size_t h = rels.size() / 2;
    double med = rels.size() % 2 ? rels[h] : 0.5 * (rels[h - 1] + rels[h]);
    res.sizes.push_back(v);
    res.errs.push_back(med);
  }
  res.slope = fit_rate(res.sizes, res.errs);
  return res;
}

}  // namespace kho
