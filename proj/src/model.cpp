#include "kho/model.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "kho/rng.hpp"

namespace kho {

Family family_from_string(const std::string& s) {
  if (s == "pinn") return Family::PINN;
  if (s == "horder") return Family::HOrder;
  if (s == "khorder") return Family::KHOrder;
  throw std::invalid_argument("unknown family '" + s + "' (pinn|horder|khorder)");
}
std::string family_name(Family f) {
  switch (f) {
    case Family::PINN: return "pinn";
    case Family::HOrder: return "horder";
    case Family::KHOrder: return "khorder";
  }
  return "?";
}
Act act_from_string(const std::string& s) {
  if (s == "identity") return Act::Identity;
  if (s == "relu") return Act::ReLU;
  if (s == "tanh") return Act::Tanh;
  throw std::invalid_argument("unknown activation '" + s + "' (identity|relu|tanh)");
}
std::string act_name(Act a) {
  switch (a) {
    case Act::Identity: return "identity";
    case Act::ReLU: return "relu";
    case Act::Tanh: return "tanh";
  }
  return "?";
}

// -------- closed-form parameter counts --------

ParamCount count_params(const ModelSpec& s) {
  bigint total = 0;
  const bigint d = s.d;
  switch (s.family) {
    case Family::PINN: {
      bigint W = s.W;
      total = (d * W + W) + bigint(s.L - 1) * (W * W + W) + (W + 1);
      break;
    }
    case Family::HOrder: {
      bigint W = s.W;
      bigint T = boost::multiprecision::pow(bigint(s.p + 1), unsigned(s.d));
      total = (T * W + W) + bigint(s.L - 1) * (W * W + W) + (W + 1);
      break;
    }
    case Family::KHOrder: {
      bigint hw = s.hw, gw = s.gw, od = 2 * d + 1;
      bigint inner = (bigint(s.p + 1) * hw + hw) + bigint(s.hd - 1) * (hw * hw + hw) +
                     (hw * od + od);
      bigint outer = (d * od * gw + gw) + bigint(s.gd - 1) * (gw * gw + gw) + (gw + 1);
      total = inner + outer;
      break;
    }
  }
  ParamCount out;
  out.total = total;
  out.intractable = total > bigint(uint64_t(kParamCap));
  return out;
}

std::string sci5(const bigint& n) {
  std::string s = n.str();
  int e = int(s.size()) - 1;
  std::string digits;
  if (s.size() <= 5) {
    digits = s + std::string(5 - s.size(), '0');
  } else {
    digits = s.substr(0, 5);
    if (s[5] >= '5') {  // round half up on the decimal string
      int i = 4;
      while (i >= 0 && digits[i] == '9') digits[i--] = '0';
      if (i < 0) {
        digits = "10000";
        ++e;
      } else {
        ++digits[i];
      }
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c.%sE+%02d", digits[0], digits.substr(1).c_str(), e);
  return buf;
}

// -------- construction --------

namespace {

DenseLayer make_layer(int out, int in, Act act, uint64_t seed, uint64_t stream) {
  DenseLayer l;
  l.W.resize(out, in);
  l.b = Vec::Zero(out);
  l.act = act;
  const double bound = std::sqrt(6.0 / double(in + out));
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c)
      l.W(r, c) = bound * (2.0 * unit_at(seed, stream, uint64_t(r) * in + c) - 1.0);
  return l;
}

void check_spec(const ModelSpec& s) {
  if (s.d < 1) throw std::invalid_argument("model: d must be >= 1");
  if (s.hi <= s.lo) throw std::invalid_argument("model: empty basis interval");
  if (s.family == Family::PINN || s.family == Family::HOrder) {
    if (s.L < 1 || s.W < 1) throw std::invalid_argument("model: need L >= 1, W >= 1");
  }
  if (s.family == Family::HOrder || s.family == Family::KHOrder) {
    if (s.p < 1) throw std::invalid_argument("model: basis order p must be >= 1");
  }
  if (s.family == Family::KHOrder) {
    if (s.hd < 1 || s.hw < 1 || s.gd < 1 || s.gw < 1)
      throw std::invalid_argument("model: need hd,hw,gd,gw >= 1");
  }
}

}  // namespace

Model build_model(const ModelSpec& spec, uint64_t seed) {
  check_spec(spec);
  ParamCount pc = count_params(spec);
  if (pc.intractable)
    throw std::runtime_error("model intractable: " + pc.total.str() + " parameters (" +
                             sci5(pc.total) + ") exceeds cap");
  Model m;
  m.spec = spec;
  const int d = spec.d;
  if (spec.family != Family::PINN)
    m.basis = std::make_shared<const LagrangeBasis>(spec.p, spec.lo, spec.hi);

  uint64_t stream = 0;
  switch (spec.family) {
    case Family::PINN:
    case Family::HOrder: {
      int in = (spec.family == Family::PINN) ? d : int(std::pow(double(spec.p + 1), d) + 0.5);
      m.stack.push_back(make_layer(spec.W, in, spec.act, seed, stream++));
      for (int l = 1; l < spec.L; ++l)
        m.stack.push_back(make_layer(spec.W, spec.W, spec.act, seed, stream++));
      m.stack.push_back(make_layer(1, spec.W, Act::Identity, seed, stream++));
      break;
    }
    case Family::KHOrder: {
      const int od = 2 * d + 1;
      m.inner.push_back(make_layer(spec.hw, spec.p + 1, spec.act, seed, stream++));
      for (int l = 1; l < spec.hd; ++l)
        m.inner.push_back(make_layer(spec.hw, spec.hw, spec.act, seed, stream++));
      m.inner.push_back(make_layer(od, spec.hw, Act::Identity, seed, stream++));
      m.outer.push_back(make_layer(spec.gw, d * od, spec.act, seed, stream++));
      for (int l = 1; l < spec.gd; ++l)
        m.outer.push_back(make_layer(spec.gw, spec.gw, spec.act, seed, stream++));
      m.outer.push_back(make_layer(1, spec.gw, Act::Identity, seed, stream++));
      break;
    }
  }
  return m;
}

size_t param_count_walk(const Model& m) {
  size_t n = 0;
  for (const Stack* s : {&m.stack, &m.inner, &m.outer})
    for (const auto& l : *s) n += size_t(l.W.size()) + size_t(l.b.size());
  return n;
}

// -------- ModelGrad --------

void ModelGrad::init_like(const Model& m) {
  stack.init_like(m.stack);
  inner.init_like(m.inner);
  outer.init_like(m.outer);
}
void ModelGrad::set_zero() {
  stack.set_zero();
  inner.set_zero();
  outer.set_zero();
}
void ModelGrad::add(const ModelGrad& o) {
  stack.add(o.stack);
  inner.add(o.inner);
  outer.add(o.outer);
}
void ModelGrad::add_scaled(const ModelGrad& o, double s) {
  stack.add_scaled(o.stack, s);
  inner.add_scaled(o.inner, s);
  outer.add_scaled(o.outer, s);
}
double ModelGrad::max_abs() const {
  double m = 0.0;
  for (const StackGrad* g : {&stack, &inner, &outer}) {
    for (const auto& W : g->dW)
      if (W.size()) m = std::max(m, W.cwiseAbs().maxCoeff());
    for (const auto& b : g->db)
      if (b.size()) m = std::max(m, b.cwiseAbs().maxCoeff());
  }
  return m;
}
double ModelGrad::mean_abs() const {
  double s = 0.0;
  size_t n = 0;
  for (const StackGrad* g : {&stack, &inner, &outer}) {
    for (const auto& W : g->dW) { s += W.cwiseAbs().sum(); n += size_t(W.size()); }
    for (const auto& b : g->db) { s += b.cwiseAbs().sum(); n += size_t(b.size()); }
  }
  return n ? s / double(n) : 0.0;
}
size_t ModelGrad::entries() const {
  size_t n = 0;
  for (const StackGrad* g : {&stack, &inner, &outer}) {
    for (const auto& W : g->dW) n += size_t(W.size());
    for (const auto& b : g->db) n += size_t(b.size());
  }
  return n;
}

// -------- frontends --------

namespace {

// rough per-sample double count of a traced pass, to size chunks (~32 MB)
int pick_chunk(const Model& m, int channels, int B) {
  size_t per = 0;
  const int d = m.spec.d;
  for (const auto& l : m.stack) per += size_t(l.W.rows());
  for (const auto& l : m.inner) per += size_t(l.W.rows()) * d;
  for (const auto& l : m.outer) per += size_t(l.W.rows());
  if (m.spec.family == Family::HOrder) per += size_t(m.stack[0].W.cols());
  if (m.spec.family == Family::KHOrder) per += size_t(m.inner[0].W.cols()) * d;
  per = per * size_t(2 * channels) + 8 * size_t(d);
  int c = int(32e6 / 8.0 / double(per));
  c = std::max(16, std::min(c, 1024));
  return std::min(c, std::max(B, 1));
}

// value seeds
void pinn_seed_value(const Mat& X, Mat& F) { F = X; }

void horder_seed_value(const Model& m, const Mat& X, Mat& F) {
  const int d = m.spec.d;
  const int T = int(m.stack[0].W.cols());
  F.resize(T, X.cols());
  std::vector<double> buf(T);
  for (int s = 0; s < X.cols(); ++s) {
    tensor_basis(*m.basis, d, X.col(s).data(), buf.data());
    for (int i = 0; i < T; ++i) F(i, s) = buf[i];
  }
}

// jet seeds for the single-stack families
void pinn_seed_jet(const Mat& X, JetBatch& in) {
  const int d = int(X.rows()), B = int(X.cols());
  in.v = X;
  in.d1.assign(d, Mat::Zero(d, B));
  for (int k = 0; k < d; ++k) in.d1[k].row(k).setOnes();
  in.d2 = Mat::Zero(d, B);
}

void horder_seed_jet(const Model& m, const Mat& X, JetBatch& in) {
  const int d = m.spec.d, B = int(X.cols());
  const int T = int(m.stack[0].W.cols());
  in.v.resize(T, B);
  in.d1.assign(d, Mat(T, B));
  in.d2.resize(T, B);
  std::vector<double> v(T), d2(T);
  std::vector<std::vector<double>> d1;
  for (int s = 0; s < B; ++s) {
    std::vector<double> d2v;
    tensor_basis(*m.basis, d, X.col(s).data(), v.data(), &d1, &d2v);
    for (int i = 0; i < T; ++i) in.v(i, s) = v[i];
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < T; ++i) in.d1[k](i, s) = d1[k][i];
    for (int i = 0; i < T; ++i) in.d2(i, s) = d2v[i];
  }
}

// khorder: per-coordinate basis values, coordinate-major column blocks
// (column i*B + s holds psi(x_i) of sample s)
void khorder_basis_value(const Model& m, const Mat& X, Mat& F) {
  const int d = m.spec.d, B = int(X.cols()), P = m.spec.p + 1;
  F.resize(P, size_t(B) * d);
  for (int i = 0; i < d; ++i)
    for (int s = 0; s < B; ++s)
      m.basis->eval(X(i, s), F.col(size_t(i) * B + s).data());
}

void khorder_basis_jet(const Model& m, const Mat& X, JetBatch& in) {
  const int d = m.spec.d, B = int(X.cols()), P = m.spec.p + 1;
  in.v.resize(P, size_t(B) * d);
  in.d1.assign(1, Mat(P, size_t(B) * d));
  in.d2.resize(P, size_t(B) * d);
  for (int i = 0; i < d; ++i)
    for (int s = 0; s < B; ++s) {
      size_t c = size_t(i) * B + s;
      m.basis->eval_jet(X(i, s), in.v.col(c).data(), in.d1[0].col(c).data(),
                        in.d2.col(c).data());
    }
}

// gather the (2d+1) x (B*d) inner output into the d(2d+1) x B outer input
void khorder_concat(const Mat& innerOut, int d, int B, Mat& out) {
  const int od = int(innerOut.rows());
  out.resize(size_t(d) * od, B);
  for (int i = 0; i < d; ++i)
    out.middleRows(size_t(i) * od, od) = innerOut.middleCols(size_t(i) * B, B);
}

}  // namespace

// -------- evaluation --------

static Vec eval_chunked(const Model& m, const Mat& X,
                        const std::function<void(const Mat&, Vec&)>& run) {
  const int B = int(X.cols());
  const int chunk = pick_chunk(m, 1, B);
  Vec out(B);
  for (int s0 = 0; s0 < B; s0 += chunk) {
    int n = std::min(chunk, B - s0);
    Vec part;
    run(X.middleCols(s0, n), part);
    out.segment(s0, n) = part;
  }
  return out;
}

Vec model_eval(const Model& m, const Mat& X) {
  if (int(X.rows()) != m.spec.d) throw std::invalid_argument("model_eval: X rows != d");
  switch (m.spec.family) {
    case Family::PINN:
      return eval_chunked(m, X, [&](const Mat& Xc, Vec& out) {
        out = forward(m.stack, Xc).row(0).transpose();
      });
    case Family::HOrder:
      return eval_chunked(m, X, [&](const Mat& Xc, Vec& out) {
        Mat F;
        horder_seed_value(m, Xc, F);
        out = forward(m.stack, F).row(0).transpose();
      });
    case Family::KHOrder:
      return eval_chunked(m, X, [&](const Mat& Xc, Vec& out) {
        Mat F, Z;
        khorder_basis_value(m, Xc, F);
        Mat H = forward(m.inner, F);
        khorder_concat(H, m.spec.d, int(Xc.cols()), Z);
        out = forward(m.outer, Z).row(0).transpose();
      });
  }
  throw std::logic_error("bad family");
}

static void khorder_outer_jet_input(const Model& m, const JetBatch& innerOut, int B,
                                    JetBatch& z) {
  // inner d2/d1 channels are per-coordinate; direction k of the outer jet is
  // nonzero only in coordinate block k
  const int d = m.spec.d;
  const int od = int(innerOut.v.rows());
  khorder_concat(innerOut.v, d, B, z.v);
  khorder_concat(innerOut.d2, d, B, z.d2);
  z.d1.assign(d, Mat::Zero(size_t(d) * od, B));
  for (int k = 0; k < d; ++k)
    z.d1[k].middleRows(size_t(k) * od, od) = innerOut.d1[0].middleCols(size_t(k) * B, B);
}

void model_eval_lap(const Model& m, const Mat& X, Vec& u, Vec& lap) {
  if (int(X.rows()) != m.spec.d) throw std::invalid_argument("model_eval_lap: X rows != d");
  const int B = int(X.cols());
  const int chunk = pick_chunk(m, m.spec.d + 2, B);
  u.resize(B);
  lap.resize(B);
  for (int s0 = 0; s0 < B; s0 += chunk) {
    const int n = std::min(chunk, B - s0);
    const Mat Xc = X.middleCols(s0, n);
    JetBatch in, out;
    switch (m.spec.family) {
      case Family::PINN:
        pinn_seed_jet(Xc, in);
        jet_eval(m.stack, in, out);
        break;
      case Family::HOrder:
        horder_seed_jet(m, Xc, in);
        jet_eval(m.stack, in, out);
        break;
      case Family::KHOrder: {
        JetBatch bias, hout, z;
        khorder_basis_jet(m, Xc, bias);
        jet_eval(m.inner, bias, hout);
        khorder_outer_jet_input(m, hout, n, z);
        jet_eval(m.outer, z, out);
        break;
      }
    }
    u.segment(s0, n) = out.v.row(0).transpose();
    lap.segment(s0, n) = out.d2.row(0).transpose();
  }
}

// -------- chunk scheduling with order-stable reduction --------

namespace {

// Runs chunks in waves of `threads`; caller-provided reduce() is then invoked
// serially in chunk order, so results do not depend on the thread count.
void run_chunks(int nchunks, int threads,
                const std::function<void(int slot, int chunk)>& work,
                const std::function<void(int slot, int chunk)>& reduce) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int c = 0; c < nchunks; ++c) {
      work(0, c);
      reduce(0, c);
    }
    return;
  }
  for (int w0 = 0; w0 < nchunks; w0 += threads) {
    const int nw = std::min(threads, nchunks - w0);
    std::vector<std::thread> ts;
    ts.reserve(nw);
    for (int i = 0; i < nw; ++i) ts.emplace_back([&, i] { work(i, w0 + i); });
    for (auto& t : ts) t.join();
    for (int i = 0; i < nw; ++i) reduce(i, w0 + i);
  }
}

struct ChunkSlot {
  ModelGrad g;
  double loss_f = 0.0, loss_b = 0.0;
};

}  // namespace

double fit_loss_grad(const Model& m, const Mat& X, const Vec& y, ModelGrad& g, int threads) {
  const int B = int(X.cols());
  if (int(y.size()) != B) throw std::invalid_argument("fit_loss_grad: |y| != cols(X)");
  if (B == 0) throw std::invalid_argument("fit_loss_grad: empty batch");
  g.init_like(m);
  const int chunk = pick_chunk(m, 2, B);
  const int nchunks = (B + chunk - 1) / chunk;
  threads = std::max(1, std::min(threads, nchunks));
  std::vector<ChunkSlot> slots(threads);

  auto work = [&](int slot, int c) {
    ChunkSlot& sl = slots[slot];
    sl.g.init_like(m);
    const int s0 = c * chunk, n = std::min(chunk, B - s0);
    const Mat Xc = X.middleCols(s0, n);
    Eigen::RowVectorXd r;
    if (m.spec.family == Family::KHOrder) {
      Mat F, Z;
      khorder_basis_value(m, Xc, F);
      Trace ti, to;
      forward_trace(m.inner, F, ti);
      khorder_concat(ti.a.back(), m.spec.d, n, Z);
      const Mat& u = forward_trace(m.outer, Z, to);
      r = u.row(0) - y.segment(s0, n).transpose();
      sl.loss_f = r.squaredNorm();
      Mat adj = (2.0 / B) * r;
      Mat zadj = backward(m.outer, to, adj, sl.g.outer, true);
      Mat iadj(ti.a.back().rows(), size_t(n) * m.spec.d);
      const int od = int(iadj.rows());
      for (int i = 0; i < m.spec.d; ++i)
        iadj.middleCols(size_t(i) * n, n) = zadj.middleRows(size_t(i) * od, od);
      backward(m.inner, ti, iadj, sl.g.inner, false);
    } else {
      Mat F;
      if (m.spec.family == Family::PINN)
        pinn_seed_value(Xc, F);
      else
        horder_seed_value(m, Xc, F);
      Trace tr;
      const Mat& u = forward_trace(m.stack, F, tr);
      r = u.row(0) - y.segment(s0, n).transpose();
      sl.loss_f = r.squaredNorm();
      Mat adj = (2.0 / B) * r;
      backward(m.stack, tr, adj, sl.g.stack, false);
    }
  };
  double loss = 0.0;
  auto reduce = [&](int slot, int) {
    g.add(slots[slot].g);
    loss += slots[slot].loss_f;
  };
  run_chunks(nchunks, threads, work, reduce);
  return loss / B;
}

PdeLoss pde_loss_grad(const Model& m, PdeOp op, double k2, const Mat& Xf, const Vec& f,
                      const Mat& Xb, const Vec& gbv, ModelGrad& grad_f, ModelGrad& grad_b,
                      int threads) {
  const int Nf = int(Xf.cols()), Nb = int(Xb.cols());
  if (Nf == 0) throw std::invalid_argument("pde_loss_grad: empty interior batch");
  grad_f.init_like(m);
  grad_b.init_like(m);
  PdeLoss out;

  // ---- interior (jet) part ----
  {
    const int chunk = pick_chunk(m, m.spec.d + 2, Nf);
    const int nchunks = (Nf + chunk - 1) / chunk;
    const int T = std::max(1, std::min(threads, nchunks));
    std::vector<ChunkSlot> slots(T);
    auto work = [&](int slot, int c) {
      ChunkSlot& sl = slots[slot];
      sl.g.init_like(m);
      const int s0 = c * chunk, n = std::min(chunk, Nf - s0);
      const Mat Xc = Xf.middleCols(s0, n);
      Eigen::RowVectorXd u, lap, r;
      if (m.spec.family == Family::KHOrder) {
        JetBatch bj, z;
        khorder_basis_jet(m, Xc, bj);
        JetTrace ti, to;
        jet_forward(m.inner, bj, ti);
        JetBatch hout{ti.out().t, ti.out().a1, ti.out().a2};
        khorder_outer_jet_input(m, hout, n, z);
        jet_forward(m.outer, z, to);
        u = to.out().t.row(0);
        lap = to.out().a2.row(0);
        r = (op == PdeOp::Poisson) ? (-lap - f.segment(s0, n).transpose()).eval()
                                   : (lap + k2 * u - f.segment(s0, n).transpose()).eval();
        sl.loss_f = r.squaredNorm();
        JetBatch oadj;
        oadj.d1.resize(m.spec.d);  // zero adjoints for the first-derivative channels
        if (op == PdeOp::Poisson) {
          oadj.d2 = (-2.0 / Nf) * r;
        } else {
          oadj.d2 = (2.0 / Nf) * r;
          oadj.v = (2.0 * k2 / Nf) * r;
        }
        JetBatch zadj = jet_backward(m.outer, to, oadj, sl.g.outer, true);
        // split the outer input adjoint back into per-coordinate inner adjoints
        const int od = 2 * m.spec.d + 1;
        JetBatch iadj;
        iadj.v.resize(od, size_t(n) * m.spec.d);
        iadj.d1.assign(1, Mat(od, size_t(n) * m.spec.d));
        iadj.d2.resize(od, size_t(n) * m.spec.d);
        for (int i = 0; i < m.spec.d; ++i) {
          iadj.v.middleCols(size_t(i) * n, n) = zadj.v.middleRows(size_t(i) * od, od);
          iadj.d1[0].middleCols(size_t(i) * n, n) =
              zadj.d1[i].middleRows(size_t(i) * od, od);
          iadj.d2.middleCols(size_t(i) * n, n) = zadj.d2.middleRows(size_t(i) * od, od);
        }
        jet_backward(m.inner, ti, iadj, sl.g.inner, false);
      } else {
        JetBatch in;
        if (m.spec.family == Family::PINN)
          pinn_seed_jet(Xc, in);
        else
          horder_seed_jet(m, Xc, in);
        JetTrace tr;
        jet_forward(m.stack, in, tr);
        u = tr.out().t.row(0);
        lap = tr.out().a2.row(0);
        r = (op == PdeOp::Poisson) ? (-lap - f.segment(s0, n).transpose()).eval()
                                   : (lap + k2 * u - f.segment(s0, n).transpose()).eval();
        sl.loss_f = r.squaredNorm();
        JetBatch oadj;
        oadj.d1.resize(in.dirs());
        if (op == PdeOp::Poisson) {
          oadj.d2 = (-2.0 / Nf) * r;
        } else {
          oadj.d2 = (2.0 / Nf) * r;
          oadj.v = (2.0 * k2 / Nf) * r;
        }
        jet_backward(m.stack, tr, oadj, sl.g.stack, false);
      }
    };
    auto reduce = [&](int slot, int) {
      grad_f.add(slots[slot].g);
      out.lf += slots[slot].loss_f;
    };
    run_chunks(nchunks, T, work, reduce);
    out.lf /= Nf;
  }

  // ---- boundary (value) part ----
  if (Nb > 0) {
    const int chunk = pick_chunk(m, 2, Nb);
    const int nchunks = (Nb + chunk - 1) / chunk;
    const int T = std::max(1, std::min(threads, nchunks));
    std::vector<ChunkSlot> slots(T);
    auto work = [&](int slot, int c) {
      ChunkSlot& sl = slots[slot];
      sl.g.init_like(m);
      const int s0 = c * chunk, n = std::min(chunk, Nb - s0);
      const Mat Xc = Xb.middleCols(s0, n);
      Eigen::RowVectorXd r;
      if (m.spec.family == Family::KHOrder) {
        Mat F, Z;
        khorder_basis_value(m, Xc, F);
        Trace ti, to;
        forward_trace(m.inner, F, ti);
        khorder_concat(ti.a.back(), m.spec.d, n, Z);
        const Mat& u = forward_trace(m.outer, Z, to);
        r = u.row(0) - gbv.segment(s0, n).transpose();
        sl.loss_b = r.squaredNorm();
        Mat adj = (2.0 / Nb) * r;
        Mat zadj = backward(m.outer, to, adj, sl.g.outer, true);
        const int od = int(ti.a.back().rows());
        Mat iadj(od, size_t(n) * m.spec.d);
        for (int i = 0; i < m.spec.d; ++i)
          iadj.middleCols(size_t(i) * n, n) = zadj.middleRows(size_t(i) * od, od);
        backward(m.inner, ti, iadj, sl.g.inner, false);
      } else {
        Mat F;
        if (m.spec.family == Family::PINN)
          pinn_seed_value(Xc, F);
        else
          horder_seed_value(m, Xc, F);
        Trace tr;
        const Mat& u = forward_trace(m.stack, F, tr);
        r = u.row(0) - gbv.segment(s0, n).transpose();
        sl.loss_b = r.squaredNorm();
        Mat adj = (2.0 / Nb) * r;
        backward(m.stack, tr, adj, sl.g.stack, false);
      }
    };
    auto reduce = [&](int slot, int) {
      grad_b.add(slots[slot].g);
      out.lb += slots[slot].loss_b;
    };
    run_chunks(nchunks, T, work, reduce);
    out.lb /= Nb;
  }
  return out;
}

}  // namespace kho
