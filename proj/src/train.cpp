#include "kho/train.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace kho {

double lr_at(const TrainConfig& cfg, int epoch) {
  return cfg.lr0 * std::pow(cfg.decay, double(epoch / cfg.decay_every));
}

// -------- Adam --------

void AdamOpt::init(const Model& model) {
  t = 0;
  m.init_like(model);
  v.init_like(model);
}

namespace {

void adam_arrays(Mat& th, const Mat& g, Mat& m, Mat& v, double lr, double b1, double b2,
                 double eps, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * g;
  v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
  th.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}
void adam_arrays(Vec& th, const Vec& g, Vec& m, Vec& v, double lr, double b1, double b2,
                 double eps, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * g;
  v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
  th.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void adam_stack(Stack& s, const StackGrad& g, StackGrad& m, StackGrad& v, double lr, double b1,
                double b2, double eps, double c1, double c2) {
  for (size_t l = 0; l < s.size(); ++l) {
    adam_arrays(s[l].W, g.dW[l], m.dW[l], v.dW[l], lr, b1, b2, eps, c1, c2);
    adam_arrays(s[l].b, g.db[l], m.db[l], v.db[l], lr, b1, b2, eps, c1, c2);
  }
}

}  // namespace

void AdamOpt::step(Model& model, const ModelGrad& g, double lr) {
  ++t;
  const double c1 = 1.0 - std::pow(b1, double(t));  // bias corrections
  const double c2 = 1.0 - std::pow(b2, double(t));
  adam_stack(model.stack, g.stack, m.stack, v.stack, lr, b1, b2, eps, c1, c2);
  adam_stack(model.inner, g.inner, m.inner, v.inner, lr, b1, b2, eps, c1, c2);
  adam_stack(model.outer, g.outer, m.outer, v.outer, lr, b1, b2, eps, c1, c2);
}

// -------- training loop --------

TrainResult train(Model& model, const Problem& prob, const TrainConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto secs = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  if (cfg.epochs < 0) throw std::invalid_argument("negative epoch count");
  const bool is_fit = prob.kind == PKind::Fit;
  if (!is_fit && cfg.nb <= 0) throw std::invalid_argument("pde training needs boundary points");
  if (cfg.nf <= 0) throw std::invalid_argument("training needs interior points");

  TrainResult res;
  Rng r_int(cfg.seed, 1), r_bnd(cfg.seed, 2);
  AdamOpt adam;
  adam.init(model);

  // fixed error grid, sampled once up front
  const Mat G = prob.dom.eval_grid();
  const Vec ustar = prob.exact_on(G);
  const double ustar_norm = ustar.norm();
  auto eval_rel = [&] {
    Vec u = model_eval(model, G);
    return (u - ustar).norm() / ustar_norm;
  };

  const bool use_jet = !(cfg.analytic_rhs && prob.rhs);
  const PdeOp op = prob.kind == PKind::Helmholtz ? PdeOp::Helmholtz : PdeOp::Poisson;
  double beta = cfg.beta0;

  ModelGrad grad, grad_b;
  grad.init_like(model);
  if (!is_fit) grad_b.init_like(model);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(cfg, epoch);
    TrainRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;

    double total;
    if (is_fit) {
      Mat X = prob.dom.sample_interior(r_int, cfg.nf);
      Vec y = prob.exact_on(X);
      grad.set_zero();
      rec.lf = fit_loss_grad(model, X, y, grad, cfg.threads);
      total = rec.lf;
    } else {
      Mat Xf = prob.dom.sample_interior(r_int, cfg.nf);
      Vec f = prob.rhs_on(Xf, use_jet);
      Mat Xb = prob.dom.sample_boundary(r_bnd, cfg.nb);
      Vec gb = prob.exact_on(Xb);
      grad.set_zero();
      grad_b.set_zero();
      PdeLoss pl = pde_loss_grad(model, op, prob.k2, Xf, f, Xb, gb, grad, grad_b, cfg.threads);
      rec.lf = pl.lf;
      rec.lb = pl.lb;
      if (cfg.beta_mode == BetaMode::Annealed && epoch > 0 && epoch % cfg.anneal_every == 0) {
        // balance rule: the proposal max|grad Lf| / mean|grad(beta*Lb)| leaves
        // beta fixed exactly when the two scaled terms already have identical
        // gradient scales, and is self-limiting (no runaway as Lb -> 0)
        double denom = beta * grad_b.mean_abs();
        if (denom > 0.0)
          beta = (1.0 - cfg.anneal_alpha) * beta + cfg.anneal_alpha * grad.max_abs() / denom;
      }
      grad.add_scaled(grad_b, beta);
      total = pl.lf + beta * pl.lb;
    }
    rec.beta = is_fit ? 0.0 : beta;

    if (!std::isfinite(total)) {
      rec.secs = secs();
      res.records.push_back(rec);
      res.diverged = true;
      res.epochs_run = epoch;
      break;
    }

    adam.step(model, grad, lr);
    res.epochs_run = epoch + 1;

    const bool last = epoch + 1 == cfg.epochs;
    if (cfg.rel_every > 0 && (epoch % cfg.rel_every == 0 || last)) {
      rec.rel = eval_rel();
      if (rec.rel < res.min_rel) {
        res.min_rel = rec.rel;
        res.min_rel_epoch = epoch;
      }
      if (last) res.final_rel = rec.rel;
    }
    rec.secs = secs();
    res.records.push_back(rec);
  }

  if (cfg.epochs == 0 && cfg.rel_every > 0) {
    res.final_rel = eval_rel();
    res.min_rel = res.final_rel;
    res.min_rel_epoch = 0;
  }
  res.secs = secs();
  return res;
}

}  // namespace kho
