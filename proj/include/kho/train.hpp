#pragma once
#include <limits>
#include <vector>

#include "kho/model.hpp"
#include "kho/problem.hpp"

namespace kho {

enum class BetaMode : int { Annealed = 0, Fixed = 1 };

struct TrainConfig {
  int epochs = 10000;
  int nf = 5000, nb = 1000;  // fresh draws every epoch; nb ignored for Fit
  double lr0 = 4e-3;
  double decay = 0.9;
  int decay_every = 1000;           // lr(t) = lr0 * decay^floor(t/decay_every)
  BetaMode beta_mode = BetaMode::Annealed;
  double beta0 = 1.0;               // Fixed mode: the constant weight
  int anneal_every = 10;
  double anneal_alpha = 0.1;
  int rel_every = 500;              // eval-grid error cadence (plus final epoch)
  uint64_t seed = 0;
  int threads = 1;
  bool analytic_rhs = true;  // prefer the closed-form f; fall back to jets
};

double lr_at(const TrainConfig& cfg, int epoch);

struct TrainRecord {
  int epoch = 0;
  double lf = 0.0, lb = 0.0;  // lb = 0 for Fit
  double beta = 0.0, lr = 0.0;
  double rel = std::numeric_limits<double>::quiet_NaN();  // NaN when skipped
  double secs = 0.0;  // wall time since train() started
};

struct TrainResult {
  std::vector<TrainRecord> records;
  double min_rel = std::numeric_limits<double>::infinity();
  int min_rel_epoch = -1;
  double final_rel = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;  // non-finite loss hit; training aborted there
  int epochs_run = 0;
  double secs = 0.0;
};

// Adam with bias correction; step() increments the internal step counter
struct AdamOpt {
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;
  ModelGrad m, v;
  void init(const Model& model);
  void step(Model& model, const ModelGrad& g, double lr);
};

// Resample-every-epoch training loop.  Interior draws use rng stream 1,
// boundary draws stream 2; the streams persist across epochs.  Deterministic
// for a fixed seed regardless of cfg.threads.
TrainResult train(Model& model, const Problem& prob, const TrainConfig& cfg);

}  // namespace kho
