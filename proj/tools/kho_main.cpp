#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kho/runner.hpp"

using namespace kho;

namespace {

struct Common {
  std::string config, preset, out;
  int threads = 0;
  uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
  auto* opt = cmd->add_option("--config", c.config, "run configuration file");
  if (need_config) opt->required();
  cmd->add_option("--preset", c.preset, "override preset (desk|paper)");
  cmd->add_option("--out", c.out, "override output directory");
  cmd->add_option("--threads", c.threads, "override worker thread count");
  cmd->add_option("--seed", c.seed, "run only this seed")->each([&](const std::string&) {
    c.seed_set = true;
  });
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (!c.preset.empty()) {
    cfg.preset = c.preset;  // command line wins over the file's architecture
    apply_preset(cfg, c.preset);
  }
  if (!c.out.empty()) cfg.out = c.out;
  if (c.threads > 0) cfg.threads = c.threads;
  if (c.seed_set) cfg.seeds = {c.seed};
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"high-order Kolmogorov-superposition networks for fitting and PDEs"};
  app.require_subcommand(1);

  // ---- count-params: direct spec flags, no config needed ----
  auto* cp = app.add_subcommand("count-params", "closed-form trainable parameter count");
  std::string family = "khorder", act = "tanh";
  ModelSpec spec;
  cp->add_option("--family", family, "pinn|horder|khorder");
  cp->add_option("--d", spec.d, "input dimension");
  cp->add_option("--act", act, "relu|tanh|identity");
  cp->add_option("--p", spec.p, "basis order");
  cp->add_option("--L", spec.L, "hidden depth (pinn/horder)");
  cp->add_option("--W", spec.W, "hidden width (pinn/horder)");
  cp->add_option("--hd", spec.hd, "inner depth");
  cp->add_option("--hw", spec.hw, "inner width");
  cp->add_option("--gd", spec.gd, "outer depth");
  cp->add_option("--gw", spec.gw, "outer width");

  Common cfit, csolve, crates, cspec, cslice;
  auto* fit = app.add_subcommand("fit", "train on a function-fitting target");
  add_common(fit, cfit, true);
  auto* solve = app.add_subcommand("solve", "train on a Poisson/Helmholtz problem");
  add_common(solve, csolve, true);
  auto* rates = app.add_subcommand("rates", "convergence-rate sweep");
  add_common(rates, crates, true);
  auto* spectrum = app.add_subcommand("spectrum", "frequency content of a saved model");
  add_common(spectrum, cspec, true);
  auto* slice = app.add_subcommand("slice", "pointwise error slice of a saved model");
  add_common(slice, cslice, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cp->parsed()) {
      spec.family = family_from_string(family);
      spec.act = act_from_string(act);
      std::cout << count_params_line(spec) << "\n";
      return 0;
    }
    if (fit->parsed()) return run_train_command(resolve(cfit), true);
    if (solve->parsed()) return run_train_command(resolve(csolve), false);
    if (rates->parsed()) return run_rates_command(resolve(crates));
    if (spectrum->parsed()) {
      RunConfig cfg = resolve(cspec);
      return run_spectrum_command(cfg, cspec.seed_set ? cspec.seed : cfg.seeds.at(0));
    }
    if (slice->parsed()) {
      RunConfig cfg = resolve(cslice);
      return run_slice_command(cfg, cslice.seed_set ? cslice.seed : cfg.seeds.at(0));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
