#include "kho/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "kho/checkpoint.hpp"
#include "kho/diag.hpp"
#include "kho/problem.hpp"
#include "kho/theory.hpp"

namespace fs = std::filesystem;

namespace kho {

ModelSpec spec_for(const RunConfig& cfg, const Problem& prob) {
  ModelSpec s = cfg.model;
  s.d = prob.dom.d;
  s.lo = prob.basis_lo;
  s.hi = prob.basis_hi;
  return s;
}

std::string seed_dir(const std::string& out, uint64_t seed) {
  return out + "/seed" + std::to_string(seed);
}

std::string count_params_line(const ModelSpec& spec) {
  ParamCount pc = count_params(spec);
  std::string line = pc.total.str() + " (" + sci5(pc.total) + ")";
  if (pc.intractable) line += " intractable";
  return line;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int run_train_command(const RunConfig& cfg, bool expect_fit) {
  Problem prob = make_problem(cfg.problem, cfg.jmax);
  if (expect_fit != (prob.kind == PKind::Fit)) {
    std::cerr << "problem '" << cfg.problem << "' is a "
              << (prob.kind == PKind::Fit ? "fitting target: use `kho fit`"
                                          : "PDE: use `kho solve`")
              << "\n";
    return 1;
  }
  ModelSpec spec = spec_for(cfg, prob);
  ParamCount pc = count_params(spec);
  if (pc.intractable) {
    std::cerr << "model is intractable at " << sci5(pc.total) << " parameters; not training\n";
    return 1;
  }

  const std::string out = resolve_out_dir(cfg);
  fs::create_directories(out);
  write_text(out + "/manifest.txt", manifest_of(cfg));

  struct Row {
    uint64_t seed;
    TrainResult res;
  };
  std::vector<Row> rows;
  bool any_diverged = false;

  for (uint64_t seed : cfg.seeds) {
    const std::string dir = seed_dir(out, seed);
    fs::create_directories(dir);
    Model model = build_model(spec, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.threads = cfg.threads;
    TrainResult res = train(model, prob, tc);
    write_train_csv(dir + "/train.csv", res.records);
    save_checkpoint(dir + "/checkpoint.bin", model);
    write_text(dir + "/timing.txt",
               "seconds " + fmt_g17(res.secs) + "\nepochs " + std::to_string(res.epochs_run) +
                   (res.diverged ? "\naborted non-finite-loss\n" : "\n"));
    if (prob.kind == PKind::Fit && prob.dom.d == 2 && prob.dom.kind == Domain::Cube)
      write_spectrum_csv(dir + "/spectrum.csv", spectrum2d(model, prob));
    if (prob.dom.d > 2) write_slice_csv(dir + "/slice.csv", slice_errors(model, prob));
    any_diverged = any_diverged || res.diverged;
    std::cout << cfg.problem << " seed " << seed << ": min REL " << res.min_rel << " (epoch "
              << res.min_rel_epoch << "), final " << res.final_rel
              << (res.diverged ? " [aborted]" : "") << "\n";
    rows.push_back({seed, std::move(res)});
  }

  std::ofstream rep(out + "/report.csv");
  rep << "problem,family,act,p,params,seed,min_rel,min_rel_epoch,final_rel,diverged\n";
  const std::string head = cfg.problem + "," + family_name(spec.family) + "," +
                           act_name(spec.act) + "," + std::to_string(spec.p) + "," +
                           pc.total.str() + ",";
  std::vector<double> mins;
  for (const auto& r : rows) {
    rep << head << r.seed << ',' << fmt_g17(r.res.min_rel) << ',' << r.res.min_rel_epoch << ','
        << fmt_g17(r.res.final_rel) << ',' << (r.res.diverged ? 1 : 0) << '\n';
    mins.push_back(r.res.min_rel);
  }
  std::sort(mins.begin(), mins.end());
  size_t h = mins.size() / 2;
  double med = mins.size() % 2 ? mins[h] : 0.5 * (mins[h - 1] + mins[h]);
  rep << head << "median," << fmt_g17(med) << ",,,\n";
  return any_diverged ? 2 : 0;
}

int run_rates_command(const RunConfig& cfg) {
  Problem prob = make_problem(cfg.problem, cfg.jmax);
  RateConfig rc;
  rc.sweep = cfg.sweep;
  rc.values = cfg.values;
  rc.base = spec_for(cfg, prob);
  rc.train = cfg.train;
  rc.train.threads = cfg.threads;
  rc.seeds = cfg.seeds;
  rc.synthetic_errs = cfg.synthetic_errs;
  RateResult res = rate_experiment(prob, rc);

  const std::string out = resolve_out_dir(cfg);
  fs::create_directories(out);
  write_text(out + "/manifest.txt", manifest_of(cfg));
  write_rates_csv(out + "/rates.csv", res.sizes, res.errs, res.slope);
  std::cout << cfg.sweep << " slope " << res.slope << "\n";
  return 0;
}

int run_spectrum_command(const RunConfig& cfg, uint64_t seed) {
  Problem prob = make_problem(cfg.problem, cfg.jmax);
  const std::string dir = seed_dir(resolve_out_dir(cfg), seed);
  Model model = load_checkpoint(dir + "/checkpoint.bin");
  write_spectrum_csv(dir + "/spectrum.csv", spectrum2d(model, prob));
  std::cout << "wrote " << dir << "/spectrum.csv\n";
  return 0;
}

int run_slice_command(const RunConfig& cfg, uint64_t seed) {
  Problem prob = make_problem(cfg.problem, cfg.jmax);
  const std::string dir = seed_dir(resolve_out_dir(cfg), seed);
  Model model = load_checkpoint(dir + "/checkpoint.bin");
  write_slice_csv(dir + "/slice.csv", slice_errors(model, prob));
  std::cout << "wrote " << dir << "/slice.csv\n";
  return 0;
}

}  // namespace kho
