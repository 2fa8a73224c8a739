#pragma once
#include <string>
#include <vector>

#include "kho/model.hpp"
#include "kho/train.hpp"

namespace kho {

// Flat key=value run description with [run]/[model]/[train]/[rates] sections.
// Unknown sections or keys are rejected.  Resolution order: built-in defaults,
// then the preset table for the problem, then every key present in the file.
// The emitted manifest lists all resolved keys, so re-parsing a manifest
// reproduces the configuration exactly.
struct RunConfig {
  // [run]
  std::string problem = "fit2d_eq41";
  int jmax = -1;  // -1 keeps the problem default
  std::string preset;  // "", "desk", "paper"
  std::string out;     // empty: $KHO_OUT_ROOT (or "runs") / problem
  std::vector<uint64_t> seeds = {1};
  int threads = 1;
  // [model] (d, lo, hi come from the problem, not the file)
  ModelSpec model;
  // [train]
  TrainConfig train;
  // [rates]
  std::string sweep = "vary_n";
  std::vector<double> values;
  std::vector<double> synthetic_errs;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// full resolved config in the same grammar (valid parse_config input)
std::string manifest_of(const RunConfig& cfg);

// preset rows for a problem id (architecture + sampling used by the reference
// experiments; desk scale halves widths, caps epochs at 5000, sets jmax=2)
void apply_preset(RunConfig& cfg, const std::string& preset);

// output directory after the KHO_OUT_ROOT rule
std::string resolve_out_dir(const RunConfig& cfg);

}  // namespace kho
