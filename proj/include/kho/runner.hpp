#pragma once
#include <string>

#include "kho/config.hpp"
#include "kho/problem.hpp"

namespace kho {

// exit codes: 0 done, 1 bad input, 2 training aborted on a non-finite loss
int run_train_command(const RunConfig& cfg, bool expect_fit);
int run_rates_command(const RunConfig& cfg);
// recompute diagnostics from a saved checkpoint under <out>/seed<k>/
int run_spectrum_command(const RunConfig& cfg, uint64_t seed);
int run_slice_command(const RunConfig& cfg, uint64_t seed);

// "135451 (1.3545E+05)", plus an intractable flag when above the build cap
std::string count_params_line(const ModelSpec& spec);

// the model spec resolved against a problem (dimension and basis interval)
ModelSpec spec_for(const RunConfig& cfg, const Problem& prob);

std::string seed_dir(const std::string& out, uint64_t seed);

}  // namespace kho
