#pragma once
#include <string>

#include "kho/model.hpp"

namespace kho {

// Versioned container: a plain-text header (spec fields, then one line per
// array with its shape, in stack/inner/outer walk order) followed by the raw
// little-endian float64 payload.  Round-trips bitwise.
void save_checkpoint(const std::string& path, const Model& m);
Model load_checkpoint(const std::string& path);

}  // namespace kho
