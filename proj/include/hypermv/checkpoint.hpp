#pragma once

#include <string>

#include "hypermv/optim.hpp"

namespace hypermv {

// Parameter checkpoint, versioned binary, little-endian.
// Layout: magic "HMV1", then one record per parameter until EOF:
//   u32 name length, name bytes, u32 axis count, u32 axes, raw f64 values.

void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace hypermv
