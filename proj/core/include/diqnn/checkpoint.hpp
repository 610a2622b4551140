#pragma once

#include <string>

#include "diqnn/model.hpp"

namespace diqnn {

/// Versioned little-endian binary serialization of a network; parameters are
/// raw 64-bit doubles, so save/load round-trips are bit-exact.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

} // namespace diqnn
