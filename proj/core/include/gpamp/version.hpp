#pragma once

#include <cstdint>

namespace gpamp {

inline constexpr const char* kVersion = "1.0.0";

// Default seed used by every tool entry point when the caller does not
// provide one. Fixed so repeated runs are reproducible out of the box.
inline constexpr std::uint64_t kDefaultSeed = 12345;

}  // namespace gpamp
