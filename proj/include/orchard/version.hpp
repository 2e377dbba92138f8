#pragma once

namespace orchard {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace orchard
