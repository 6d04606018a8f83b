#pragma once

namespace mspsa {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mspsa
